use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use sampdisc::design::CollectionSpec;
use sampdisc::discretize::{disc_constants, DiscOptions, PointSet};
use sampdisc::fnspace::{fa, Point, Space, SpaceSpec, Target};
use sampdisc::harness::{self, ExperimentConfig, ExperimentReport};
use sampdisc::matrixtools::{opnorm_rp, orthonormal_columns, select_rdi_rows};
use sampdisc::optim::RatioOptions;
use sampdisc::recovery::{lebesgue_audit, AuditInstance, AuditModel, Theorem};
use sampdisc::serial::{CoefVector, MatrixData};
use sampdisc::{Error, Exponent};

#[derive(Parser)]
#[command(name = "sampdisc", version, about = "Sampling discretization constants, recovery audits and experiments")]
struct Cli {
    /// JSON configuration for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true, env = "SAMPDISC_SEED")]
    seed: Option<u64>,
    /// Output file (a directory for `experiment`). Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dimension, Christoffel maximum and Nikol'skii (2, ∞) constant of a space.
    Space,
    /// Generate a point set on a space's domain.
    Points,
    /// LDI/RDI constants of a space at a point set.
    Disc,
    /// Operator norms and greedy row selection for a matrix.
    Matrix,
    /// Recovery audit of one theorem on one instance.
    Recover,
    /// Rerun the config embedded in a report and compare byte for byte.
    Verify {
        /// Report JSON written by `experiment`.
        report: Option<PathBuf>,
    },
    /// Run a registered experiment.
    Experiment {
        /// Experiment name; `list` prints the registry.
        name: Option<String>,
        /// Parameter override `key=json`, repeatable.
        #[arg(long = "param", value_name = "KEY=JSON")]
        params: Vec<String>,
    },
}

/// Exit status: 0 all audits pass, 1 a violation, 2 invalid input.
enum Failure {
    Violation(String),
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Space => space_cmd(&cli),
        Command::Points => points_cmd(&cli),
        Command::Disc => disc_cmd(&cli),
        Command::Matrix => matrix_cmd(&cli),
        Command::Recover => recover_cmd(&cli),
        Command::Verify { report } => verify_cmd(&cli, report.as_deref()),
        Command::Experiment { name, params } => experiment_cmd(&cli, name.as_deref(), params),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(msg)) => {
            eprintln!("violation: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_config<T: for<'de> Deserialize<'de>>(cli: &Cli) -> Result<T, Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::Invalid("--config <path> is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn emit(cli: &Cli, value: &impl Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(value)?;
    match &cli.out {
        Some(path) => fs::write(path, text + "\n").map_err(|e| Failure::Invalid(format!("{}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn ratio_options(cli: &Cli, restarts: Option<usize>, seed: u64) -> RatioOptions {
    let mut o = RatioOptions::with_seed(cli.seed.unwrap_or(seed));
    if let Some(r) = restarts {
        o.restarts = r;
    }
    o
}

fn space_cmd(cli: &Cli) -> Outcome {
    let spec: SpaceSpec = read_config(cli)?;
    let space = Space::from_spec(&spec)?;
    let ni = space.nikolskii(Exponent::TWO, Exponent::INF, &RatioOptions::default())?;
    let (kmax, at) = space.max_christoffel();
    emit(
        cli,
        &serde_json::json!({
            "N": space.dim(),
            "field": space.field(),
            "gram_exact": space.gram_is_exact(),
            "max_christoffel": kmax,
            "max_christoffel_at": at,
            "nikolskii_2_inf": ni.value,
            "spec": spec,
        }),
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "method")]
enum PointsMethod {
    /// The domain's equispaced grid of `m` points.
    Equispaced { m: usize },
    /// `m` independent draws from the domain's measure.
    Random { m: usize },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointsConfig {
    space: SpaceSpec,
    pointset: PointsMethod,
    #[serde(default)]
    seed: u64,
}

fn generate(space: &Space, method: &PointsMethod, seed: u64) -> PointSet {
    match *method {
        PointsMethod::Equispaced { m } => PointSet::new(space.domain().equispaced(m)),
        PointsMethod::Random { m } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ps = PointSet::new((0..m).map(|_| space.domain().sample(&mut rng)).collect());
            ps.seed = Some(seed);
            ps
        }
    }
}

fn points_cmd(cli: &Cli) -> Outcome {
    let cfg: PointsConfig = read_config(cli)?;
    let space = Space::from_spec(&cfg.space)?;
    let ps = generate(&space, &cfg.pointset, cli.seed.unwrap_or(cfg.seed));
    ps.validate()?;
    space.domain().check_points(&ps.points)?;
    emit(cli, &ps)
}

/// A point set given explicitly or by a generation rule.
#[derive(Deserialize)]
#[serde(untagged)]
enum PointsSource {
    Explicit(PointSet),
    Rule(PointsMethod),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DiscConfig {
    space: SpaceSpec,
    pointset: PointsSource,
    #[serde(default = "two")]
    p: Exponent,
    #[serde(default = "two")]
    q: Exponent,
    #[serde(default)]
    restarts: Option<usize>,
    #[serde(default)]
    seed: u64,
}

fn two() -> Exponent {
    Exponent::TWO
}

fn resolve_points(space: &Space, src: PointsSource, seed: u64) -> PointSet {
    match src {
        PointsSource::Explicit(ps) => ps,
        PointsSource::Rule(method) => generate(space, &method, seed),
    }
}

fn disc_cmd(cli: &Cli) -> Outcome {
    let cfg: DiscConfig = read_config(cli)?;
    let space = Space::from_spec(&cfg.space)?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    let ps = resolve_points(&space, cfg.pointset, seed);
    let opts = DiscOptions {
        ratio: ratio_options(cli, cfg.restarts, seed),
        ..Default::default()
    };
    let report = disc_constants(&space, &ps, cfg.p, cfg.q, &opts)?;
    emit(cli, &report)?;
    match report.margins.chaining {
        Some(c) if c < -1e-9 => Err(Failure::Violation(format!("D_L·D_R − 1 = {c:e}"))),
        _ => Ok(()),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixConfig {
    matrix: MatrixData,
    /// `(r, p)` pairs for `‖A‖_{r→p}`.
    #[serde(default)]
    norms: Vec<(Exponent, Exponent)>,
    /// Greedy row count for the column-orthonormalised matrix.
    #[serde(default)]
    select_rows: Option<usize>,
}

fn matrix_cmd(cli: &Cli) -> Outcome {
    let cfg: MatrixConfig = read_config(cli)?;
    let a = cfg.matrix.to_cmat();
    if a.nrows() == 0 || a.ncols() == 0 || cfg.matrix.re.iter().any(|r| r.len() != a.ncols()) {
        return Err(Failure::Invalid("matrix must be a non-empty rectangular table".into()));
    }
    let norms: Vec<Value> = cfg
        .norms
        .iter()
        .map(|&(r, p)| serde_json::json!({"r": r, "p": p, "value": harness::num(opnorm_rp(&a, r, p))}))
        .collect();
    let selection = match cfg.select_rows {
        Some(m) => Some(select_rdi_rows(&orthonormal_columns(&a)?, m)?),
        None => None,
    };
    emit(
        cli,
        &serde_json::json!({"rows": a.nrows(), "cols": a.ncols(), "norms": norms, "selection": selection}),
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
enum TargetSpec {
    /// `Σ c_i φ_i` over the model's system or dictionary.
    Element { coefficients: CoefVector },
    /// The plateau function `f_a` on `[0, 1]`.
    Fa { a: f64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum ModelSpec {
    Subspace(SpaceSpec),
    Sparse(CollectionSpec),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecoverConfig {
    theorem: String,
    model: ModelSpec,
    pointset: PointsSource,
    target: TargetSpec,
    #[serde(default = "two")]
    p: Exponent,
    #[serde(default)]
    restarts: Option<usize>,
    #[serde(default)]
    seed: u64,
}

fn recover_cmd(cli: &Cli) -> Outcome {
    let cfg: RecoverConfig = read_config(cli)?;
    let theorem = Theorem::parse(&cfg.theorem)?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    let (model, system, domain_space) = match cfg.model {
        ModelSpec::Subspace(spec) => {
            let space = Space::from_spec(&spec)?;
            (AuditModel::Subspace(space.clone()), spec.system, space)
        }
        ModelSpec::Sparse(col) => {
            col.validate()?;
            let space = Space::new(col.dictionary.clone(), col.domain.clone())?;
            (AuditModel::Sparse(col.clone()), col.dictionary, space)
        }
    };
    let target = match cfg.target {
        TargetSpec::Element { coefficients } => {
            if coefficients.len() != system.len() {
                return Err(Failure::Invalid(format!(
                    "target has {} coefficients, the system has {}",
                    coefficients.len(),
                    system.len()
                )));
            }
            Target::element(&system, &coefficients.to_cvec())
        }
        TargetSpec::Fa { a } => {
            if !(a > 0.0 && a <= 0.5) {
                return Err(Failure::Invalid(format!("f_a needs 0 < a ≤ 1/2, got {a}")));
            }
            Target::real(format!("f_{a}"), move |x: &Point| fa(a, x.coords()[0]))
        }
    };
    let inst = AuditInstance {
        model,
        pointset: resolve_points(&domain_space, cfg.pointset, seed),
        target,
        p: cfg.p,
        opts: ratio_options(cli, cfg.restarts, seed),
    };
    let report = lebesgue_audit(theorem, &inst)?;
    emit(cli, &report)?;
    match report.violations() {
        0 => Ok(()),
        k => Err(Failure::Violation(format!("{k} audit line(s) fail"))),
    }
}

fn verify_cmd(cli: &Cli, report: Option<&Path>) -> Outcome {
    let path = report
        .or(cli.config.as_deref())
        .ok_or_else(|| Failure::Invalid("a report path is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let saved: ExperimentReport = serde_json::from_str(&text)?;
    let rerun = harness::run_experiment(&saved.name, &saved.config)?;
    let same = rerun.to_json()? == saved.to_json()?;
    emit(
        cli,
        &serde_json::json!({"name": saved.name, "identical": same, "pass": rerun.pass, "violations": rerun.violations}),
    )?;
    if !same {
        Err(Failure::Violation(format!("rerun of {} differs from {}", saved.name, path.display())))
    } else if !rerun.pass {
        Err(Failure::Violation(format!("{} has {} failing case(s)", saved.name, rerun.violations)))
    } else {
        Ok(())
    }
}

fn experiment_cmd(cli: &Cli, name: Option<&str>, params: &[String]) -> Outcome {
    if name == Some("list") {
        for e in harness::REGISTRY {
            println!("{:<18} {}", e.name, e.about);
        }
        return Ok(());
    }
    let mut cfg = match (&cli.config, name) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(n)) => ExperimentConfig::new(n),
        (None, None) => return Err(Failure::Invalid("an experiment name or --config is required".into())),
    };
    if let Some(n) = name {
        if cli.config.is_some() && n != cfg.name {
            return Err(Failure::Invalid(format!("name {n} does not match config name {}", cfg.name)));
        }
    }
    for kv in params {
        let (k, v) = kv.split_once('=').ok_or_else(|| Failure::Invalid(format!("--param {kv}: expected KEY=JSON")))?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        cfg.params.insert(k.to_string(), value);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    let report = harness::run_experiment(&cfg.name, &cfg)?;
    match &cfg.out {
        Some(dir) => {
            let (json, csv) = report.write_to(dir)?;
            eprintln!("wrote {} and {}", json.display(), csv.display());
        }
        None => println!("{}", report.to_json()?),
    }
    eprintln!(
        "{}: {} cases, {} violation(s), min slack {}, {:.2?}",
        report.name,
        report.cases.len(),
        report.violations,
        report.min_slack.map_or("-".to_string(), |s| format!("{s:e}")),
        report.wall_clock
    );
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Violation(format!("{} failing case(s)", report.violations)))
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    use super::*;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn seed_variable_matches_the_harness() {
        let cmd = Cli::command();
        let seed = cmd.get_arguments().find(|a| a.get_id() == "seed").unwrap();
        assert_eq!(seed.get_env().and_then(|s| s.to_str()), Some(harness::SEED_ENV));
    }
}
