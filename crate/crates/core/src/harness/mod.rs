//! Experiment registry, configuration and reports.
//!
//! An experiment reads its parameters from an [`ExperimentConfig`], draws
//! every random quantity from per-task seeds derived from the master seed,
//! and returns an [`ExperimentReport`] whose JSON is a pure function of the
//! resolved configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::discretize::PointSet;
use crate::error::{Error, Result};
use crate::fnspace::{Space, SpaceSpec};
use crate::optim::RatioOptions;
use crate::rng::{derive_seed, SEED_SCHEME};
use crate::scalar::Exponent;

mod experiments;

pub use experiments::REGISTRY;

pub const SCHEMA: u32 = 1;

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "SAMPDISC_SEED";

fn schema_default() -> u32 {
    SCHEMA
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_default")]
    pub schema: u32,
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pointset: Option<PointSet>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    /// Directory receiving `<name>.json` and `<name>.csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>) -> Self {
        ExperimentConfig {
            schema: SCHEMA,
            name: name.into(),
            seed: 0,
            space: None,
            pointset: None,
            params: BTreeMap::new(),
            out: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn param(mut self, key: &str, value: Value) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text)?;
        if c.schema != SCHEMA {
            return Err(Error::InvalidParameters(format!("unsupported schema {}", c.schema)));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Reads [`SEED_ENV`] if set.
pub fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidParameters(format!("{SEED_ENV} = {s:?} is not a u64"))),
        Err(_) => Ok(None),
    }
}

/// One row of an experiment table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub id: String,
    pub values: BTreeMap<String, Value>,
    pub pass: bool,
    /// Margin of the audited inequality (`right − left`) when there is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub name: String,
    /// The configuration with every default filled in.
    pub config: ExperimentConfig,
    pub seed_scheme: String,
    pub topics: Vec<String>,
    pub cases: Vec<Case>,
    pub summary: BTreeMap<String, Value>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_slack: Option<f64>,
    pub violations: usize,
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Cases as CSV: `id, pass, slack` and then every value key in order.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let keys: BTreeSet<&String> = self.cases.iter().flat_map(|c| c.values.keys()).collect();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id".to_string(), "pass".into(), "slack".into()];
        header.extend(keys.iter().map(|k| k.to_string()));
        w.write_record(&header)?;
        for c in &self.cases {
            let mut row = vec![
                c.id.clone(),
                c.pass.to_string(),
                c.slack.map(|s| s.to_string()).unwrap_or_default(),
            ];
            for k in &keys {
                row.push(match c.values.get(*k) {
                    None => String::new(),
                    Some(Value::String(s)) => s.clone(),
                    Some(v) => v.to_string(),
                });
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<dir>/<name>.json` and `<dir>/<name>.csv`.
    pub fn write_to(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let json = dir.join(format!("{}.json", self.name));
        let csv_path = dir.join(format!("{}.csv", self.name));
        std::fs::write(&json, self.to_json()? + "\n")?;
        self.write_csv(std::fs::File::create(&csv_path)?)?;
        Ok((json, csv_path))
    }
}

/// A JSON number, or `"inf"`, `"-inf"`, `"nan"`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else if x.is_nan() {
        Value::from("nan")
    } else if x > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => match s.as_str() {
            "inf" | "Infinity" => Some(f64::INFINITY),
            _ => None,
        },
        _ => None,
    }
}

/// Parameter access, seed handout and case collection for one run.
pub struct Ctx {
    config: ExperimentConfig,
    resolved: BTreeMap<String, Value>,
    used_space: bool,
    used_pointset: bool,
    task: u64,
    cases: Vec<Case>,
    summary: BTreeMap<String, Value>,
}

impl Ctx {
    fn new(config: ExperimentConfig) -> Self {
        Ctx {
            config,
            resolved: BTreeMap::new(),
            used_space: false,
            used_pointset: false,
            task: 0,
            cases: Vec::new(),
            summary: BTreeMap::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    fn raw(&mut self, key: &str, default: Value) -> Value {
        let v = self.config.params.get(key).cloned().unwrap_or(default);
        self.resolved.insert(key.into(), v.clone());
        v
    }

    fn bad(key: &str, want: &str, got: &Value) -> Error {
        Error::InvalidParameters(format!("parameter `{key}` must be {want}, got {got}"))
    }

    pub fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = self.raw(key, num(default));
        as_f64(&v).ok_or_else(|| Self::bad(key, "a number", &v))
    }

    pub fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        let v = self.raw(key, Value::from(default));
        v.as_u64().map(|x| x as usize).ok_or_else(|| Self::bad(key, "a nonnegative integer", &v))
    }

    pub fn f64s(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let v = self.raw(key, Value::from(default.iter().map(|&x| num(x)).collect::<Vec<_>>()));
        match &v {
            Value::Array(a) => a.iter().map(|x| as_f64(x).ok_or_else(|| Self::bad(key, "a list of numbers", &v))).collect(),
            _ => Err(Self::bad(key, "a list of numbers", &v)),
        }
    }

    pub fn usizes(&mut self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        let v = self.raw(key, Value::from(default.to_vec()));
        match &v {
            Value::Array(a) => a
                .iter()
                .map(|x| x.as_u64().map(|u| u as usize).ok_or_else(|| Self::bad(key, "a list of integers", &v)))
                .collect(),
            _ => Err(Self::bad(key, "a list of integers", &v)),
        }
    }

    pub fn exponent(&mut self, key: &str, default: f64) -> Result<Exponent> {
        Exponent::new(self.f64(key, default)?)
    }

    pub fn exponents(&mut self, key: &str, default: &[f64]) -> Result<Vec<Exponent>> {
        self.f64s(key, default)?.into_iter().map(Exponent::new).collect()
    }

    pub fn strings(&mut self, key: &str, default: &[&str]) -> Result<Vec<String>> {
        let v = self.raw(key, Value::from(default.to_vec()));
        match &v {
            Value::Array(a) => a
                .iter()
                .map(|x| x.as_str().map(String::from).ok_or_else(|| Self::bad(key, "a list of strings", &v)))
                .collect(),
            _ => Err(Self::bad(key, "a list of strings", &v)),
        }
    }

    /// The next per-task seed.
    pub fn next_seed(&mut self) -> u64 {
        let s = derive_seed(self.config.seed, self.task);
        self.task += 1;
        s
    }

    pub fn rng(&mut self) -> ChaCha8Rng {
        use rand::SeedableRng;
        ChaCha8Rng::seed_from_u64(self.next_seed())
    }

    /// Optimizer options from the `restarts` parameter.
    pub fn ratio_opts(&mut self, restarts: usize) -> Result<RatioOptions> {
        let restarts = self.usize("restarts", restarts)?;
        if restarts == 0 {
            return Err(Error::InvalidParameters("restarts must be positive".into()));
        }
        Ok(RatioOptions {
            restarts,
            ..RatioOptions::with_seed(self.next_seed())
        })
    }

    /// The configured space, or `default` recorded as the resolved one.
    pub fn space(&mut self, default: impl FnOnce() -> Result<SpaceSpec>) -> Result<Space> {
        self.used_space = true;
        let spec = match &self.config.space {
            Some(s) => s.clone(),
            None => default()?,
        };
        let space = Space::from_spec(&spec)?;
        self.config.space = Some(spec);
        Ok(space)
    }

    /// The configured point set, if any.
    pub fn pointset(&mut self) -> Option<PointSet> {
        self.used_pointset = true;
        self.config.pointset.clone()
    }

    pub fn case(&mut self, id: impl Into<String>, values: Vec<(&str, Value)>, pass: bool, slack: Option<f64>) {
        self.cases.push(Case {
            id: id.into(),
            values: values.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            pass,
            slack: slack.filter(|s| s.is_finite()),
        });
    }

    pub fn summary(&mut self, key: &str, value: Value) {
        self.summary.insert(key.into(), value);
    }
}

/// A registered experiment.
pub struct Experiment {
    pub name: &'static str,
    pub about: &'static str,
    /// Topics from the coverage list this experiment exercises.
    pub topics: &'static [&'static str],
    pub run: fn(&mut Ctx) -> Result<()>,
}

/// Every topic that must be exercised by at least one experiment.
pub const COVERAGE: &[&str] = &[
    // definitions
    "lp_norms",
    "sampling_vector",
    "ldi",
    "rdi",
    "weighted_one_sided",
    "nikolskii",
    // one-sided restrictions
    "RIL1",
    "RIP1",
    "RIC1",
    "RemLosi",
    "RIP2",
    "RIP3",
    "fa_family",
    "wrdi_transfer",
    // constructions
    "weight_budget",
    "AP4",
    "AP6",
    "ldi_2_2",
    // matrix setting
    "iid_sampling",
    "design_matrix",
    "pointwise",
    "Lunin",
    "even_q",
    "opnorm",
    // recovery on a subspace
    "best_approx",
    "assumptions_A1_A2",
    "alg_lpw",
    "alg_linf",
    "BT1",
    "BT1a",
    "BT2",
    "BT3",
    "BT4",
    "KW",
    "TrD",
    "TrDi",
    "BP1",
    "BP1a",
    "BP1b",
    "LDI_infty",
    // sparse recovery
    "sigma_v",
    "alg_lp",
    "alg_lp_s",
    "alg_lp_inf",
    "universal_ldi",
    "ubT3",
    "ubT3a",
    "ubT5",
    "ubT5a",
    "ubT6",
];

pub fn find(name: &str) -> Result<&'static Experiment> {
    REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownExperiment(name.into()))
}

/// Runs a registered experiment. Unknown parameters, or a space or point
/// set given to an experiment that takes none, are configuration errors.
pub fn run_experiment(name: &str, config: &ExperimentConfig) -> Result<ExperimentReport> {
    let exp = find(name)?;
    if config.schema != SCHEMA {
        return Err(Error::InvalidParameters(format!("unsupported schema {}", config.schema)));
    }
    let start = Instant::now();
    let mut cfg = config.clone();
    cfg.name = name.into();
    let mut ctx = Ctx::new(cfg);
    (exp.run)(&mut ctx)?;
    let unknown: Vec<&String> = ctx.config.params.keys().filter(|k| !ctx.resolved.contains_key(*k)).collect();
    if !unknown.is_empty() {
        return Err(Error::InvalidParameters(format!("`{name}` does not take parameter(s) {unknown:?}")));
    }
    if ctx.config.space.is_some() && !ctx.used_space {
        return Err(Error::InvalidParameters(format!("`{name}` does not take a space")));
    }
    if ctx.config.pointset.is_some() && !ctx.used_pointset {
        return Err(Error::InvalidParameters(format!("`{name}` does not take a point set")));
    }
    let Ctx {
        mut config,
        resolved,
        cases,
        summary,
        ..
    } = ctx;
    config.params = resolved;
    let violations = cases.iter().filter(|c| !c.pass).count();
    let min_slack = cases.iter().filter_map(|c| c.slack).reduce(f64::min);
    Ok(ExperimentReport {
        schema: SCHEMA,
        name: name.into(),
        config,
        seed_scheme: SEED_SCHEME.into(),
        topics: exp.topics.iter().map(|s| s.to_string()).collect(),
        pass: violations == 0,
        cases,
        summary,
        min_slack,
        violations,
        wall_clock: start.elapsed(),
    })
}

#[cfg(test)]
mod tests;
