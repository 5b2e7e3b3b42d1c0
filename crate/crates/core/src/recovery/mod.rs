//! Sampling recovery (`ℓp`, `ℓ∞` fits and their `v`-term versions) and audits
//! of the Lebesgue-type inequalities they satisfy.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{universal_ldi_constant, CollectionSpec};
use crate::discretize::{disc_norm, sample_vector, side_constant, DiscOptions, PointSet, Side};
use crate::error::{Error, Result};
use crate::fit::{self, weighted_norm};
use crate::fnspace::{FunctionSystem, Space, Target};
use crate::linalg::CVec;
use crate::optim::RatioOptions;
use crate::scalar::{Constant, Exponent, C64};
use crate::serial::CoefVector;

/// Slack below which an audit counts as a violation.
pub const AUDIT_TOL: f64 = 1e-8;

/// Result of a discrete fit: raw coefficients in the space and the
/// attained (weighted) discrete error.
#[derive(Clone, Debug, PartialEq)]
pub struct EllFit {
    pub coefficients: CVec,
    pub disc_error: f64,
    pub iterations: usize,
}

/// `argmin_{u ∈ X} ‖S(f − u, ξ)‖_{p,w}`; `weights` default to the point
/// set's own (`1/m` when unweighted).
pub fn ell_fit(f: &Target, space: &Space, ps: &PointSet, p: Exponent, weights: Option<&[f64]>) -> Result<EllFit> {
    if ps.is_empty() {
        return Err(Error::InvalidParameters("empty point set".into()));
    }
    ps.validate()?;
    let a = space.raw_rows(&ps.points)?;
    let b = sample_vector(f, ps);
    let w = match weights {
        Some(w) => w.to_vec(),
        None => ps.norm_weights(),
    };
    let out = fit::lp_fit(&a, &b, &w, p)?;
    let residual = &b - &a * &out.coefficients;
    Ok(EllFit {
        disc_error: weighted_norm(&residual, &w, p),
        coefficients: out.coefficients,
        iterations: out.iterations,
    })
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn residual(f: &Target, system: &FunctionSystem, coef: &CVec) -> Target {
    f.combine(one(), &Target::element(system, coef), -one())
}

/// Where `σ_v` is measured.
#[derive(Clone, Debug)]
pub enum NormSpec {
    /// `L_p(Ω, μ)`.
    Continuous(Exponent),
    /// `L_p(ξ)`: the discrete norm at the points.
    Discrete(Exponent, PointSet),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaV {
    pub value: f64,
    pub support: Vec<usize>,
    pub coefficients: CoefVector,
}

fn full_coefficients(n: usize, support: &[usize], coef: &CVec) -> CVec {
    let mut out = CVec::zeros(n);
    for (k, &i) in support.iter().enumerate() {
        out[i] = coef[k];
    }
    out
}

/// First index whose value is within a relative `1e-12` of the minimum.
fn lexicographic_argmin(values: &[f64]) -> usize {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values
        .iter()
        .position(|&v| v <= min + 1e-12 * min.abs() + 1e-15)
        .unwrap_or(0)
}

fn guard(collection: &CollectionSpec) -> Result<()> {
    let count = collection.size();
    if count > crate::design::UNIVERSAL_LIMIT {
        return Err(Error::Guard {
            what: "v-term subspaces".into(),
            actual: count,
            limit: crate::design::UNIVERSAL_LIMIT,
        });
    }
    Ok(())
}

/// Best `v`-term approximation of `f` from the dictionary (`v` taken from
/// the collection; `v = 0` gives `‖f‖`).
pub fn sigma_v(f: &Target, collection: &CollectionSpec, norm: &NormSpec) -> Result<SigmaV> {
    let n = collection.dictionary.len();
    if collection.v == 0 {
        let value = match norm {
            NormSpec::Continuous(p) => {
                let space = Space::new(collection.dictionary.clone(), collection.domain.clone())?;
                space.lp_norm_fn(f, *p)
            }
            NormSpec::Discrete(p, ps) => disc_norm(&sample_vector(f, ps), *p, Some(&ps.norm_weights()))?,
        };
        return Ok(SigmaV {
            value,
            support: Vec::new(),
            coefficients: CoefVector::from(&CVec::zeros(n)),
        });
    }
    collection.validate()?;
    guard(collection)?;
    let supports: Vec<Vec<usize>> = collection.supports().collect();
    let fits: Vec<Result<(f64, CVec)>> = supports
        .par_iter()
        .map(|s| {
            let space = collection.span(s)?;
            match norm {
                NormSpec::Continuous(p) => {
                    let (c, d) = space.best_approx(f, *p)?;
                    Ok((d, c))
                }
                NormSpec::Discrete(p, ps) => {
                    let fit = ell_fit(f, &space, ps, *p, None)?;
                    Ok((fit.disc_error, fit.coefficients))
                }
            }
        })
        .collect();
    let fits: Vec<(f64, CVec)> = fits.into_iter().collect::<Result<_>>()?;
    let values: Vec<f64> = fits.iter().map(|x| x.0).collect();
    let best = lexicographic_argmin(&values);
    Ok(SigmaV {
        value: values[best],
        support: supports[best].clone(),
        coefficients: CoefVector::from(&full_coefficients(n, &supports[best], &fits[best].1)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Fit by `ℓp(ξ, L)`, select `L` by the continuous error.
    #[serde(rename = "lp")]
    Lp,
    /// Fit by `ℓp(ξ, L)`, select `L` by the discrete error at `ξ`.
    #[serde(rename = "lp_s")]
    LpSample,
    /// Fit by `ℓ∞(ξ, L)`, select `L` by the continuous `L_p` error.
    #[serde(rename = "lp_inf")]
    LpInf,
}

impl Variant {
    pub fn id(self) -> &'static str {
        match self {
            Variant::Lp => "lp",
            Variant::LpSample => "lp_s",
            Variant::LpInf => "lp_inf",
        }
    }
}

/// One audited inequality `left ≤ right`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditLine {
    pub name: String,
    pub left: f64,
    pub right: f64,
    /// `right − left`.
    pub slack: f64,
    pub holds: bool,
}

impl AuditLine {
    pub fn new(name: impl Into<String>, left: f64, right: f64) -> Self {
        let slack = right - left;
        AuditLine {
            name: name.into(),
            left,
            right,
            slack,
            holds: slack >= -AUDIT_TOL || (left.is_finite() && right == f64::INFINITY),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub algorithm: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem: Option<String>,
    pub input: String,
    pub support: Vec<usize>,
    /// Raw coefficients over the whole system (zero off the support).
    pub coefficients: CoefVector,
    pub errors: BTreeMap<String, f64>,
    /// Measured hypothesis constants (`D`, `W`, `M`, ...).
    pub constants: BTreeMap<String, f64>,
    pub audits: Vec<AuditLine>,
    /// False when a hypothesis of the theorem failed; audits are then empty.
    pub applicable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl RecoveryReport {
    pub fn min_slack(&self) -> Option<f64> {
        self.audits.iter().map(|a| a.slack).reduce(f64::min)
    }

    pub fn violations(&self) -> usize {
        self.audits.iter().filter(|a| !a.holds).count()
    }

    fn not_applicable(algorithm: &str, theorem: &str, input: &str, n: usize, why: String) -> Self {
        RecoveryReport {
            algorithm: algorithm.into(),
            theorem: Some(theorem.into()),
            input: input.into(),
            support: Vec::new(),
            coefficients: CoefVector::from(&CVec::zeros(n)),
            errors: BTreeMap::new(),
            constants: BTreeMap::new(),
            audits: Vec::new(),
            applicable: false,
            note: Some(why),
        }
    }
}

fn label(p: Exponent) -> String {
    if p.is_inf() {
        "inf".into()
    } else {
        format!("{}", p.value())
    }
}

fn error_table(f: &Target, space: &Space, coef: &CVec, ps: &PointSet, p: Exponent) -> Result<BTreeMap<String, f64>> {
    let r = residual(f, space.system(), coef);
    let mut e = BTreeMap::new();
    e.insert(format!("L{}", label(p)), space.lp_norm_fn(&r, p));
    if !p.is_inf() {
        e.insert("Linf".into(), space.lp_norm_fn(&r, Exponent::INF));
    }
    e.insert(
        format!("disc{}", label(p)),
        disc_norm(&sample_vector(&r, ps), p, Some(&ps.norm_weights()))?,
    );
    Ok(e)
}

/// `v`-term recovery from the samples `S(f, ξ)` by enumerating all spans.
pub fn recover_universal(
    f: &Target,
    collection: &CollectionSpec,
    ps: &PointSet,
    p: Exponent,
    variant: Variant,
) -> Result<RecoveryReport> {
    collection.validate()?;
    guard(collection)?;
    ps.validate()?;
    let supports: Vec<Vec<usize>> = collection.supports().collect();
    let fit_p = if variant == Variant::LpInf { Exponent::INF } else { p };
    let scored: Vec<Result<(f64, CVec)>> = supports
        .par_iter()
        .map(|s| {
            let space = collection.span(s)?;
            let fit = ell_fit(f, &space, ps, fit_p, None)?;
            let score = match variant {
                Variant::LpSample => fit.disc_error,
                Variant::Lp | Variant::LpInf => space.lp_norm_fn(&residual(f, space.system(), &fit.coefficients), p),
            };
            Ok((score, fit.coefficients))
        })
        .collect();
    let scored: Vec<(f64, CVec)> = scored.into_iter().collect::<Result<_>>()?;
    let values: Vec<f64> = scored.iter().map(|x| x.0).collect();
    let best = lexicographic_argmin(&values);
    let support = supports[best].clone();
    let span = collection.span(&support)?;
    let coef = &scored[best].1;
    let errors = error_table(f, &span, coef, ps, p)?;
    Ok(RecoveryReport {
        algorithm: variant.id().into(),
        theorem: None,
        input: f.label.clone(),
        coefficients: CoefVector::from(&full_coefficients(collection.dictionary.len(), &support, coef)),
        support,
        errors,
        constants: BTreeMap::new(),
        audits: Vec::new(),
        applicable: true,
        note: None,
    })
}

/// The theorems with an audit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Theorem {
    /// `‖f − ℓpw(f)‖_p ≤ (2 D W^{1/p} + 1) d(f, X)_∞` (and the `p = ∞` form).
    BT1,
    /// `‖f − ℓpw(f)‖_∞ ≤ (2 M D W^{1/p} + 1) d(f, X)_∞`.
    BT1a,
    /// `‖f − ℓ∞(f)‖_p ≤ (2 D + 1) d(f, X)_∞` under LDI(p, ∞).
    BT2,
    /// BT2 for `p = 2` at points found by search.
    BT3,
    /// BT1 for `p = 2` with equal weights.
    BT4,
    /// `ℓ(p,∞)` with universal LDI(p, ∞) on `X_v`.
    UbT3,
    /// `ℓp` with universal LDI(p) on `X_v`.
    UbT3a,
    /// `ℓp^s` with universal LDI(p, ∞) on `X_{2v}`.
    UbT5,
    /// `ℓp^s` with universal LDI(p) on `X_{2v}`.
    UbT5a,
    /// Optimal recovery bounded through the `ℓp^s` witness.
    UbT6,
}

impl Theorem {
    pub const ALL: [Theorem; 10] = [
        Theorem::BT1,
        Theorem::BT1a,
        Theorem::BT2,
        Theorem::BT3,
        Theorem::BT4,
        Theorem::UbT3,
        Theorem::UbT3a,
        Theorem::UbT5,
        Theorem::UbT5a,
        Theorem::UbT6,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Theorem::BT1 => "BT1",
            Theorem::BT1a => "BT1a",
            Theorem::BT2 => "BT2",
            Theorem::BT3 => "BT3",
            Theorem::BT4 => "BT4",
            Theorem::UbT3 => "ubT3",
            Theorem::UbT3a => "ubT3a",
            Theorem::UbT5 => "ubT5",
            Theorem::UbT5a => "ubT5a",
            Theorem::UbT6 => "ubT6",
        }
    }

    pub fn parse(s: &str) -> Result<Theorem> {
        Theorem::ALL
            .into_iter()
            .find(|t| t.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameters(format!("unknown theorem {s}")))
    }

    fn is_universal(self) -> bool {
        matches!(self, Theorem::UbT3 | Theorem::UbT3a | Theorem::UbT5 | Theorem::UbT5a | Theorem::UbT6)
    }
}

/// What an audit runs on.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum AuditModel {
    Subspace(Space),
    Sparse(CollectionSpec),
}

#[derive(Clone, Debug)]
pub struct AuditInstance {
    pub model: AuditModel,
    pub pointset: PointSet,
    pub target: Target,
    pub p: Exponent,
    pub opts: RatioOptions,
}

fn ldi(space: &Space, ps: &PointSet, p: Exponent, q: Exponent, opts: &RatioOptions) -> Result<Constant> {
    let a_u = space.ortho_rows(&ps.points)?;
    Ok(side_constant(space, &a_u, &ps.norm_weights(), p, q, Side::Left, opts, &[]).value)
}

/// Both sides of the theorem's inequality with every hypothesis constant
/// measured. A failed hypothesis gives an inapplicable report, not a violation.
pub fn lebesgue_audit(theorem: Theorem, inst: &AuditInstance) -> Result<RecoveryReport> {
    let input = inst.target.label.clone();
    match (&inst.model, theorem.is_universal()) {
        (AuditModel::Subspace(space), false) => subspace_audit(theorem, space, inst, &input),
        (AuditModel::Sparse(col), true) => sparse_audit(theorem, col, inst, &input),
        _ => Err(Error::InvalidParameters(format!(
            "{} needs a {} model",
            theorem.id(),
            if theorem.is_universal() { "sparse" } else { "subspace" }
        ))),
    }
}

fn subspace_audit(theorem: Theorem, space: &Space, inst: &AuditInstance, input: &str) -> Result<RecoveryReport> {
    let ps = &inst.pointset;
    ps.validate()?;
    let n = space.dim();
    let f = &inst.target;
    let mut p = inst.p;
    let mut consts = BTreeMap::new();
    let (algorithm, fit_p) = match theorem {
        Theorem::BT1 | Theorem::BT1a | Theorem::BT4 => ("lpw", p),
        _ => ("linf", Exponent::INF),
    };
    if matches!(theorem, Theorem::BT3 | Theorem::BT4) {
        p = Exponent::TWO;
    }
    let na = |why: String| Ok(RecoveryReport::not_applicable(algorithm, theorem.id(), input, n, why));
    if theorem == Theorem::BT4 && ps.is_weighted() {
        return na("equal weights required".into());
    }
    if matches!(theorem, Theorem::BT1a | Theorem::BT2 | Theorem::BT3) && p.is_inf() {
        return na("p must be finite".into());
    }
    // Hypotheses.
    let (d, factor) = match theorem {
        Theorem::BT1 | Theorem::BT1a | Theorem::BT4 => {
            let q = if p.is_inf() { Exponent::INF } else { p };
            let d = ldi(space, ps, p, q, &inst.opts)?;
            let w: f64 = ps.norm_weights().iter().sum();
            consts.insert("W".to_string(), w);
            let wp = if p.is_inf() { 1.0 } else { w.powf(1.0 / p.value()) };
            (d, wp)
        }
        _ => (ldi(space, ps, p, Exponent::INF, &inst.opts)?, 1.0),
    };
    let Constant::Finite(d) = d else {
        return na("the sampling discretization constant D is infinite".into());
    };
    consts.insert("D".to_string(), d);
    let mut m_const = 1.0;
    if theorem == Theorem::BT1a {
        let ni = space.nikolskii(p, Exponent::INF, &inst.opts)?;
        m_const = ni.value;
        consts.insert("M".to_string(), m_const);
    }
    // Algorithm and both sides.
    let fit = ell_fit(f, space, ps, fit_p, None)?;
    let err_norm = if theorem == Theorem::BT1a { Exponent::INF } else { p };
    let left = space.lp_norm_fn(&residual(f, space.system(), &fit.coefficients), err_norm);
    let (_, dist) = space.best_approx(f, Exponent::INF)?;
    consts.insert("d_inf".to_string(), dist);
    let right = (2.0 * m_const * d * factor + 1.0) * dist;
    let mut errors = error_table(f, space, &fit.coefficients, ps, p)?;
    errors.insert(format!("L{}", label(err_norm)), left);
    let note = match theorem {
        Theorem::BT3 | Theorem::BT4 => Some(format!(
            "existence statement: audited at the supplied m = {} points (m/N = {:.3})",
            ps.len(),
            ps.len() as f64 / n as f64
        )),
        _ => None,
    };
    Ok(RecoveryReport {
        algorithm: algorithm.into(),
        theorem: Some(theorem.id().into()),
        input: input.into(),
        support: (0..n).collect(),
        coefficients: CoefVector::from(&fit.coefficients),
        errors,
        constants: consts,
        audits: vec![AuditLine::new(theorem.id(), left, right)],
        applicable: true,
        note,
    })
}

fn sparse_audit(theorem: Theorem, col: &CollectionSpec, inst: &AuditInstance, input: &str) -> Result<RecoveryReport> {
    let ps = &inst.pointset;
    let p = inst.p;
    let n = col.dictionary.len();
    let (variant, doubled, q) = match theorem {
        Theorem::UbT3 => (Variant::LpInf, false, Exponent::INF),
        Theorem::UbT3a => (Variant::Lp, false, p),
        Theorem::UbT5 | Theorem::UbT6 => (Variant::LpSample, true, Exponent::INF),
        _ => (Variant::LpSample, true, p),
    };
    let na = |why: String| Ok(RecoveryReport::not_applicable(variant.id(), theorem.id(), input, n, why));
    if p.is_inf() {
        return na("p must be finite".into());
    }
    if doubled && 2 * col.v > n {
        return na(format!("needs 2v ≤ N, have v = {}, N = {n}", col.v));
    }
    let hyp = CollectionSpec {
        v: if doubled { 2 * col.v } else { col.v },
        ..col.clone()
    };
    let uni = universal_ldi_constant(&hyp, ps, p, q, &inst.opts)?;
    let Constant::Finite(d) = uni.value else {
        return na(format!("universal LDI fails on support {:?}", uni.worst));
    };
    let mut rep = recover_universal(&inst.target, col, ps, p, variant)?;
    let sigma = sigma_v(&inst.target, col, &NormSpec::Continuous(Exponent::INF))?;
    let left = rep.errors[&format!("L{}", label(p))];
    let right = (2.0 * d + 1.0) * sigma.value;
    rep.constants.insert("D".into(), d);
    rep.constants.insert("sigma_v_inf".into(), sigma.value);
    rep.audits.push(AuditLine::new(theorem.id(), left, right));
    if variant == Variant::LpSample {
        // The sample algorithm attains the best v-term error in L_p(ξ).
        let disc = sigma_v(&inst.target, col, &NormSpec::Discrete(p, ps.clone()))?;
        let got = rep.errors[&format!("disc{}", label(p))];
        rep.audits.push(AuditLine::new("sample-optimality", got, disc.value * (1.0 + 1e-6) + 1e-9));
    }
    if theorem == Theorem::UbT6 {
        rep.note = Some("the sample algorithm's error witnesses the optimal recovery bound".into());
    }
    rep.theorem = Some(theorem.id().into());
    Ok(rep)
}

/// Link-by-link audit of `‖f‖_∞ ≤ M‖f‖₂ ≤ M D ‖S f‖₂ ≤ M D ‖S f‖_∞` for an
/// element `f` of the space given by raw coefficients. `M` is the measured
/// Nikol'skii `(2, ∞)` constant and `D` the measured LDI(2, 2) constant.
/// With `max_points = Some(k)` the chain is inapplicable when `m > k`.
pub fn chain_audit(
    name: &str,
    space: &Space,
    ps: &PointSet,
    coef: &CVec,
    max_points: Option<usize>,
    opts: &DiscOptions,
) -> Result<RecoveryReport> {
    ps.validate()?;
    let n = space.dim();
    let label_in = format!("element of {name}");
    if let Some(k) = max_points {
        if ps.len() > k {
            return Ok(RecoveryReport::not_applicable("chain", name, &label_in, n, format!("m = {} > {k}", ps.len())));
        }
    }
    let m_const = space.nikolskii(Exponent::TWO, Exponent::INF, &opts.ratio)?.value;
    let Constant::Finite(d) = ldi(space, ps, Exponent::TWO, Exponent::TWO, &opts.ratio)? else {
        return Ok(RecoveryReport::not_applicable("chain", name, &label_in, n, "LDI(2,2) fails".into()));
    };
    let f = Target::element(space.system(), coef);
    let sup = space.lp_norm(coef, Exponent::INF);
    let l2 = space.lp_norm(coef, Exponent::TWO);
    let s = sample_vector(&f, ps);
    let d2 = disc_norm(&s, Exponent::TWO, Some(&ps.norm_weights()))?;
    let dinf = disc_norm(&s, Exponent::INF, None)?;
    let mut consts = BTreeMap::new();
    consts.insert("M".to_string(), m_const);
    consts.insert("D".to_string(), d);
    consts.insert("N".to_string(), n as f64);
    let audits = vec![
        AuditLine::new("nikolskii", sup, m_const * l2),
        AuditLine::new("discretization", m_const * l2, m_const * d * d2),
        AuditLine::new("max-norm", m_const * d * d2, m_const * d * dinf),
    ];
    let mut errors = BTreeMap::new();
    errors.insert("Linf".to_string(), sup);
    errors.insert("L2".to_string(), l2);
    errors.insert("disc2".to_string(), d2);
    errors.insert("discinf".to_string(), dinf);
    Ok(RecoveryReport {
        algorithm: "chain".into(),
        theorem: Some(name.into()),
        input: label_in,
        support: (0..n).collect(),
        coefficients: CoefVector::from(coef),
        errors,
        constants: consts,
        audits,
        applicable: true,
        note: None,
    })
}

/// One CSV row per theorem over a batch of audits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub theorem: String,
    pub instances: usize,
    pub not_applicable: usize,
    pub min_slack: Option<f64>,
    pub violations: usize,
}

impl BatchSummary {
    pub fn from_reports(theorem: &str, reports: &[RecoveryReport]) -> Self {
        BatchSummary {
            theorem: theorem.into(),
            instances: reports.len(),
            not_applicable: reports.iter().filter(|r| !r.applicable).count(),
            min_slack: reports.iter().filter_map(|r| r.min_slack()).reduce(f64::min),
            violations: reports.iter().map(|r| r.violations()).sum(),
        }
    }
}

pub fn write_batch_csv<W: std::io::Write>(rows: &[BatchSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests;
