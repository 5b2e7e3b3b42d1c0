//! Point-set construction: verified random sampling, weight equalisation,
//! optimal-design measures, LDI point search and universal LDI constants.

use std::f64::consts::PI;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::{
    disc_constants, generator_coords, side_constant, DiscOptions, DiscReport, PointSet, Side,
};
use crate::error::{Error, Result};
use crate::fnspace::{DomainKind, DomainSpec, FunctionSystem, Point, Space, Target};
use crate::linalg::{self, CMat};
use crate::optim::{binomial, RatioOptions};
use crate::rng::rng_for;
use crate::scalar::{Constant, Exponent, C64};

/// A probability measure on finitely many candidate points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignMeasure {
    pub points: Vec<Point>,
    pub masses: Vec<f64>,
}

impl DesignMeasure {
    pub fn validate(&self) -> Result<()> {
        if self.points.len() != self.masses.len() || self.points.is_empty() {
            return Err(Error::InvalidParameters("points and masses differ in length".into()));
        }
        if self.masses.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidParameters("masses must be nonnegative".into()));
        }
        let total: f64 = self.masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameters(format!("masses sum to {total}")));
        }
        Ok(())
    }

    /// `domain` with this measure in place of its own.
    pub fn to_domain(&self, domain: &DomainSpec) -> Result<DomainSpec> {
        self.validate()?;
        domain.with_atomic(self.points.clone(), self.masses.clone())
    }

    /// Points carrying mass above `tol`.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        (0..self.masses.len()).filter(|&i| self.masses[i] > tol).collect()
    }
}

/// All `v`-element spans of a dictionary on a domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollectionSpec {
    pub dictionary: FunctionSystem,
    pub v: usize,
    pub domain: DomainSpec,
}

impl CollectionSpec {
    pub fn validate(&self) -> Result<()> {
        self.dictionary.validate()?;
        self.domain.validate()?;
        if self.v == 0 || self.v > self.dictionary.len() {
            return Err(Error::InvalidParameters(format!(
                "sparsity {} with a dictionary of {}",
                self.v,
                self.dictionary.len()
            )));
        }
        Ok(())
    }

    /// `C(N, v)`.
    pub fn size(&self) -> u128 {
        binomial(self.dictionary.len(), self.v)
    }

    /// Supports in lexicographic order.
    pub fn supports(&self) -> impl Iterator<Item = Vec<usize>> {
        (0..self.dictionary.len()).combinations(self.v)
    }

    pub fn span(&self, support: &[usize]) -> Result<Space> {
        Space::new(self.dictionary.subset(support)?, self.domain.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IidOutcome {
    pub pointset: PointSet,
    pub report: DiscReport,
    pub certified: bool,
    pub rounds: usize,
    /// `D_L^{-p}`: lower factor in `lower ‖f‖_p^p ≤ m⁻¹ Σ |f(ξ^j)|^p`.
    pub lower: f64,
    /// `D_R^p`: upper factor.
    pub upper: f64,
    pub epsilon: f64,
}

fn factors(report: &DiscReport, p: f64) -> (f64, f64) {
    let lower = match report.d_left {
        Constant::Finite(d) => d.powf(-p),
        Constant::Infinite => 0.0,
    };
    (lower, report.d_right.value().powf(p))
}

/// Draws i.i.d. points from `μ` in doubling batches (starting at `N`) until
/// `(1-ε)‖f‖_p^p ≤ m⁻¹ Σ |f(ξ^j)|^p ≤ (1+ε)‖f‖_p^p` is certified for the
/// whole space. When `max_rounds` runs out, the round with the smallest
/// deviation is returned uncertified.
pub fn iid_points_verified(
    space: &Space,
    p: Exponent,
    epsilon: f64,
    seed: u64,
    max_rounds: usize,
    opts: &DiscOptions,
) -> Result<IidOutcome> {
    if p.is_inf() {
        return Err(Error::InvalidParameters("p must be finite".into()));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidParameters(format!("epsilon {epsilon} outside [0, 1)")));
    }
    if max_rounds == 0 {
        return Err(Error::InvalidParameters("max_rounds must be positive".into()));
    }
    let pv = p.value();
    let mut rng = rng_for(seed, 0);
    let mut points: Vec<Point> = Vec::new();
    let mut best: Option<(f64, IidOutcome)> = None;
    for round in 0..max_rounds {
        let target = space.dim() << round;
        while points.len() < target {
            points.push(space.domain().sample(&mut rng));
        }
        let mut ps = PointSet::new(points.clone());
        ps.seed = Some(seed);
        let report = disc_constants(space, &ps, p, p, opts)?;
        let (lower, upper) = factors(&report, pv);
        let certified = upper <= 1.0 + epsilon + 1e-12 && lower >= 1.0 - epsilon - 1e-12;
        let outcome = IidOutcome {
            pointset: ps,
            report,
            certified,
            rounds: round + 1,
            lower,
            upper,
            epsilon,
        };
        if certified {
            return Ok(outcome);
        }
        let dev = (upper - 1.0).max(1.0 - lower);
        if best.as_ref().is_none_or(|(d, _)| dev < *d) {
            best = Some((dev, outcome));
        }
    }
    let (_, mut out) = best.expect("at least one round");
    out.rounds = max_rounds;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equalized {
    pub pointset: PointSet,
    /// Copies of each input point.
    pub counts: Vec<usize>,
    pub m0: usize,
    /// `(C² + 1) m`.
    pub size_bound: f64,
    /// `((C² + 1)/C)^{1/q}`.
    pub factor: f64,
}

/// Replaces a weighted set by an unweighted one: point `j` is taken
/// `⌊λ_j C m⌋ + 1` times.
pub fn equalize_weights(ps: &PointSet, c: f64, q: Exponent) -> Result<Equalized> {
    let weights = ps
        .weights
        .as_ref()
        .ok_or_else(|| Error::InvalidParameters("point set has no weights".into()))?;
    if weights.len() != ps.len() || ps.is_empty() {
        return Err(Error::InvalidParameters("weights and points differ in length".into()));
    }
    if let Some(w) = weights.iter().find(|&&w| !(w >= 0.0)) {
        return Err(Error::InvalidParameters(format!("negative weight {w}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameters(format!("C = {c} must be positive")));
    }
    let total: f64 = weights.iter().sum();
    if total > c * (1.0 + 1e-12) {
        return Err(Error::InvalidParameters(format!("weights sum to {total} > C = {c}")));
    }
    let m = ps.len() as f64;
    let counts: Vec<usize> = weights
        .iter()
        .map(|&w| {
            let x = w * c * m;
            // Absorb rounding just below an integer.
            (x + 1e-12 * x.max(1.0)).floor() as usize + 1
        })
        .collect();
    let points: Vec<Point> = ps
        .points
        .iter()
        .zip(&counts)
        .flat_map(|(x, &k)| std::iter::repeat_n(x.clone(), k))
        .collect();
    let m0 = points.len();
    let factor = if q.is_inf() { 1.0 } else { ((c * c + 1.0) / c).powf(1.0 / q.value()) };
    let mut out = PointSet::new(points);
    out.seed = ps.seed;
    out.grid_size = ps.grid_size;
    Ok(Equalized {
        pointset: out,
        counts,
        m0,
        size_bound: (c * c + 1.0) * m,
        factor,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqualizeAudit {
    pub equalized: Equalized,
    /// Weighted LDI constant of the input.
    pub d_weighted: Constant,
    /// LDI constant of the equal-weight output.
    pub d_equal: Constant,
    pub bound: Constant,
    pub holds: bool,
}

/// Measures the weighted LDI before and the unweighted LDI after
/// equalisation and checks `D_new ≤ D ((C²+1)/C)^{1/q}`.
pub fn equalize_audit(
    space: &Space,
    ps: &PointSet,
    c: f64,
    p: Exponent,
    q: Exponent,
    opts: &DiscOptions,
) -> Result<EqualizeAudit> {
    let eq = equalize_weights(ps, c, q)?;
    let before = left_constant(space, ps, p, q, &opts.ratio)?;
    let after = left_constant(space, &eq.pointset, p, q, &opts.ratio)?;
    let bound = match before {
        Constant::Finite(d) => Constant::Finite(d * eq.factor),
        Constant::Infinite => Constant::Infinite,
    };
    let holds = match (after, bound) {
        (_, Constant::Infinite) => true,
        (Constant::Finite(a), Constant::Finite(b)) => a <= b * (1.0 + 1e-9),
        (Constant::Infinite, Constant::Finite(_)) => false,
    };
    Ok(EqualizeAudit {
        equalized: eq,
        d_weighted: before,
        d_equal: after,
        bound,
        holds,
    })
}

fn left_constant(space: &Space, ps: &PointSet, p: Exponent, q: Exponent, opts: &RatioOptions) -> Result<Constant> {
    ps.validate()?;
    let a_u = space.ortho_rows(&ps.points)?;
    let w = ps.norm_weights();
    Ok(side_constant(space, &a_u, &w, p, q, Side::Left, opts, &[]).value)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub weights: Vec<f64>,
    pub sum: f64,
    /// `D₂^q`.
    pub budget: f64,
    pub d1_measured: Constant,
    pub d2_measured: Constant,
    /// The constant function had to be added to the space.
    pub augmented: bool,
}

/// Checks that `ps` is a two-sided weighted discretizer of `X ⊕ span{1}`
/// (`‖f‖_{p₁} ≤ D₁ (Σ λ_j |f|^q)^{1/q} ≤ D₁ D₂ ‖f‖_{p₂}` with `D₂` given)
/// and returns its weights, whose sum is then at most `D₂^q`.
pub fn weight_budget_trick(
    space: &Space,
    ps: &PointSet,
    p1: Exponent,
    p2: Exponent,
    q: Exponent,
    d2: f64,
    opts: &DiscOptions,
) -> Result<BudgetReport> {
    if q.is_inf() || p1.value() > p2.value() {
        return Err(Error::InvalidParameters("need p1 ≤ p2 and finite q".into()));
    }
    let weights = ps
        .weights
        .clone()
        .ok_or_else(|| Error::InvalidParameters("point set has no weights".into()))?;
    ps.validate()?;
    let one = Target::real("1", |_| 1.0);
    let (_, dist) = space.best_approx(&one, Exponent::TWO)?;
    let augmented = dist > 1e-9;
    let aug = if augmented {
        Space::new(space.system().with_constant(), space.domain().clone())?
    } else {
        space.clone()
    };
    let a_u = aug.ortho_rows(&ps.points)?;
    let w = ps.norm_weights();
    let constant_hint = if augmented {
        vec![generator_coords(&aug, 0)]
    } else {
        let (c, _) = aug.best_approx(&one, Exponent::TWO)?;
        vec![aug.from_raw(&c)]
    };
    let right = side_constant(&aug, &a_u, &w, p2, q, Side::Right, &opts.ratio, &constant_hint);
    let left = side_constant(&aug, &a_u, &w, p1, q, Side::Left, &opts.ratio, &[]);
    if !left.value.is_finite() {
        return Err(Error::Premise("no lower bound on the augmented space".into()));
    }
    let measured = right.value.value();
    if measured > d2 * (1.0 + 1e-9) {
        return Err(Error::Premise(format!(
            "upper constant {measured} exceeds the declared {d2} on the augmented space"
        )));
    }
    let sum: f64 = weights.iter().sum();
    let budget = d2.powf(q.value()) * aug.lp_norm_fn(&one, p2).powf(q.value());
    if sum > budget + 1e-12 {
        return Err(Error::Premise(format!("weights sum to {sum} > {budget}")));
    }
    Ok(BudgetReport {
        weights,
        sum,
        budget,
        d1_measured: left.value,
        d2_measured: right.value,
        augmented,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KwOutcome {
    pub measure: DesignMeasure,
    /// Largest Christoffel value on the grid for `measure`.
    pub max_christoffel: f64,
    /// `√max_christoffel`: the grid-relative Nikol'skii constant for `(2, ∞)`.
    pub ni_constant: f64,
    pub iterations: usize,
    /// Running minimum of the max-Christoffel value per iteration.
    pub history: Vec<f64>,
    pub epsilon: f64,
}

fn christoffel_all(a: &CMat, masses: &[f64]) -> Result<(Vec<f64>, f64)> {
    let weighted = CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * masses[i]);
    let g = linalg::hermitize(&(a.adjoint() * weighted));
    let (vals, vecs) = linalg::hermitian_eigen(&g);
    let vmax = vals.last().copied().unwrap_or(0.0);
    if !(vals[0] > linalg::DEGENERACY_RTOL * vmax) {
        return Err(Error::DegenerateSystem {
            smallest: vals[0],
            largest: vmax,
        });
    }
    // K(x) = Σ_k |⟨a(x), v_k⟩|² / λ_k
    let proj = a * &vecs;
    let k = (0..a.nrows())
        .map(|i| (0..vals.len()).map(|j| proj[(i, j)].norm_sqr() / vals[j]).sum())
        .collect();
    let logdet = vals.iter().map(|v| v.ln()).sum();
    Ok((k, logdet))
}

/// Multiplicative reweighting `μ_k ← μ_k K_μ(ω_k)/N` from the uniform
/// measure on `grid` until `max K_μ ≤ N(1+ε)` on the grid.
pub fn kw_design(space: &Space, grid: &[Point], epsilon: f64, max_iters: usize) -> Result<KwOutcome> {
    if grid.is_empty() || !(epsilon >= 0.0) {
        return Err(Error::InvalidParameters("need a nonempty grid and ε ≥ 0".into()));
    }
    let a = space.raw_rows(grid)?;
    let n = space.dim() as f64;
    let mut mu = vec![1.0 / grid.len() as f64; grid.len()];
    let mut best = (f64::INFINITY, mu.clone());
    let mut history = Vec::new();
    let mut last_logdet = f64::NEG_INFINITY;
    for it in 0..=max_iters {
        let (k, logdet) = christoffel_all(&a, &mu)?;
        assert!(
            logdet >= last_logdet - 1e-9 * (1.0 + last_logdet.abs()),
            "log det decreased: {last_logdet} -> {logdet}"
        );
        last_logdet = logdet;
        let kmax = k.iter().copied().fold(0.0, f64::max);
        if kmax < best.0 {
            best = (kmax, mu.clone());
        }
        history.push(best.0);
        if best.0 <= n * (1.0 + epsilon) {
            let (kmax, masses) = best;
            return Ok(KwOutcome {
                measure: DesignMeasure {
                    points: grid.to_vec(),
                    masses,
                },
                max_christoffel: kmax,
                ni_constant: kmax.sqrt(),
                iterations: it,
                history,
                epsilon,
            });
        }
        for (m, kk) in mu.iter_mut().zip(&k) {
            *m *= kk / n;
        }
        let total: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|m| *m /= total);
    }
    Err(Error::Convergence {
        iterations: max_iters,
        last_change: best.0 / n - 1.0,
        last_iterate: best.1.iter().map(|&m| C64::new(m, 0.0)).collect(),
    })
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub restarts: usize,
    /// Pattern-search refinement of the best restart.
    pub refine: bool,
    /// Budget of constant evaluations for the refinement.
    pub max_evals: usize,
    pub ratio: RatioOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            restarts: 16,
            refine: true,
            max_evals: 4000,
            ratio: RatioOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdiSearch {
    pub pointset: PointSet,
    #[serde(rename = "D_L")]
    pub d_left: Constant,
    /// Constant of the best random restart before refinement.
    pub d_unrefined: Constant,
    pub best_restart: usize,
    pub evaluations: usize,
}

fn ldi_value(space: &Space, pts: &[Point], p: Exponent, q: Exponent, opts: &RatioOptions) -> f64 {
    let a_u = match space.ortho_rows(pts) {
        Ok(a) => a,
        Err(_) => return f64::INFINITY,
    };
    let w = vec![1.0 / pts.len() as f64; pts.len()];
    side_constant(space, &a_u, &w, p, q, Side::Left, opts, &[]).value.value()
}

fn domain_extent(domain: &DomainSpec) -> f64 {
    match domain.kind {
        DomainKind::Torus { .. } => 2.0 * PI,
        DomainKind::UnitInterval => 1.0,
        DomainKind::FiniteSet { .. } => 1.0,
    }
}

fn moved(domain: &DomainSpec, x: &Point, coord: usize, step: f64) -> Point {
    let mut c = x.coords().to_vec();
    match domain.kind {
        DomainKind::Torus { .. } => c[coord] = (c[coord] + step).rem_euclid(2.0 * PI),
        DomainKind::UnitInterval => c[coord] = (c[coord] + step).clamp(0.0, 1.0),
        DomainKind::FiniteSet { size } => {
            let i = x.as_index() as i64 + step as i64;
            return Point::index(i.rem_euclid(size as i64) as usize);
        }
    }
    Point(c)
}

/// Random restarts (points drawn from `μ`) minimising the LDI constant,
/// followed by a coordinate pattern search on the best set.
pub fn search_ldi_points(
    space: &Space,
    m: usize,
    p: Exponent,
    q: Exponent,
    seed: u64,
    opts: &SearchOptions,
) -> Result<LdiSearch> {
    if m == 0 || opts.restarts == 0 {
        return Err(Error::InvalidParameters("need m ≥ 1 and at least one restart".into()));
    }
    let domain = space.domain();
    let trials: Vec<(Vec<Point>, f64)> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(seed, r as u64);
            let pts: Vec<Point> = (0..m).map(|_| domain.sample(&mut rng)).collect();
            let v = ldi_value(space, &pts, p, q, &opts.ratio);
            (pts, v)
        })
        .collect();
    let mut best_restart = 0;
    for (i, t) in trials.iter().enumerate() {
        if t.1 < trials[best_restart].1 {
            best_restart = i;
        }
    }
    let (mut pts, mut value) = trials[best_restart].clone();
    let unrefined = value;
    let mut evals = opts.restarts;
    if opts.refine && value.is_finite() {
        let discrete = matches!(domain.kind, DomainKind::FiniteSet { .. });
        let mut step = if discrete { 1.0 } else { domain_extent(domain) / (2.0 * m as f64) };
        let floor = if discrete { 1.0 } else { 1e-9 * domain_extent(domain) };
        'outer: while step >= floor {
            let mut improved = false;
            for j in 0..m {
                for c in 0..pts[j].coords().len() {
                    for s in [step, -step] {
                        if evals >= opts.max_evals {
                            break 'outer;
                        }
                        let mut trial = pts.clone();
                        trial[j] = moved(domain, &pts[j], c, s);
                        let v = ldi_value(space, &trial, p, q, &opts.ratio);
                        evals += 1;
                        if v < value * (1.0 - 1e-14) {
                            value = v;
                            pts = trial;
                            improved = true;
                            break;
                        }
                    }
                }
            }
            if !improved {
                if discrete {
                    break;
                }
                step /= 2.0;
            }
        }
    }
    let mut ps = PointSet::new(pts);
    ps.seed = Some(seed);
    ps.grid_size = Some(domain.grid_size);
    Ok(LdiSearch {
        pointset: ps,
        d_left: Constant::from_f64(value),
        d_unrefined: Constant::from_f64(unrefined),
        best_restart,
        evaluations: evals,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniversalReport {
    pub v: usize,
    pub subspaces: u128,
    pub value: Constant,
    /// Support of the span attaining `value` (first in lexicographic order).
    pub worst: Vec<usize>,
}

pub const UNIVERSAL_LIMIT: u128 = 1_000_000;

/// Largest LDI constant at `ps` over all `v`-element spans of the dictionary.
pub fn universal_ldi_constant(
    collection: &CollectionSpec,
    ps: &PointSet,
    p: Exponent,
    q: Exponent,
    opts: &RatioOptions,
) -> Result<UniversalReport> {
    collection.validate()?;
    if !(q == p || q.is_inf()) {
        return Err(Error::InvalidParameters("q must equal p or be ∞".into()));
    }
    ps.validate()?;
    let count = collection.size();
    if count > UNIVERSAL_LIMIT {
        return Err(Error::Guard {
            what: "v-term subspaces".into(),
            actual: count,
            limit: UNIVERSAL_LIMIT,
        });
    }
    let supports: Vec<Vec<usize>> = collection.supports().collect();
    let values: Vec<Result<f64>> = supports
        .par_iter()
        .map(|s| {
            let space = collection.span(s)?;
            let a_u = space.ortho_rows(&ps.points)?;
            let w = ps.norm_weights();
            Ok(side_constant(&space, &a_u, &w, p, q, Side::Left, opts, &[]).value.value())
        })
        .collect();
    let mut worst = 0;
    let mut value = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        if v > value {
            value = v;
            worst = i;
        }
    }
    Ok(UniversalReport {
        v: collection.v,
        subspaces: count,
        value: Constant::from_f64(value),
        worst: supports[worst].clone(),
    })
}
