//! Sampling operators, discrete norms, LDI/RDI constants and the lower-bound
//! audits for one-sided discretization.

mod audits;
mod khinchin;

pub use audits::{
    ril1_audit, rip1_audit, rip3_audit, rip3_bound, wrdi_audit, wrdi_transfer, Ril1Report,
    Ril1Row, Rip1Report, Rip3Audit, WrdiAudit,
};
pub use khinchin::{khinchin_audit, khinchin_constant, rademacher_average, KhinchinReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::weighted_norm;
use crate::fnspace::{Point, Space, Target};
use crate::linalg::{self, CMat, CVec};
use crate::optim::{self, Method, NormMap, RatioOptions, RatioProblem};
use crate::scalar::{Constant, Exponent, C64};
use crate::serial::CoefVector;

/// Sample points `ξ^1..ξ^m` (repetitions allowed) with optional weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub points: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
}

impl PointSet {
    pub fn new(points: Vec<Point>) -> Self {
        PointSet {
            points,
            weights: None,
            weight_budget: None,
            seed: None,
            grid_size: None,
        }
    }

    pub fn weighted(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        let ps = PointSet {
            weights: Some(weights),
            ..Self::new(points)
        };
        ps.validate()?;
        Ok(ps)
    }

    pub fn scalars(xs: &[f64]) -> Self {
        Self::new(xs.iter().map(|&x| Point::scalar(x)).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidParameters("point set is empty".into()));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.points.len() {
                return Err(Error::InvalidParameters(format!(
                    "{} weights for {} points",
                    w.len(),
                    self.points.len()
                )));
            }
            if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidParameters("weights must be nonnegative".into()));
            }
            if let Some(b) = self.weight_budget {
                let s: f64 = w.iter().sum();
                if s > b + 1e-12 {
                    return Err(Error::InvalidParameters(format!(
                        "weights sum to {s}, above the budget {b}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    /// The weights of the discrete norm: `λ_j`, or `1/m` when unweighted.
    pub fn norm_weights(&self) -> Vec<f64> {
        match &self.weights {
            Some(w) => w.clone(),
            None => vec![1.0 / self.len() as f64; self.len()],
        }
    }

    /// Every point repeated `k` times in place (weights split evenly).
    pub fn replicate(&self, k: usize) -> PointSet {
        let points = self
            .points
            .iter()
            .flat_map(|p| std::iter::repeat_n(p.clone(), k))
            .collect();
        let weights = self.weights.as_ref().map(|w| {
            w.iter()
                .flat_map(|x| std::iter::repeat_n(x / k as f64, k))
                .collect()
        });
        PointSet {
            points,
            weights,
            ..self.clone()
        }
    }
}

/// `(f(ξ^1), ..., f(ξ^m))`.
pub fn sample_vector(f: &Target, ps: &PointSet) -> CVec {
    CVec::from_iterator(ps.len(), ps.points.iter().map(|x| f.value(x)))
}

/// Discrete norm: `(m^{-1} Σ |v_j|^q)^{1/q}` unweighted, `(Σ w_j |v_j|^q)^{1/q}`
/// weighted; the max over the support for `q = ∞`.
pub fn disc_norm(v: &CVec, q: Exponent, weights: Option<&[f64]>) -> Result<f64> {
    let m = v.len();
    if m == 0 {
        return Err(Error::InvalidParameters("empty sampling vector".into()));
    }
    match weights {
        None => Ok(weighted_norm(v, &vec![1.0 / m as f64; m], q)),
        Some(w) => {
            if w.len() != m {
                return Err(Error::InvalidParameters(format!("{} weights for {m} values", w.len())));
            }
            if w.iter().any(|x| !(*x >= 0.0)) {
                return Err(Error::InvalidParameters("negative weight".into()));
            }
            if q.is_inf() {
                return Ok(v
                    .iter()
                    .zip(w)
                    .filter(|(_, w)| **w > 0.0)
                    .map(|(z, _)| z.norm())
                    .fold(0.0, f64::max));
            }
            Ok(weighted_norm(v, w, q))
        }
    }
}

/// The discrete `q`-norm of `S(f, ξ)` as a seminorm on orthonormal coordinates.
pub fn disc_map(a_u: &CMat, weights: &[f64], q: Exponent) -> NormMap {
    if q.is_inf() && weights.contains(&0.0) {
        let keep: Vec<usize> = (0..weights.len()).filter(|&j| weights[j] > 0.0).collect();
        let rows = CMat::from_fn(keep.len(), a_u.ncols(), |i, k| a_u[(keep[i], k)]);
        return NormMap::sampled(rows, vec![1.0; keep.len()], q);
    }
    NormMap::sampled(a_u.clone(), weights.to_vec(), q)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `‖f‖_p ≤ D ‖S f‖_q`.
    Left,
    /// `‖S f‖_q ≤ D ‖f‖_p`.
    Right,
}

/// One measured constant with its witness in orthonormal coordinates.
#[derive(Clone, Debug)]
pub struct SideConstant {
    pub value: Constant,
    pub witness: CVec,
    pub method: Method,
    /// The value is only known to be a lower bound of the supremum.
    pub lower_bound: bool,
    pub sweep: Option<f64>,
    /// A caller-supplied candidate beat the optimiser.
    pub from_hint: bool,
}

/// Measures one side for the points with orthonormal design `a_u`.
/// `hints` (orthonormal coordinates) are evaluated as candidate witnesses.
#[allow(clippy::too_many_arguments)]
pub fn side_constant(
    space: &Space,
    a_u: &CMat,
    weights: &[f64],
    p: Exponent,
    q: Exponent,
    side: Side,
    opts: &RatioOptions,
    hints: &[CVec],
) -> SideConstant {
    let disc = disc_map(a_u, weights, q);
    let cont = space.norm_map(p);
    let (num, den) = match side {
        Side::Right => (disc.clone(), cont),
        Side::Left => (cont, disc.clone()),
    };
    let problem = RatioProblem {
        num,
        den,
        field: space.field(),
        dim: space.dim(),
    };
    let mut o = opts.clone();
    o.seeds.extend(hints.iter().cloned());
    if side == Side::Right {
        let mut order: Vec<usize> = (0..a_u.nrows()).collect();
        let k: Vec<f64> = (0..a_u.nrows()).map(|j| a_u.row(j).norm_squared() * weights[j].max(0.0)).collect();
        order.sort_by(|&a, &b| k[b].total_cmp(&k[a]).then(a.cmp(&b)));
        for &j in order.iter().take(4) {
            let u = a_u.row(j).adjoint();
            if u.norm() > 0.0 {
                o.seeds.push(linalg::normalized(&u));
            }
        }
    }
    let out = optim::sup_ratio(&problem, &o);
    if !out.value.is_finite() {
        return SideConstant {
            value: out.value,
            witness: out.witness,
            method: out.method,
            lower_bound: false,
            sweep: out.sweep_value,
            from_hint: false,
        };
    }
    let refined = |c: &CVec| -> f64 {
        let d = disc.eval(c);
        let f = space.lp_norm_ortho(c, p);
        let (n, m) = match side {
            Side::Right => (d, f),
            Side::Left => (f, d),
        };
        if m == 0.0 {
            if n == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            n / m
        }
    };
    let mut value = if p.is_inf() { refined(&out.witness) } else { out.value.value() };
    let mut witness = out.witness.clone();
    let mut from_hint = false;
    for h in hints {
        let r = refined(h);
        if r > value {
            value = r;
            witness = linalg::normalized(h);
            from_hint = true;
        }
    }
    SideConstant {
        value: Constant::from_f64(value),
        witness,
        method: out.method,
        lower_bound: out.lower_bound_only(),
        sweep: out.sweep_value,
        from_hint,
    }
}

#[derive(Clone, Debug, Default)]
pub struct DiscOptions {
    pub ratio: RatioOptions,
    /// Candidate witnesses (orthonormal coordinates) for each side.
    pub left_hints: Vec<CVec>,
    pub right_hints: Vec<CVec>,
}

impl DiscOptions {
    pub fn with_seed(seed: u64) -> Self {
        DiscOptions {
            ratio: RatioOptions::with_seed(seed),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidePair<T> {
    pub left: T,
    pub right: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    /// `D_L · D_R − 1` when both are finite.
    pub chaining: Option<f64>,
    pub lower_bound: SidePair<bool>,
    pub sweep: SidePair<Option<f64>>,
}

/// Measured LDI/RDI constants of a space at a point set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscReport {
    pub p: Exponent,
    pub q: Exponent,
    #[serde(rename = "D_L")]
    pub d_left: Constant,
    #[serde(rename = "D_R")]
    pub d_right: Constant,
    pub method: SidePair<Method>,
    /// Raw coefficients of the extremal elements.
    pub witnesses: SidePair<CoefVector>,
    pub margins: Margins,
    pub grid_size: usize,
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    pub weighted: bool,
}

/// `D_R = sup ‖S f‖_q / ‖f‖_p` and `D_L = sup ‖f‖_p / ‖S f‖_q` over the space.
pub fn disc_constants(
    space: &Space,
    ps: &PointSet,
    p: Exponent,
    q: Exponent,
    opts: &DiscOptions,
) -> Result<DiscReport> {
    ps.validate()?;
    let a_u = space.ortho_rows(&ps.points)?;
    let w = ps.norm_weights();
    let right = side_constant(space, &a_u, &w, p, q, Side::Right, &opts.ratio, &opts.right_hints);
    let left = side_constant(space, &a_u, &w, p, q, Side::Left, &opts.ratio, &opts.left_hints);
    let chaining = match (left.value, right.value) {
        (Constant::Finite(l), Constant::Finite(r)) => Some(l * r - 1.0),
        _ => None,
    };
    Ok(DiscReport {
        p,
        q,
        d_left: left.value,
        d_right: right.value,
        method: SidePair {
            left: left.method,
            right: right.method,
        },
        witnesses: SidePair {
            left: CoefVector::from(&space.to_raw(&left.witness)),
            right: CoefVector::from(&space.to_raw(&right.witness)),
        },
        margins: Margins {
            chaining,
            lower_bound: SidePair {
                left: left.lower_bound,
                right: right.lower_bound,
            },
            sweep: SidePair {
                left: left.sweep,
                right: right.sweep,
            },
        },
        grid_size: space.domain().grid_size,
        seed: opts.ratio.seed,
        m: ps.len(),
        n: space.dim(),
        weighted: ps.is_weighted(),
    })
}

/// Whether `f ↦ S(f, ξ)` is injective on the space (design rank `N`).
pub fn is_injective(space: &Space, ps: &PointSet) -> Result<bool> {
    let n = space.dim();
    if ps.len() < n {
        return Ok(false);
    }
    let a = space.ortho_rows(&ps.points)?;
    let (vals, _) = linalg::hermitian_eigen(&linalg::hermitize(&(a.adjoint() * &a)));
    let vmax = vals.last().copied().unwrap_or(0.0);
    Ok(vals[0] > (linalg::DEGENERACY_RTOL * vmax).max(1e-20))
}

/// Coordinates of `e_i` in the orthonormal basis, i.e. the raw generator `φ_i`.
pub(crate) fn generator_coords(space: &Space, i: usize) -> CVec {
    let mut e = CVec::zeros(space.dim());
    e[i] = C64::new(1.0, 0.0);
    space.from_raw(&e)
}

/// Christoffel extremals at each sample point (orthonormal coordinates).
pub(crate) fn sample_extremals(space: &Space, ps: &PointSet) -> Vec<CVec> {
    ps.points.iter().map(|x| space.christoffel_extremal(x)).collect()
}
