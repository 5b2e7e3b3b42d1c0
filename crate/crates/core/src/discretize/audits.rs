use serde::{Deserialize, Serialize};

use super::{generator_coords, is_injective, sample_extremals, side_constant, PointSet, Side};
use crate::error::{Error, Result};
use crate::fnspace::{DomainSpec, FunctionSystem, Space};
use crate::optim::RatioOptions;
use crate::scalar::Exponent;

const REL_TOL: f64 = 1e-9;

fn rip_exponents(p: Exponent, q: Exponent) -> Result<()> {
    if !(p.value() > 2.0) || p.is_inf() {
        return Err(Error::Premise(format!("needs 2 < p < ∞, got p = {p}")));
    }
    if q.is_inf() {
        return Err(Error::Premise("needs q < ∞".into()));
    }
    Ok(())
}

/// Measured `D` (right side, weights of `ps`) and `M = NI(2, p)`, both
/// seeded with the Christoffel extremals at the sample points.
fn measured_d_and_m(
    space: &Space,
    ps: &PointSet,
    p: Exponent,
    q: Exponent,
    opts: &RatioOptions,
) -> Result<(f64, f64)> {
    let a_u = space.ortho_rows(&ps.points)?;
    let w = ps.norm_weights();
    let extremals = sample_extremals(space, ps);
    let d = side_constant(space, &a_u, &w, p, q, Side::Right, opts, &extremals)
        .value
        .value();
    let mut mo = opts.clone();
    mo.candidates.extend(extremals);
    let m = space.nikolskii(Exponent::TWO, p, &mo)?.value;
    Ok((d, m))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ril1Row {
    pub index: usize,
    pub weight: f64,
    pub christoffel: f64,
    /// `λ_j K(ξ^j)^{q/2}`.
    pub lhs: f64,
    /// `(D M)^q`.
    pub rhs: f64,
    /// `(rhs − lhs) / rhs`.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ril1Report {
    pub p: Exponent,
    pub q: Exponent,
    pub d: f64,
    pub m_const: f64,
    pub rows: Vec<Ril1Row>,
    pub worst_slack: f64,
    pub violations: usize,
}

/// Checks `λ_j (Σ_i |u_i(ξ^j)|²)^{q/2} ≤ (D M)^q` at every sample point,
/// with `D` the measured weighted right constant and `M = NI(2, p)`.
pub fn ril1_audit(
    space: &Space,
    ps: &PointSet,
    p: Exponent,
    q: Exponent,
    opts: &RatioOptions,
) -> Result<Ril1Report> {
    rip_exponents(p, q)?;
    ps.validate()?;
    let (d, m_const) = measured_d_and_m(space, ps, p, q, opts)?;
    let w = ps.norm_weights();
    let qv = q.value();
    let rhs = (d * m_const).powf(qv);
    let rows: Vec<Ril1Row> = ps
        .points
        .iter()
        .enumerate()
        .map(|(j, x)| {
            let k = space.christoffel(x).expect("validated point");
            let lhs = w[j] * k.powf(0.5 * qv);
            Ril1Row {
                index: j,
                weight: w[j],
                christoffel: k,
                lhs,
                rhs,
                slack: (rhs - lhs) / rhs,
            }
        })
        .collect();
    let worst_slack = rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    let violations = rows.iter().filter(|r| r.slack < -REL_TOL).count();
    Ok(Ril1Report {
        p,
        q,
        d,
        m_const,
        rows,
        worst_slack,
        violations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rip1Report {
    pub n: usize,
    pub m: usize,
    /// Measured `c` with `Σ|u_i|² ≥ cN` on the sup grid and the sample points.
    pub c: f64,
    pub d: f64,
    pub m_const: f64,
    /// `(cN)^{q/2}`.
    pub lhs: f64,
    /// `m (D M)^q`.
    pub rhs: f64,
    pub holds: bool,
}

/// Unweighted right-side lower bound `(cN)^{q/2} ≤ m (D M)^q`.
pub fn rip1_audit(
    space: &Space,
    ps: &PointSet,
    p: Exponent,
    q: Exponent,
    opts: &RatioOptions,
) -> Result<Rip1Report> {
    rip_exponents(p, q)?;
    let unweighted = PointSet {
        weights: None,
        ..ps.clone()
    };
    unweighted.validate()?;
    let (d, m_const) = measured_d_and_m(space, &unweighted, p, q, opts)?;
    let n = space.dim();
    let kmin = space
        .sup_points()
        .iter()
        .chain(&ps.points)
        .map(|x| space.christoffel(x).expect("domain point"))
        .fold(f64::INFINITY, f64::min);
    let c = kmin / n as f64;
    let lhs = (c * n as f64).powf(0.5 * q.value());
    let rhs = ps.len() as f64 * (d * m_const).powf(q.value());
    Ok(Rip1Report {
        n,
        m: ps.len(),
        c,
        d,
        m_const,
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + REL_TOL),
    })
}

/// `D^{-q} (2a)^{-q/p}`: the fewest points an injective RDI(p, q) with
/// constant `D` can use on a space containing `f_a` and `f_{a/2}`.
pub fn rip3_bound(a: f64, p: f64, q: f64, d: f64) -> Result<f64> {
    if !(a > 0.0 && a <= 0.25) {
        return Err(Error::InvalidParameters(format!("a = {a} outside (0, 1/4]")));
    }
    if !(p >= 1.0 && q >= 1.0) || !p.is_finite() || !q.is_finite() {
        return Err(Error::InvalidParameters("needs p, q in [1, ∞)".into()));
    }
    if !(d > 0.0) {
        return Err(Error::InvalidParameters(format!("D must be positive, got {d}")));
    }
    Ok(d.powf(-q) * (2.0 * a).powf(-q / p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rip3Audit {
    pub a: f64,
    pub m: usize,
    pub injective: bool,
    pub d: f64,
    pub bound: f64,
    /// `m ≥ bound` (vacuously true when not injective).
    pub holds: bool,
}

/// Measures `D_R` for `span{f_a, f_{a/2}}` at `ps` and checks the point count bound.
pub fn rip3_audit(
    a: f64,
    p: Exponent,
    q: Exponent,
    ps: &PointSet,
    grid_size: usize,
    opts: &RatioOptions,
) -> Result<Rip3Audit> {
    rip3_bound(a, p.value(), q.value(), 1.0)?;
    let space = Space::new(FunctionSystem::hat(&[a, a / 2.0])?, DomainSpec::interval(grid_size))?;
    ps.validate()?;
    let unweighted = PointSet {
        weights: None,
        ..ps.clone()
    };
    let injective = is_injective(&space, &unweighted)?;
    let a_u = space.ortho_rows(&ps.points)?;
    let hints = vec![generator_coords(&space, 0), generator_coords(&space, 1)];
    let d = side_constant(
        &space,
        &a_u,
        &unweighted.norm_weights(),
        p,
        q,
        Side::Right,
        opts,
        &hints,
    )
    .value
    .value();
    let bound = if d > 0.0 {
        rip3_bound(a, p.value(), q.value(), d)?
    } else {
        f64::INFINITY
    };
    Ok(Rip3Audit {
        a,
        m: ps.len(),
        injective,
        d,
        bound,
        holds: !injective || ps.len() as f64 >= bound * (1.0 - 1e-12),
    })
}

/// `D M`: the constant that weighted RDI(p) with `D` and `NI(2, p, M)`
/// give for weighted RDI(r), `2 ≤ r < p`.
pub fn wrdi_transfer(d: f64, m: f64, p: f64, r: f64) -> Result<f64> {
    if !(2.0..p).contains(&r) {
        return Err(Error::InvalidParameters(format!("needs 2 ≤ r < p, got r = {r}, p = {p}")));
    }
    if !(d > 0.0 && m > 0.0) {
        return Err(Error::InvalidParameters("D and M must be positive".into()));
    }
    Ok(d * m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WrdiAudit {
    pub p: f64,
    pub r: f64,
    /// Measured weighted RDI(r) constant.
    pub d_r: f64,
    pub d_p: f64,
    pub m_const: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Measures weighted RDI(r) directly and compares it with `D_p · M`.
pub fn wrdi_audit(
    space: &Space,
    ps: &PointSet,
    p: f64,
    r: f64,
    opts: &RatioOptions,
) -> Result<WrdiAudit> {
    ps.validate()?;
    let Some(w) = &ps.weights else {
        return Err(Error::Premise("weights are required".into()));
    };
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Premise(format!("weights sum to {total}, not 1")));
    }
    if !(2.0..p).contains(&r) || !p.is_finite() {
        return Err(Error::InvalidParameters(format!("needs 2 ≤ r < p < ∞, got r = {r}, p = {p}")));
    }
    let (pe, re) = (Exponent::new(p)?, Exponent::new(r)?);
    let a_u = space.ortho_rows(&ps.points)?;
    let extremals = sample_extremals(space, ps);
    let side_r = side_constant(space, &a_u, w, re, re, Side::Right, opts, &extremals);
    let mut hints = extremals;
    hints.push(side_r.witness.clone());
    let d_p = side_constant(space, &a_u, w, pe, pe, Side::Right, opts, &hints)
        .value
        .value();
    let mut mo = opts.clone();
    mo.candidates.extend(hints);
    let m_const = space.nikolskii(Exponent::TWO, pe, &mo)?.value;
    let d_r = side_r.value.value();
    let bound = wrdi_transfer(d_p, m_const, p, r)?;
    Ok(WrdiAudit {
        p,
        r,
        d_r,
        d_p,
        m_const,
        bound,
        holds: d_r <= bound + 1e-9,
    })
}
