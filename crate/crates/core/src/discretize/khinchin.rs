use serde::{Deserialize, Serialize};

use super::{disc_map, sample_extremals, side_constant, PointSet, Side};
use crate::error::{Error, Result};
use crate::fnspace::Space;
use crate::linalg::CVec;
use crate::optim::RatioOptions;
use crate::scalar::{abs_pow, Exponent, C64};

const REL_TOL: f64 = 1e-9;

/// Sharp upper Khinchin constant for `p ≥ 2`:
/// `K_p = √2 (Γ((p+1)/2) / √π)^{1/p}`, so `K_p^p = E|g|^p` for a standard Gaussian.
pub fn khinchin_constant(p: f64) -> Result<f64> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::InvalidParameters(format!(
            "Khinchin constant needs 2 ≤ p < ∞, got {p}"
        )));
    }
    if p == 2.0 {
        return Ok(1.0);
    }
    let g = libm::tgamma(0.5 * (p + 1.0)) / std::f64::consts::PI.sqrt();
    Ok(2f64.sqrt() * g.powf(1.0 / p))
}

/// `E |Σ r_i a_i|^p` over independent signs, by enumerating all patterns.
pub fn rademacher_average(a: &[C64], p: f64) -> Result<f64> {
    let n = a.len();
    if n == 0 {
        return Ok(0.0);
    }
    if n > 24 {
        return Err(Error::Guard {
            what: "sign enumeration length".into(),
            actual: n as u128,
            limit: 24,
        });
    }
    // |Σ r_i a_i| is invariant under a global sign flip, so fix r_0 = +1.
    let patterns = 1usize << (n - 1);
    let total: f64 = (0..patterns)
        .map(|s| {
            let mut z = a[0];
            for (i, ai) in a.iter().enumerate().skip(1) {
                if s & (1 << (i - 1)) != 0 {
                    z -= ai;
                } else {
                    z += ai;
                }
            }
            abs_pow(z, p)
        })
        .sum();
    Ok(total / patterns as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KhinchinReport {
    pub p: f64,
    pub n: usize,
    pub m: usize,
    pub k_p: f64,
    pub d1: f64,
    pub d2: f64,
    pub m_const: f64,
    /// `∫ Σ λ_j |f(ξ^j, θ)|^p dθ`, enumerated exactly.
    pub average: f64,
    /// `D₁^{-p} N^{p/2}`.
    pub lower: f64,
    /// `K_p^p Σ λ_j (Σ_i |u_i(ξ^j)|²)^{p/2}`.
    pub khinchin_rhs: f64,
    /// `K_p^p m (D₂ M)^p`.
    pub lemma_rhs: f64,
    /// `N^{p/2}` and `m (K_p D₁ D₂ M)^p`.
    pub final_lhs: f64,
    pub final_rhs: f64,
    /// Relative slack of each link, in chain order.
    pub slacks: Vec<f64>,
    pub holds: bool,
}

/// Exact audit of the Rademacher-average chain for weighted two-sided
/// discretization `D₁^{-1}‖f‖₂ ≤ (Σ λ_j|f(ξ^j)|^p)^{1/p} ≤ D₂‖f‖_p`.
/// `d1`, if given, must be at least the measured lower constant.
pub fn khinchin_audit(
    space: &Space,
    ps: &PointSet,
    p: f64,
    d1: Option<f64>,
    opts: &RatioOptions,
) -> Result<KhinchinReport> {
    let k_p = khinchin_constant(p)?;
    ps.validate()?;
    let n = space.dim();
    if n > 12 {
        return Err(Error::Guard {
            what: "N for sign enumeration".into(),
            actual: n as u128,
            limit: 12,
        });
    }
    let pe = Exponent::new(p)?;
    let a_u = space.ortho_rows(&ps.points)?;
    let w = ps.norm_weights();
    let m = ps.len();
    let disc = disc_map(&a_u, &w, pe);

    let signs: Vec<CVec> = (0..1usize << (n - 1))
        .map(|s| {
            CVec::from_fn(n, |i, _| {
                let neg = i > 0 && s & (1 << (i - 1)) != 0;
                C64::new(if neg { -1.0 } else { 1.0 }, 0.0)
            })
        })
        .collect();
    let disc_at: Vec<f64> = signs.iter().map(|t| disc.eval(t)).collect();
    let sqrt_n = (n as f64).sqrt();
    let mut by_ratio: Vec<usize> = (0..signs.len()).collect();
    by_ratio.sort_by(|&a, &b| disc_at[a].total_cmp(&disc_at[b]).then(a.cmp(&b)));
    let hints: Vec<CVec> = by_ratio.iter().take(4).map(|&i| signs[i].clone()).collect();
    let left = side_constant(space, &a_u, &w, Exponent::TWO, pe, Side::Left, opts, &hints);
    let sign_max = disc_at
        .iter()
        .map(|d| if *d == 0.0 { f64::INFINITY } else { sqrt_n / d })
        .fold(0.0, f64::max);
    let measured = left.value.value().max(sign_max);
    if !measured.is_finite() {
        return Err(Error::Premise(
            "lower weighted discretization fails: the sampling operator has a kernel".into(),
        ));
    }
    let d1 = match d1 {
        Some(d) if d >= measured * (1.0 - REL_TOL) => d,
        Some(d) => {
            return Err(Error::Premise(format!(
                "supplied D1 = {d} is below the measured {measured}"
            )))
        }
        None => measured,
    };

    let extremals = sample_extremals(space, ps);
    let d2 = side_constant(space, &a_u, &w, pe, pe, Side::Right, opts, &extremals)
        .value
        .value();
    let mut mo = opts.clone();
    mo.candidates.extend(extremals);
    let m_const = space.nikolskii(Exponent::TWO, pe, &mo)?.value;

    let average = disc_at.iter().map(|d| d.powf(p)).sum::<f64>() / signs.len() as f64;
    let christoffel_sum: f64 = (0..m)
        .map(|j| w[j] * a_u.row(j).norm_squared().powf(0.5 * p))
        .sum();
    let kpp = k_p.powf(p);
    let lower = d1.powf(-p) * (n as f64).powf(0.5 * p);
    let khinchin_rhs = kpp * christoffel_sum;
    let lemma_rhs = kpp * m as f64 * (d2 * m_const).powf(p);
    let final_lhs = (n as f64).powf(0.5 * p);
    let final_rhs = m as f64 * (k_p * d1 * d2 * m_const).powf(p);
    let rel = |l: f64, r: f64| (r - l) / r.abs().max(f64::MIN_POSITIVE);
    let slacks = vec![
        rel(lower, average),
        rel(average, khinchin_rhs),
        rel(khinchin_rhs, lemma_rhs),
        rel(final_lhs, final_rhs),
    ];
    let holds = slacks.iter().all(|s| *s >= -REL_TOL);
    Ok(KhinchinReport {
        p,
        n,
        m,
        k_p,
        d1,
        d2,
        m_const,
        average,
        lower,
        khinchin_rhs,
        lemma_rhs,
        final_lhs,
        final_rhs,
        slacks,
        holds,
    })
}
