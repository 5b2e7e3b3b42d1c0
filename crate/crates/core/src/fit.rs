//! Weighted discrete `ℓ_p` fitting: `min_z ‖b − A z‖` in the seminorm
//! `(Σ w_j |·|^p)^{1/p}` (unweighted max for `p = ∞`).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::lp;
use crate::scalar::{abs_pow, Exponent, C64};

const RANK_RTOL: f64 = 1e-12;
const IRLS_MAX_ITER: usize = 2000;
const IRLS_RTOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Fit {
    pub coefficients: CVec,
    /// `‖b − A z‖` in the fitting seminorm.
    pub residual_norm: f64,
    pub iterations: usize,
}

/// `(Σ w_j |v_j|^p)^{1/p}`, or `max |v_j|` for `p = ∞` (weights ignored).
pub fn weighted_norm(v: &CVec, weights: &[f64], p: Exponent) -> f64 {
    if p.is_inf() {
        return v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    let pv = p.value();
    let s: f64 = v.iter().zip(weights).map(|(z, w)| w * abs_pow(*z, pv)).sum();
    s.powf(1.0 / pv)
}

/// Minimises the weighted `ℓ_p` residual. Among minimisers the coefficient
/// vector orthogonal to the kernel of the weighted design is returned.
pub fn lp_fit(a: &CMat, b: &CVec, weights: &[f64], p: Exponent) -> Result<Fit> {
    let m = a.nrows();
    if m == 0 || b.len() != m || weights.len() != m {
        return Err(Error::InvalidParameters(format!(
            "fit shapes: A is {}x{}, b has {}, weights {}",
            m,
            a.ncols(),
            b.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidParameters("negative weight".into()));
    }
    if p.is_inf() {
        let f = lp::chebyshev_fit(a, b, 1e-10)?;
        return Ok(Fit {
            residual_norm: f.max_residual,
            coefficients: f.coefficients,
            iterations: 1,
        });
    }
    if p.is_two() {
        let coefficients = weighted_lstsq(a, b, weights);
        let residual_norm = weighted_norm(&(b - a * &coefficients), weights, p);
        return Ok(Fit {
            coefficients,
            residual_norm,
            iterations: 1,
        });
    }
    match irls(a, b, weights, p.value()) {
        Err(Error::Convergence { .. })
            if p.value() == 1.0 && linalg::is_real_matrix(a) && linalg::is_real_vector(b) =>
        {
            l1_real(a, b, weights)
        }
        other => other,
    }
}

/// Real weighted `ℓ_1` fit as a linear program over `x = x⁺ − x⁻` and
/// residual parts `u − v`, then projected off the kernel.
fn l1_real(a: &CMat, b: &CVec, weights: &[f64]) -> Result<Fit> {
    let n = a.ncols();
    let rows: Vec<usize> = (0..a.nrows()).filter(|&j| weights[j] > 0.0).collect();
    let k = rows.len();
    let mut g = DMatrix::<f64>::zeros(k, 2 * n + 2 * k);
    let mut rhs = vec![0.0; k];
    let mut cost = vec![0.0; 2 * n + 2 * k];
    for (i, &j) in rows.iter().enumerate() {
        for c in 0..n {
            g[(i, c)] = a[(j, c)].re;
            g[(i, n + c)] = -a[(j, c)].re;
        }
        g[(i, 2 * n + i)] = 1.0;
        g[(i, 2 * n + k + i)] = -1.0;
        rhs[i] = b[j].re;
        cost[2 * n + i] = weights[j];
        cost[2 * n + k + i] = weights[j];
    }
    let sol = lp::solve_standard(&g, &rhs, &cost)?;
    let x = CVec::from_iterator(n, (0..n).map(|c| C64::new(sol.y[c] - sol.y[n + c], 0.0)));
    let s: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let basis = linalg::row_space_basis(&row_scaled(a, &s), RANK_RTOL);
    let coefficients = (&basis * (basis.adjoint() * &x)).map(|z| C64::new(z.re, 0.0));
    let residual_norm = weighted_norm(&(b - a * &coefficients), weights, Exponent::ONE);
    Ok(Fit {
        coefficients,
        residual_norm,
        iterations: 1,
    })
}

fn row_scaled(a: &CMat, s: &[f64]) -> CMat {
    let mut out = a.clone();
    for (j, &sj) in s.iter().enumerate() {
        out.row_mut(j).scale_mut(sj);
    }
    out
}

fn weighted_lstsq(a: &CMat, b: &CVec, weights: &[f64]) -> CVec {
    let s: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let sb = CVec::from_iterator(b.len(), b.iter().zip(&s).map(|(z, w)| z * *w));
    linalg::min_norm_lstsq(&row_scaled(a, &s), &sb, RANK_RTOL)
}

/// Iteratively reweighted least squares with a monotone line search.
fn irls(a: &CMat, b: &CVec, weights: &[f64], p: f64) -> Result<Fit> {
    let s: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let basis = linalg::row_space_basis(&row_scaled(a, &s), RANK_RTOL);
    let n = a.ncols();
    if basis.ncols() == 0 {
        return Ok(Fit {
            coefficients: CVec::zeros(n),
            residual_norm: weighted_norm(b, weights, Exponent::new(p)?),
            iterations: 0,
        });
    }
    let ar = a * &basis;
    let objective = |z: &CVec| -> f64 {
        (b - &ar * z)
            .iter()
            .zip(weights)
            .map(|(r, w)| w * abs_pow(*r, p))
            .sum()
    };
    let mut z = weighted_lstsq(&ar, b, weights);
    let mut f = objective(&z);
    let mut last_change = f64::INFINITY;
    for it in 1..=IRLS_MAX_ITER {
        if f == 0.0 {
            return Ok(done(&basis, z, 0.0, p, it));
        }
        let r = b - &ar * &z;
        let scale = r.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let floor = 1e-10 * scale.max(f64::MIN_POSITIVE);
        let v: Vec<f64> = r
            .iter()
            .zip(weights)
            .map(|(x, w)| w * x.norm().max(floor).powf(p - 2.0))
            .collect();
        let target = weighted_lstsq(&ar, b, &v);
        let d = &target - &z;
        // For p > 2 the reweighted step is p − 1 times the Newton step.
        let mut eta = if p > 2.0 { 1.0 / (p - 1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..40 {
            let zt = &z + d.map(|x| x * eta);
            let ft = objective(&zt);
            if ft <= f {
                accepted = Some((zt, ft));
                break;
            }
            eta *= 0.5;
        }
        let Some((zn, fnew)) = accepted else {
            return Ok(done(&basis, z, f, p, it));
        };
        let step = (&zn - &z).norm();
        last_change = step / zn.norm().max(f64::MIN_POSITIVE);
        let decrease = (f - fnew) / f;
        z = zn;
        f = fnew;
        if last_change < IRLS_RTOL && decrease < IRLS_RTOL {
            return Ok(done(&basis, z, f, p, it));
        }
    }
    Err(Error::Convergence {
        iterations: IRLS_MAX_ITER,
        last_change,
        last_iterate: (&basis * z).iter().copied().collect(),
    })
}

fn done(basis: &CMat, z: CVec, f: f64, p: f64, iterations: usize) -> Fit {
    Fit {
        coefficients: basis * z,
        residual_norm: f.powf(1.0 / p),
        iterations,
    }
}

/// Conjugate exponent `p' = p/(p-1)`.
pub fn conjugate(p: Exponent) -> Exponent {
    if p.is_inf() {
        Exponent::ONE
    } else if p.value() == 1.0 {
        Exponent::INF
    } else {
        Exponent::new(p.value() / (p.value() - 1.0)).expect("p > 1")
    }
}
