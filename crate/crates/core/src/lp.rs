//! Dense simplex solver and discrete Chebyshev (min-max) fitting.
//!
//! The min-max problem `min_x max_k (G_k·x - h_k)` is solved through its dual
//!
//! ```text
//!   min  h·y   s.t.  Gᵀ y = 0,  1ᵀ y = 1,  y ≥ 0
//! ```
//!
//! whose optimal simplex multipliers are `(x, -t)`. Complex residuals are
//! handled by a cutting-plane loop over half-plane constraints
//! `Re(e^{-iθ} r_j) ≤ t`, refined at the active residual angles until the
//! polygonal bound meets the true modulus.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::scalar::C64;

const PIVOT_TOL: f64 = 1e-11;
const MAX_PIVOTS: usize = 50_000;

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub y: Vec<f64>,
    pub objective: f64,
    /// Simplex multipliers `π` with `B^T π = c_B`.
    pub duals: Vec<f64>,
}

/// Solves `min cᵀy  s.t.  A y = b, y ≥ 0` with a two-phase tableau simplex.
/// Dantzig pricing, switching to Bland's rule after a run of degenerate pivots.
pub fn solve_standard(a: &DMatrix<f64>, b: &[f64], c: &[f64]) -> Result<LpSolution> {
    let rows = a.nrows();
    let n = a.ncols();
    if b.len() != rows || c.len() != n {
        return Err(Error::LinearProgram("dimension mismatch".into()));
    }
    let width = n + rows + 1;
    let rhs = width - 1;
    let mut t = vec![0.0; rows * width];
    let idx = |i: usize, j: usize| i * width + j;
    for i in 0..rows {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[idx(i, j)] = sign * a[(i, j)];
        }
        t[idx(i, n + i)] = 1.0;
        t[idx(i, rhs)] = sign * b[i];
    }
    let mut basis: Vec<usize> = (n..n + rows).collect();
    let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));

    // Phase one: minimise the sum of artificials.
    let mut cost1 = vec![0.0; n + rows];
    for v in cost1.iter_mut().skip(n) {
        *v = 1.0;
    }
    let allowed1: Vec<bool> = vec![true; n + rows];
    run_simplex(&mut t, &mut basis, rows, width, &cost1, &allowed1)?;
    let infeas: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &bj)| bj >= n)
        .map(|(i, _)| t[idx(i, rhs)])
        .sum();
    if infeas > 1e-9 * scale.max(1.0) {
        return Err(Error::LinearProgram(format!(
            "infeasible (phase-one residual {infeas:e})"
        )));
    }
    // Drive remaining artificials out where possible.
    for i in 0..rows {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[idx(i, j)].abs() > 1e-9) {
                pivot(&mut t, rows, width, i, j);
                basis[i] = j;
            }
        }
    }
    let mut cost2 = vec![0.0; n + rows];
    cost2[..n].copy_from_slice(c);
    let mut allowed2 = vec![true; n + rows];
    for v in allowed2.iter_mut().skip(n) {
        *v = false;
    }
    run_simplex(&mut t, &mut basis, rows, width, &cost2, &allowed2)?;

    let mut y = vec![0.0; n];
    for (i, &bj) in basis.iter().enumerate() {
        if bj < n {
            y[bj] = t[idx(i, rhs)].max(0.0);
        }
    }
    let objective = y.iter().zip(c).map(|(a, b)| a * b).sum();

    // Multipliers from the basis matrix itself for accuracy.
    let mut bmat = DMatrix::<f64>::zeros(rows, rows);
    let mut cb = DVector::<f64>::zeros(rows);
    for (k, &bj) in basis.iter().enumerate() {
        if bj < n {
            for i in 0..rows {
                bmat[(i, k)] = a[(i, bj)];
            }
            cb[k] = c[bj];
        } else {
            bmat[(bj - n, k)] = 1.0;
        }
    }
    let duals = match bmat.transpose().lu().solve(&cb) {
        Some(pi) => pi.iter().copied().collect(),
        None => {
            // Fall back to the tableau's copy of B^{-1}.
            let mut pi = vec![0.0; rows];
            for (col, p) in pi.iter_mut().enumerate() {
                *p = (0..rows)
                    .map(|k| {
                        let cbk = if basis[k] < n { c[basis[k]] } else { 0.0 };
                        cbk * t[idx(k, n + col)]
                    })
                    .sum();
            }
            pi
        }
    };
    Ok(LpSolution {
        y,
        objective,
        duals,
    })
}

fn pivot(t: &mut [f64], rows: usize, width: usize, r: usize, col: usize) {
    let p = t[r * width + col];
    for j in 0..width {
        t[r * width + j] /= p;
    }
    for i in 0..rows {
        if i == r {
            continue;
        }
        let f = t[i * width + col];
        if f != 0.0 {
            for j in 0..width {
                t[i * width + j] -= f * t[r * width + j];
            }
        }
    }
}

fn run_simplex(
    t: &mut [f64],
    basis: &mut [usize],
    rows: usize,
    width: usize,
    cost: &[f64],
    allowed: &[bool],
) -> Result<()> {
    let ncols = width - 1;
    let rhs = width - 1;
    let mut degenerate_run = 0usize;
    for _ in 0..MAX_PIVOTS {
        // Reduced costs.
        let mut enter = None;
        let mut best = -PIVOT_TOL;
        let bland = degenerate_run > 50;
        for j in 0..ncols {
            if !allowed[j] || basis.contains(&j) {
                continue;
            }
            let mut rc = cost[j];
            for i in 0..rows {
                rc -= cost[basis[i]] * t[i * width + j];
            }
            if rc < best {
                enter = Some(j);
                if bland {
                    break;
                }
                best = rc;
            }
        }
        let Some(col) = enter else {
            return Ok(());
        };
        let mut leave = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..rows {
            let v = t[i * width + col];
            if v > PIVOT_TOL {
                let ratio = t[i * width + rhs].max(0.0) / v;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        ratio < best_ratio - 1e-14
                            || (ratio <= best_ratio + 1e-14
                                && if bland {
                                    basis[i] < basis[l]
                                } else {
                                    v > t[l * width + col]
                                })
                    }
                };
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            return Err(Error::LinearProgram("unbounded".into()));
        };
        if best_ratio <= 1e-14 {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
        pivot(t, rows, width, r, col);
        basis[r] = col;
    }
    Err(Error::LinearProgram("pivot limit reached".into()))
}

/// Solves `min_x max_k (G_k·x - h_k)`; returns `(x, value)`.
///
/// `G` must have full column rank and the problem must be bounded below
/// (it is for residual constraints that come in opposing pairs).
pub fn minimax(g: &DMatrix<f64>, h: &[f64]) -> Result<(DVector<f64>, f64)> {
    let k = g.nrows();
    let n = g.ncols();
    let mut a = DMatrix::<f64>::zeros(n + 1, k);
    for j in 0..k {
        for i in 0..n {
            a[(i, j)] = g[(j, i)];
        }
        a[(n, j)] = 1.0;
    }
    let mut b = vec![0.0; n + 1];
    b[n] = 1.0;
    let sol = solve_standard(&a, &b, h)?;
    let x = DVector::from_iterator(n, sol.duals.iter().take(n).copied());
    let value = (0..k)
        .map(|j| g.row(j).transpose().dot(&x) - h[j])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((x, value))
}

/// Result of a discrete Chebyshev fit `min_z max_j |b_j - (A z)_j|`.
#[derive(Clone, Debug)]
pub struct ChebyshevFit {
    pub coefficients: CVec,
    pub max_residual: f64,
    /// Lower bound on the optimum certified by the last LP relaxation.
    pub lower_bound: f64,
}

/// Minimises the maximum modulus of `b - A z`. For real `A`, `b` the fit is an
/// exact LP; otherwise a cutting-plane sequence of LPs is run until the upper
/// and lower bounds agree to `rtol`. The coefficient vector is taken in the
/// orthogonal complement of `ker A`.
pub fn chebyshev_fit(a: &CMat, b: &CVec, rtol: f64) -> Result<ChebyshevFit> {
    let n = a.ncols();
    let m = a.nrows();
    if m == 0 {
        return Err(Error::InvalidParameters("empty point set".into()));
    }
    let basis = linalg::row_space_basis(a, 1e-12);
    let r = basis.ncols();
    if r == 0 {
        let maxres = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
        return Ok(ChebyshevFit {
            coefficients: CVec::zeros(n),
            max_residual: maxres,
            lower_bound: maxres,
        });
    }
    let ar = a * &basis;
    let real = linalg::is_real_matrix(a) && linalg::is_real_vector(b) && linalg::is_real_matrix(&basis);
    if real {
        let mut g = DMatrix::<f64>::zeros(2 * m, r);
        let mut h = vec![0.0; 2 * m];
        for j in 0..m {
            for i in 0..r {
                g[(2 * j, i)] = ar[(j, i)].re;
                g[(2 * j + 1, i)] = -ar[(j, i)].re;
            }
            h[2 * j] = b[j].re;
            h[2 * j + 1] = -b[j].re;
        }
        let (x, value) = minimax(&g, &h)?;
        let z = CVec::from_iterator(r, x.iter().map(|&v| C64::new(v, 0.0)));
        let coeffs = &basis * z;
        let maxres = max_abs(&(b - a * &coeffs));
        return Ok(ChebyshevFit {
            coefficients: coeffs,
            max_residual: maxres,
            lower_bound: value.min(maxres),
        });
    }

    // Complex: half-plane cuts Re(w (b_j - a_j z)) <= t, w = e^{-iθ}.
    let mut cuts: Vec<(usize, C64)> = Vec::new();
    const INITIAL_DIRECTIONS: usize = 8;
    for j in 0..m {
        for d in 0..INITIAL_DIRECTIONS {
            let th = 2.0 * std::f64::consts::PI * d as f64 / INITIAL_DIRECTIONS as f64;
            cuts.push((j, C64::from_polar(1.0, -th)));
        }
    }
    let mut best: Option<(CVec, f64)> = None;
    let mut lower = 0.0;
    for _round in 0..200 {
        let k = cuts.len();
        let mut g = DMatrix::<f64>::zeros(k, 2 * r);
        let mut h = vec![0.0; k];
        for (row, &(j, w)) in cuts.iter().enumerate() {
            for i in 0..r {
                let bw = w * ar[(j, i)];
                g[(row, i)] = -bw.re;
                g[(row, r + i)] = bw.im;
            }
            h[row] = -(w * b[j]).re;
        }
        let (x, value) = minimax(&g, &h)?;
        lower = f64::max(lower, value);
        let z = CVec::from_iterator(r, (0..r).map(|i| C64::new(x[i], x[r + i])));
        let coeffs = &basis * z;
        let res = b - a * &coeffs;
        let maxres = max_abs(&res);
        if best.as_ref().is_none_or(|(_, v)| maxres < *v) {
            best = Some((coeffs.clone(), maxres));
        }
        let (_, upper) = best.as_ref().expect("set above");
        if *upper <= lower * (1.0 + rtol) + 1e-300 {
            break;
        }
        let thresh = lower * (1.0 + 0.25 * rtol);
        let mut added = 0;
        for (j, z) in res.iter().enumerate() {
            if z.norm() > thresh && z.norm() > 0.0 {
                cuts.push((j, z.conj() / z.norm()));
                added += 1;
            }
        }
        if added == 0 {
            break;
        }
    }
    let (coefficients, max_residual) = best.expect("at least one round");
    Ok(ChebyshevFit {
        coefficients,
        max_residual,
        lower_bound: lower.min(max_residual),
    })
}

pub(crate) fn max_abs(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
