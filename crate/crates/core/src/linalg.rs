//! Dense complex linear algebra on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::scalar::C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative eigenvalue threshold below which a Gram matrix is degenerate.
pub const DEGENERACY_RTOL: f64 = 1e-10;

/// Eigenvalues (ascending) and matching eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let sym = hermitize(h);
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// `(H + H*) / 2`.
pub fn hermitize(h: &CMat) -> CMat {
    (h + h.adjoint()).map(|z| z * 0.5)
}

/// Lower Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky(g: &CMat) -> Option<CMat> {
    Cholesky::new(hermitize(g)).map(|c| c.l())
}

/// Inverse of a lower-triangular matrix.
pub fn lower_inverse(l: &CMat) -> CMat {
    let n = l.nrows();
    let id = CMat::identity(n, n);
    l.solve_lower_triangular(&id)
        .expect("lower-triangular factor with nonzero diagonal")
}

/// Generalized eigenvalues of `H v = λ G v` (ascending), `G` positive definite.
///
/// Returned vectors are `G`-orthonormal.
pub fn generalized_eigen(h: &CMat, g: &CMat) -> Result<(Vec<f64>, CMat)> {
    let l = cholesky(g).ok_or_else(|| {
        let (ev, _) = hermitian_eigen(g);
        Error::DegenerateSystem {
            smallest: ev.first().copied().unwrap_or(0.0),
            largest: ev.last().copied().unwrap_or(0.0),
        }
    })?;
    let li = lower_inverse(&l);
    let c = &li * h * li.adjoint();
    let (vals, vecs) = hermitian_eigen(&c);
    Ok((vals, li.adjoint() * vecs))
}

/// Numerical rank with singular values above `rtol * σ_max` (and above an
/// absolute floor for the all-zero matrix).
pub fn rank(a: &CMat, rtol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let s = a.clone().singular_values();
    let smax = s.iter().cloned().fold(0.0, f64::max);
    if smax <= f64::MIN_POSITIVE {
        return 0;
    }
    s.iter().filter(|&&v| v > rtol * smax).count()
}

/// Orthonormal basis (columns) of the row space of `a`, i.e. the orthogonal
/// complement of its kernel, with relative singular-value cutoff `rtol`.
pub fn row_space_basis(a: &CMat, rtol: f64) -> CMat {
    let n = a.ncols();
    if a.nrows() == 0 {
        return CMat::zeros(n, 0);
    }
    // Work on A*A so the SVD always returns a full set of right vectors.
    let h = a.adjoint() * a;
    let (vals, vecs) = hermitian_eigen(&h);
    let vmax = vals.last().copied().unwrap_or(0.0).max(0.0);
    if vmax <= f64::MIN_POSITIVE {
        return CMat::zeros(n, 0);
    }
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i] > rtol * rtol * vmax).collect();
    let mut out = CMat::zeros(n, keep.len());
    for (k, &i) in keep.iter().rev().enumerate() {
        out.set_column(k, &vecs.column(i));
    }
    out
}

/// Minimum-norm least-squares solution of `A x ≈ b`.
pub fn min_norm_lstsq(a: &CMat, b: &CVec, rtol: f64) -> CVec {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return CVec::zeros(n);
    }
    let svd = SVD::new(a.clone(), true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax <= f64::MIN_POSITIVE {
        return CVec::zeros(n);
    }
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let utb = u.adjoint() * b;
    let mut y = CVec::zeros(svd.singular_values.len());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > rtol * smax {
            y[i] = utb[i] / s;
        }
    }
    vt.adjoint() * y
}

/// Orthonormal basis of the orthogonal complement of a single vector
/// (an `n × (n-1)` matrix).
pub fn complement_basis(a: &CVec) -> CMat {
    let n = a.len();
    let norm = a.norm();
    let mut out = CMat::zeros(n, n.saturating_sub(1));
    if n <= 1 || norm == 0.0 {
        return out;
    }
    let proj = a.map(|z| z / norm);
    let mut k = 0;
    for e in 0..n {
        if k == n - 1 {
            break;
        }
        let mut v = CVec::zeros(n);
        v[e] = C64::new(1.0, 0.0);
        let c = proj.dotc(&v);
        v -= proj.map(|z| z * c);
        for j in 0..k {
            let col = out.column(j).into_owned();
            let c = col.dotc(&v);
            v -= col.map(|z| z * c);
        }
        let nv = v.norm();
        if nv > 1e-8 {
            out.set_column(k, &v.map(|z| z / nv));
            k += 1;
        }
    }
    out
}

/// Unit-norm copy (returns the input if it is zero).
pub fn normalized(v: &CVec) -> CVec {
    let n = v.norm();
    if n == 0.0 {
        v.clone()
    } else {
        v.map(|z| z / n)
    }
}

pub fn real_matrix(a: &DMatrix<f64>) -> CMat {
    a.map(|x| C64::new(x, 0.0))
}

pub fn is_real_matrix(a: &CMat) -> bool {
    a.iter().all(|z| z.im == 0.0)
}

pub fn is_real_vector(v: &CVec) -> bool {
    v.iter().all(|z| z.im == 0.0)
}
