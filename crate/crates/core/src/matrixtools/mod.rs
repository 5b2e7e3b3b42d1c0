//! Design matrices, operator `(r, p)`-norms, pointwise estimates and
//! row-subset selection.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::PointSet;
use crate::error::{Error, Result};
use crate::fit::conjugate;
use crate::fnspace::Space;
use crate::linalg::{self, CMat, CVec};
use crate::optim::{self, binomial, NormMap, RatioOptions, RatioProblem};
use crate::scalar::{Constant, Exponent, Field, C64};
use crate::serial::{CoefVector, MatrixData};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Raw,
    Orthonormal,
}

/// `m₀ × N` matrix whose column `i` is `(u_i(ξ^1), ..., u_i(ξ^{m₀}))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    #[serde(with = "matrix_serde")]
    pub a: CMat,
    pub subspace_id: String,
    pub pointset_id: String,
    pub basis: BasisKind,
}

mod matrix_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(a: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixData::from(a).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        Ok(MatrixData::deserialize(d)?.to_cmat())
    }
}

/// FNV-1a digest of a JSON rendering, used as a short provenance id.
fn digest<T: Serialize>(v: &T) -> String {
    let bytes = serde_json::to_vec(v).unwrap_or_default();
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

pub fn build_design(space: &Space, ps: &PointSet, basis: BasisKind) -> Result<DesignMatrix> {
    ps.validate()?;
    let a = match basis {
        BasisKind::Raw => space.raw_rows(&ps.points)?,
        BasisKind::Orthonormal => space.ortho_rows(&ps.points)?,
    };
    Ok(DesignMatrix {
        a,
        subspace_id: digest(&space.spec()),
        pointset_id: digest(ps),
        basis,
    })
}

/// Writes a matrix as CSV with columns `re_0, im_0, re_1, im_1, ...`.
pub fn write_matrix_csv<W: std::io::Write>(a: &CMat, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = (0..a.ncols())
        .flat_map(|j| [format!("re_{j}"), format!("im_{j}")])
        .collect();
    w.write_record(&header)?;
    for i in 0..a.nrows() {
        let rec: Vec<String> = a
            .row(i)
            .iter()
            .flat_map(|z| [format!("{:?}", z.re), format!("{:?}", z.im)])
            .collect();
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a matrix written by [`write_matrix_csv`]. A header without `im_`
/// columns is read as a real matrix.
pub fn read_matrix_csv<R: std::io::Read>(input: R) -> Result<CMat> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let complex = header.iter().any(|h| h.starts_with("im_"));
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidParameters(format!("bad matrix entry: {e}")))?;
        rows.push(if complex {
            vals.chunks(2).map(|c| C64::new(c[0], c.get(1).copied().unwrap_or(0.0))).collect()
        } else {
            vals.into_iter().map(|x| C64::new(x, 0.0)).collect()
        });
    }
    let n = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidParameters("ragged matrix".into()));
    }
    Ok(CMat::from_fn(rows.len(), n, |i, j| rows[i][j]))
}

fn field_of(a: &CMat) -> Field {
    if linalg::is_real_matrix(a) {
        Field::Real
    } else {
        Field::Complex
    }
}

fn lp_unweighted(v: impl Iterator<Item = f64>, p: Exponent) -> f64 {
    if p.is_inf() {
        v.fold(0.0, f64::max)
    } else {
        v.map(|x| x.powf(p.value())).sum::<f64>().powf(1.0 / p.value())
    }
}

/// `‖A‖_{(r,p)} = sup_{‖x‖_{ℓ_r} ≤ 1} ‖A x‖_{ℓ_p}` with unweighted norms.
/// Real matrices are taken over real vectors.
pub fn opnorm_rp(a: &CMat, r: Exponent, p: Exponent) -> f64 {
    opnorm_rp_with(a, r, p, &RatioOptions::default())
}

pub fn opnorm_rp_with(a: &CMat, r: Exponent, p: Exponent, opts: &RatioOptions) -> f64 {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return 0.0;
    }
    if r.is_two() && p.is_two() {
        return a.clone().singular_values().max();
    }
    if r.value() == 1.0 {
        return (0..n)
            .map(|j| lp_unweighted(a.column(j).iter().map(|z| z.norm()), p))
            .fold(0.0, f64::max);
    }
    if p.is_inf() {
        let rc = conjugate(r);
        return (0..m)
            .map(|i| lp_unweighted(a.row(i).iter().map(|z| z.norm()), rc))
            .fold(0.0, f64::max);
    }
    let problem = RatioProblem {
        num: NormMap::sampled(a.clone(), vec![1.0; m], p),
        den: NormMap::sampled(CMat::identity(n, n), vec![1.0; n], r),
        field: field_of(a),
        dim: n,
    };
    optim::sup_ratio(&problem, opts).value.value()
}

/// `A R` with `(1/m₀) (AR)*(AR) = I`, spanning the column space of `A`.
pub fn orthonormal_columns(a: &CMat) -> Result<CMat> {
    let m0 = a.nrows() as f64;
    let h = linalg::hermitize(&(a.adjoint() * a)) / C64::new(m0, 0.0);
    let (vals, vecs) = linalg::hermitian_eigen(&h);
    let vmax = vals.last().copied().unwrap_or(0.0);
    if !(vmax > 0.0) {
        return Err(Error::DegenerateSystem {
            smallest: 0.0,
            largest: vmax,
        });
    }
    let keep: Vec<usize> = (0..vals.len())
        .rev()
        .filter(|&i| vals[i] > linalg::DEGENERACY_RTOL * vmax)
        .collect();
    let mut r = CMat::zeros(a.ncols(), keep.len());
    for (k, &i) in keep.iter().enumerate() {
        r.set_column(k, &(vecs.column(i) / C64::new(vals[i].sqrt(), 0.0)));
    }
    Ok(a * r)
}

fn is_l2m_orthonormal(a: &CMat) -> bool {
    let n = a.ncols();
    let h = a.adjoint() * a / C64::new(a.nrows() as f64, 0.0);
    (h - CMat::identity(n, n)).iter().all(|z| z.norm() <= 1e-6)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    Greedy,
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub subsets_examined: u128,
    pub optimum: f64,
}

/// A row subset `A₁` with its measured RDI(2,2) behaviour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowSelection {
    pub indices: Vec<usize>,
    /// `‖A₁‖_{(2,2)}` after normalising the columns of `A` in `L₂^{m₀}`.
    pub value: f64,
    /// `‖A₁‖_{(2,2)}` on the matrix as given.
    pub raw_value: f64,
    /// `sup ‖A₁x‖_{L₂^m} / ‖Ax‖_{L₂^{m₀}}`.
    pub ratio: f64,
    pub method: SelectionMethod,
    pub renormalized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
}

fn submatrix(a: &CMat, rows: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), a.ncols(), |i, j| a[(rows[i], j)])
}

fn spectral(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.clone().singular_values().max()
}

fn prepare(a: &CMat, m: usize) -> Result<(CMat, bool)> {
    if m == 0 || m > a.nrows() {
        return Err(Error::InvalidParameters(format!(
            "cannot choose {m} rows out of {}",
            a.nrows()
        )));
    }
    if is_l2m_orthonormal(a) {
        Ok((a.clone(), false))
    } else {
        Ok((orthonormal_columns(a)?, true))
    }
}

fn finish(a: &CMat, u: &CMat, indices: Vec<usize>, method: SelectionMethod, renormalized: bool, certificate: Option<Certificate>) -> RowSelection {
    let sub = submatrix(u, &indices);
    let value = spectral(&sub);
    RowSelection {
        raw_value: spectral(&submatrix(a, &indices)),
        ratio: value / (indices.len() as f64).sqrt(),
        value,
        indices,
        method,
        renormalized,
        certificate,
    }
}

/// Greedy choice of `m` distinct rows: each step adds the row that keeps the
/// largest eigenvalue of the running Gram `A₁*A₁` smallest (ties: lowest index).
pub fn select_rdi_rows(a: &CMat, m: usize) -> Result<RowSelection> {
    let (u, renorm) = prepare(a, m)?;
    let n = u.ncols();
    let mut gram = CMat::zeros(n, n);
    let mut chosen: Vec<usize> = Vec::with_capacity(m);
    for _ in 0..m {
        let scores: Vec<(usize, f64)> = (0..u.nrows())
            .filter(|i| !chosen.contains(i))
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&i| {
                let row = u.row(i);
                let g = &gram + row.adjoint() * row;
                let (vals, _) = linalg::hermitian_eigen(&linalg::hermitize(&g));
                (i, *vals.last().expect("n > 0"))
            })
            .collect();
        let (best, _) = scores
            .into_iter()
            .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        let row = u.row(best);
        gram += row.adjoint() * row;
        chosen.push(best);
    }
    chosen.sort_unstable();
    Ok(finish(a, &u, chosen, SelectionMethod::Greedy, renorm, None))
}

/// Smallest `‖A₁‖_{(2,2)}` over all `m`-subsets of distinct rows
/// (ties: lexicographically first subset).
pub fn exhaustive_rdi_rows(a: &CMat, m: usize, limit: u128) -> Result<RowSelection> {
    let (u, renorm) = prepare(a, m)?;
    let count = binomial(u.nrows(), m);
    if count > limit {
        return Err(Error::Guard {
            what: "row subsets".into(),
            actual: count,
            limit,
        });
    }
    let subsets: Vec<Vec<usize>> = (0..u.nrows()).combinations(m).collect();
    let values: Vec<f64> = subsets.par_iter().map(|s| spectral(&submatrix(&u, s))).collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    let cert = Certificate {
        subsets_examined: count,
        optimum: values[best],
    };
    Ok(finish(a, &u, subsets[best].clone(), SelectionMethod::Exhaustive, renorm, Some(cert)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PointwiseSide {
    /// `‖A x‖_p ≤ D ‖A₁ x‖_p`.
    Ldi,
    /// `‖A₁ x‖_p ≤ D ‖A x‖_p`.
    Rdi,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormCorollary {
    pub r: Exponent,
    /// `‖A₁‖_{(r,p)}`.
    pub lhs: f64,
    /// `D (m/m₀)^{1/p} ‖A‖_{(r,p)}` with the measured `D`.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseReport {
    pub side: PointwiseSide,
    pub p: Exponent,
    pub d: f64,
    /// Smallest constant that works, as measured.
    pub measured: Constant,
    pub holds: bool,
    /// The `x` attaining the measured constant.
    pub witness: CoefVector,
    pub corollaries: Vec<NormCorollary>,
}

/// Checks a pointwise estimate between `A` and its row submatrix in the
/// `L_p^m` norms (weights `1/m₀` and `1/m`).
pub fn pointwise_check(
    a: &CMat,
    rows: &[usize],
    side: PointwiseSide,
    p: Exponent,
    d: f64,
    opts: &RatioOptions,
) -> Result<PointwiseReport> {
    let (m0, n) = a.shape();
    if rows.is_empty() || rows.iter().any(|&i| i >= m0) {
        return Err(Error::InvalidParameters("row index out of range".into()));
    }
    let a1 = submatrix(a, rows);
    let m = rows.len();
    let full = NormMap::sampled(a.clone(), vec![1.0 / m0 as f64; m0], p);
    let sub = NormMap::sampled(a1.clone(), vec![1.0 / m as f64; m], p);
    let (num, den) = match side {
        PointwiseSide::Ldi => (full, sub),
        PointwiseSide::Rdi => (sub, full),
    };
    let problem = RatioProblem {
        num,
        den,
        field: field_of(a),
        dim: n,
    };
    let out = optim::sup_ratio(&problem, opts);
    let holds = match out.value {
        Constant::Finite(v) => v <= d * (1.0 + 1e-9),
        Constant::Infinite => false,
    };
    let mut corollaries = Vec::new();
    if side == PointwiseSide::Rdi {
        if let Constant::Finite(dm) = out.value {
            let factor = if p.is_inf() { 1.0 } else { (m as f64 / m0 as f64).powf(1.0 / p.value()) };
            let mut rs = vec![Exponent::ONE];
            if p.is_two() {
                rs.push(Exponent::TWO);
            }
            for r in rs {
                let lhs = opnorm_rp(&a1, r, p);
                let rhs = dm * factor * opnorm_rp(a, r, p);
                corollaries.push(NormCorollary {
                    r,
                    lhs,
                    rhs,
                    holds: lhs <= rhs * (1.0 + 1e-9),
                });
            }
        }
    }
    Ok(PointwiseReport {
        side,
        p,
        d,
        measured: out.value,
        holds,
        witness: CoefVector::from(&out.witness),
        corollaries,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvenPowerReport {
    pub s: usize,
    pub p: f64,
    /// Dimension of the span of `s`-fold products (at most `N^s`).
    pub product_rank: usize,
    pub selection: RowSelection,
    /// `ratio^{1/s}`: the implied RDI(p) constant on the chosen rows.
    pub implied: f64,
    /// Directly measured RDI(p) constant of `A` on the chosen rows.
    pub measured: f64,
    pub holds: bool,
}

/// For `p = 2s`: selects rows for the product system `{u_{i₁}···u_{i_s}}`
/// by the RDI(2,2) selection and checks the implied RDI(p) for `A` itself.
pub fn even_power_rdi(a: &CMat, s: usize, exhaustive_limit: u128, opts: &RatioOptions) -> Result<EvenPowerReport> {
    if s == 0 {
        return Err(Error::InvalidParameters("s must be positive".into()));
    }
    let (m0, n) = a.shape();
    let mut cols: Vec<CVec> = Vec::new();
    for combo in (0..n).combinations_with_replacement(s) {
        cols.push(CVec::from_fn(m0, |j, _| combo.iter().map(|&i| a[(j, i)]).product()));
    }
    let prod = CMat::from_columns(&cols);
    let basis = orthonormal_columns(&prod)?;
    let r = basis.ncols();
    let selection = if binomial(m0, r) <= exhaustive_limit {
        exhaustive_rdi_rows(&basis, r, exhaustive_limit)?
    } else {
        select_rdi_rows(&basis, r)?
    };
    let p = 2.0 * s as f64;
    let implied = selection.ratio.powf(1.0 / s as f64);
    let report = pointwise_check(
        a,
        &selection.indices,
        PointwiseSide::Rdi,
        Exponent::new(p)?,
        implied,
        opts,
    )?;
    Ok(EvenPowerReport {
        s,
        p,
        product_rank: r,
        implied,
        measured: report.measured.value(),
        holds: report.holds,
        selection,
    })
}
