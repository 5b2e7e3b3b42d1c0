//! Maximisation of a ratio of seminorms `num(c) / den(c)` over coefficient
//! vectors. Exact paths cover the quadratic, max-over-quadratic and real
//! polytope cases; everything else runs multi-restart projected ascent on
//! the unit sphere.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fit::{self, weighted_norm};
use crate::linalg::{self, CMat, CVec};
use crate::rng::rng_for;
use crate::scalar::{abs_pow, real_pow, Constant, Exponent, Field, C64};

/// Seminorm of a coefficient vector.
#[derive(Clone, Debug)]
pub enum NormMap {
    /// `‖c‖₂`: the `L₂` norm in orthonormal coordinates.
    Euclid,
    /// `‖A c‖` in the weighted `ℓ_p` seminorm of [`fit::weighted_norm`].
    Sampled {
        matrix: CMat,
        weights: Vec<f64>,
        p: Exponent,
    },
}

impl NormMap {
    pub fn sampled(matrix: CMat, weights: Vec<f64>, p: Exponent) -> Self {
        NormMap::Sampled { matrix, weights, p }
    }

    pub fn eval(&self, c: &CVec) -> f64 {
        match self {
            NormMap::Euclid => c.norm(),
            NormMap::Sampled { matrix, weights, p } => weighted_norm(&(matrix * c), weights, *p),
        }
    }

    fn is_quadratic(&self) -> bool {
        match self {
            NormMap::Euclid => true,
            NormMap::Sampled { p, .. } => p.is_two(),
        }
    }

    fn is_max(&self) -> bool {
        matches!(self, NormMap::Sampled { p, .. } if p.is_inf())
    }

    /// `H` with `norm(c)² = c* H c` restricted to rows that count.
    fn quadratic_form(&self, n: usize) -> CMat {
        match self {
            NormMap::Euclid => CMat::identity(n, n),
            NormMap::Sampled { matrix, weights, p } => {
                let mut h = CMat::zeros(n, n);
                #[allow(clippy::needless_range_loop)]
                for j in 0..matrix.nrows() {
                    let w = if p.is_inf() { 1.0 } else { weights[j] };
                    if w > 0.0 {
                        let row = matrix.row(j);
                        h += row.adjoint() * row * C64::new(w, 0.0);
                    }
                }
                linalg::hermitize(&h)
            }
        }
    }

    /// Smoothed norm value and the gradient of its logarithm. Max norms are
    /// replaced by the power mean of order `power`.
    fn log_grad(&self, c: &CVec, power: f64) -> (f64, CVec) {
        match self {
            NormMap::Euclid => {
                let n2 = c.norm_squared();
                (n2.sqrt(), c.map(|z| z / n2))
            }
            NormMap::Sampled { matrix, weights, p } => {
                let r = matrix * c;
                let (pe, use_w) = if p.is_inf() { (power, false) } else { (p.value(), true) };
                let scale = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if scale == 0.0 {
                    return (0.0, CVec::zeros(c.len()));
                }
                let mut s = 0.0;
                let mut v = CVec::zeros(r.len());
                for j in 0..r.len() {
                    let w = if use_w { weights[j] } else { 1.0 };
                    let a = r[j].norm() / scale;
                    if w > 0.0 && a > 0.0 {
                        let t = real_pow(a, pe - 2.0);
                        s += w * t * a * a;
                        v[j] = r[j] * (w * t / (scale * scale));
                    }
                }
                let value = scale * s.powf(1.0 / pe);
                (value, matrix.adjoint() * v / C64::new(s, 0.0))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Generalised eigenvalues (both sides quadratic).
    EigenExact,
    /// Max norm over a quadratic norm, solved row by row.
    ClosedForm,
    /// Vertex enumeration of the real unit ball of a max norm.
    VertexExact,
    /// The denominator vanishes on a vector where the numerator does not.
    Kernel,
    /// Multi-restart ascent (a lower bound on the supremum).
    Optimized,
}

impl Method {
    pub fn is_exact(self) -> bool {
        !matches!(self, Method::Optimized)
    }
}

#[derive(Clone, Debug)]
pub struct RatioOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
    /// Cross-check with a sphere sweep when `N ≤ 3`.
    pub sweep: bool,
    /// Starting points that are ascended before the random restarts.
    pub seeds: Vec<CVec>,
    /// Vectors whose ratio is evaluated and counted but not ascended.
    pub candidates: Vec<CVec>,
    /// Upper bound on real vertex enumeration work.
    pub vertex_limit: u128,
    /// Skip the exact paths (used to test the optimiser against them).
    pub force_optimizer: bool,
}

impl Default for RatioOptions {
    fn default() -> Self {
        RatioOptions {
            restarts: 32,
            max_iter: 2000,
            seed: 0,
            sweep: true,
            seeds: Vec::new(),
            candidates: Vec::new(),
            vertex_limit: 200_000,
            force_optimizer: false,
        }
    }
}

impl RatioOptions {
    pub fn with_seed(seed: u64) -> Self {
        RatioOptions {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct RatioOutcome {
    pub value: Constant,
    pub witness: CVec,
    pub method: Method,
    /// False when the best ascent stopped on the iteration cap.
    pub converged: bool,
    /// Best value seen by the sphere sweep, if it ran.
    pub sweep_value: Option<f64>,
}

impl RatioOutcome {
    /// Optimised values are lower bounds of the supremum unless converged.
    pub fn lower_bound_only(&self) -> bool {
        self.method == Method::Optimized && !self.converged
    }
}

#[derive(Clone, Debug)]
pub struct RatioProblem {
    pub num: NormMap,
    pub den: NormMap,
    pub field: Field,
    pub dim: usize,
}

impl RatioProblem {
    pub fn ratio(&self, c: &CVec) -> f64 {
        let d = self.den.eval(c);
        let n = self.num.eval(c);
        if d == 0.0 {
            if n > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            n / d
        }
    }

    fn project(&self, c: CVec) -> CVec {
        match self.field {
            Field::Real => c.map(|z| C64::new(z.re, 0.0)),
            Field::Complex => c,
        }
    }
}

const KERNEL_RTOL: f64 = 1e-10;
const KERNEL_ATOL: f64 = 1e-20;
const TIE_RTOL: f64 = 1e-12;

/// Supremum of `num/den` over nonzero coefficient vectors.
pub fn sup_ratio(problem: &RatioProblem, opts: &RatioOptions) -> RatioOutcome {
    let n = problem.dim;
    if let Some(k) = kernel_witness(problem) {
        return RatioOutcome {
            value: Constant::Infinite,
            witness: k,
            method: Method::Kernel,
            converged: true,
            sweep_value: None,
        };
    }
    if !opts.force_optimizer {
        if n == 1 {
            let e = CVec::from_element(1, C64::new(1.0, 0.0));
            return exact(problem.ratio(&e), e, Method::EigenExact);
        }
        if problem.num.is_quadratic() && problem.den.is_quadratic() {
            if let Some(out) = eigen_path(problem) {
                return out;
            }
        }
        if problem.num.is_max() && problem.den.is_quadratic() {
            if let Some(out) = closed_form_path(problem) {
                return out;
            }
        }
        if problem.den.is_max() && problem.field == Field::Real {
            if let Some(out) = vertex_path(problem, opts.vertex_limit) {
                return out;
            }
        }
    }
    optimize(problem, opts)
}

fn exact(value: f64, witness: CVec, method: Method) -> RatioOutcome {
    RatioOutcome {
        value: Constant::from_f64(value),
        witness: linalg::normalized(&witness),
        method,
        converged: true,
        sweep_value: None,
    }
}

/// A vector in the numerically detected kernel of `den` on which `num` is
/// nonzero.
fn kernel_witness(problem: &RatioProblem) -> Option<CVec> {
    if matches!(problem.den, NormMap::Euclid) {
        return None;
    }
    let h = problem.den.quadratic_form(problem.dim);
    let (vals, vecs) = linalg::hermitian_eigen(&h);
    let vmax = vals.last().copied().unwrap_or(0.0).max(0.0);
    let scale = (0..problem.dim)
        .map(|i| {
            let mut e = CVec::zeros(problem.dim);
            e[i] = C64::new(1.0, 0.0);
            problem.num.eval(&e)
        })
        .fold(0.0, f64::max);
    for (i, &v) in vals.iter().enumerate() {
        if v > KERNEL_ATOL.max(KERNEL_RTOL * vmax) {
            break;
        }
        let mut k = vecs.column(i).into_owned();
        if problem.field == Field::Real {
            let re = k.map(|z| C64::new(z.re, 0.0));
            let im = k.map(|z| C64::new(z.im, 0.0));
            k = if re.norm() >= im.norm() { re } else { im };
        }
        let k = linalg::normalized(&k);
        if problem.num.eval(&k) > 1e-12 * scale {
            return Some(k);
        }
    }
    None
}

fn eigen_path(problem: &RatioProblem) -> Option<RatioOutcome> {
    let hn = problem.num.quadratic_form(problem.dim);
    let hd = problem.den.quadratic_form(problem.dim);
    let (vals, vecs) = linalg::generalized_eigen(&hn, &hd).ok()?;
    let last = vals.len() - 1;
    let mut w = vecs.column(last).into_owned();
    if problem.field == Field::Real {
        w = realify(&w);
    }
    let value = vals[last].max(0.0).sqrt();
    Some(exact(value, w, Method::EigenExact))
}

/// Rotates by a global phase so the largest entry is real, then drops the
/// imaginary parts (exact for eigenvectors of real symmetric pencils).
fn realify(w: &CVec) -> CVec {
    let (_, big) = w
        .iter()
        .enumerate()
        .fold((0, C64::new(0.0, 0.0)), |acc, (i, z)| {
            if z.norm() > acc.1.norm() {
                (i, *z)
            } else {
                acc
            }
        });
    let phase = if big.norm() > 0.0 { big.conj() / big.norm() } else { C64::new(1.0, 0.0) };
    w.map(|z| C64::new((z * phase).re, 0.0))
}

fn closed_form_path(problem: &RatioProblem) -> Option<RatioOutcome> {
    let NormMap::Sampled { matrix, .. } = &problem.num else {
        return None;
    };
    let hd = problem.den.quadratic_form(problem.dim);
    let chol = hd.cholesky()?;
    let mut best = (f64::NEG_INFINITY, 0usize);
    let mut best_c = CVec::zeros(problem.dim);
    for j in 0..matrix.nrows() {
        let a = matrix.row(j).adjoint();
        let c = chol.solve(&a);
        let v = a.dotc(&c).re.max(0.0).sqrt();
        if v > best.0 {
            best = (v, j);
            best_c = c;
        }
    }
    let c = if problem.field == Field::Real { realify(&best_c) } else { best_c };
    Some(exact(problem.ratio(&c).max(best.0), c, Method::ClosedForm))
}

fn vertex_path(problem: &RatioProblem, limit: u128) -> Option<RatioOutcome> {
    let NormMap::Sampled { matrix, .. } = &problem.den else {
        return None;
    };
    let m = matrix.nrows();
    let n = problem.dim;
    if m < n {
        return None;
    }
    let work = binomial(m, n).saturating_mul(1u128 << (n - 1));
    if work > limit {
        return None;
    }
    let d = DMatrix::<f64>::from_fn(m, n, |i, j| matrix[(i, j)].re);
    let subsets: Vec<Vec<usize>> = (0..m).combinations(n).collect();
    let per: Vec<(f64, Option<CVec>)> = subsets
        .par_iter()
        .map(|s| {
            let sub = DMatrix::<f64>::from_fn(n, n, |i, j| d[(s[i], j)]);
            let lu = sub.lu();
            let mut best = (f64::NEG_INFINITY, None);
            for signs in 0..(1usize << (n - 1)) {
                let rhs = DVector::<f64>::from_fn(n, |i, _| {
                    if i > 0 && signs & (1 << (i - 1)) != 0 {
                        -1.0
                    } else {
                        1.0
                    }
                });
                let Some(x) = lu.solve(&rhs) else { continue };
                if !x.iter().all(|v| v.is_finite()) {
                    continue;
                }
                let dx = &d * &x;
                let mx = dx.amax();
                if mx > 1.0 + 1e-9 || mx == 0.0 {
                    continue;
                }
                let c = CVec::from_iterator(n, x.iter().map(|&v| C64::new(v, 0.0)));
                let r = problem.ratio(&c);
                if r > best.0 {
                    best = (r, Some(c));
                }
            }
            best
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, None);
    for (v, c) in per {
        if v > best.0 {
            best = (v, c);
        }
    }
    let c = best.1?;
    Some(exact(best.0, c, Method::VertexExact))
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    r
}

fn random_start(problem: &RatioProblem, seed: u64, task: u64) -> CVec {
    let mut rng = rng_for(seed, task);
    let n = problem.dim;
    let c = CVec::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = match problem.field {
            Field::Real => 0.0,
            Field::Complex => rng.sample(StandardNormal),
        };
        C64::new(re, im)
    });
    linalg::normalized(&c)
}

fn optimize(problem: &RatioProblem, opts: &RatioOptions) -> RatioOutcome {
    let mut starts: Vec<CVec> = opts
        .seeds
        .iter()
        .map(|s| problem.project(s.clone()))
        .filter(|s| s.norm() > 0.0)
        .collect();
    for r in 0..opts.restarts {
        starts.push(random_start(problem, opts.seed, r as u64));
    }
    let runs: Vec<(f64, CVec, bool)> = starts
        .par_iter()
        .map(|s| ascend(problem, s, opts.max_iter))
        .collect();
    let mut pool: Vec<(f64, CVec, bool)> = runs;
    for c in &opts.candidates {
        let c = problem.project(c.clone());
        if c.norm() > 0.0 {
            pool.push((problem.ratio(&c), linalg::normalized(&c), true));
        }
    }
    let mut sweep_value = None;
    if opts.sweep && problem.dim <= 3 {
        let (v, w) = sphere_sweep(problem);
        sweep_value = Some(v);
        let best = pool.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
        if v > best {
            pool.push(ascend(problem, &w, opts.max_iter));
            pool.push((v, w, true));
        }
    }
    let top = pool.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
    let pick = pool
        .into_iter()
        .find(|x| x.0 >= top * (1.0 - TIE_RTOL))
        .expect("at least one start");
    RatioOutcome {
        value: Constant::from_f64(pick.0),
        witness: pick.1,
        method: Method::Optimized,
        converged: pick.2,
        sweep_value,
    }
}

/// Power-mean orders used to approach max norms.
const POWER_STAGES: [f64; 5] = [8.0, 32.0, 128.0, 512.0, 2048.0];

/// Ascends from `start`; returns the true ratio, the unit witness and
/// whether every stage stopped before the iteration cap.
fn ascend(problem: &RatioProblem, start: &CVec, max_iter: usize) -> (f64, CVec, bool) {
    let smooth = problem.num.is_max() || problem.den.is_max();
    let stages: &[f64] = if smooth { &POWER_STAGES } else { &POWER_STAGES[..1] };
    let mut c = linalg::normalized(&problem.project(start.clone()));
    let mut best = (problem.ratio(&c), c.clone());
    let mut converged = true;
    for &power in stages {
        let (next, ok) = ascend_stage(problem, &c, max_iter, power);
        converged &= ok;
        c = next;
        let r = problem.ratio(&c);
        if r > best.0 {
            best = (r, c.clone());
        }
    }
    if problem.num.is_max() {
        if let Some((r, w)) = polish_max_numerator(problem, &best.1) {
            if r > best.0 {
                best = (r, w);
            }
        }
    }
    (best.0, best.1, converged)
}

fn objective(problem: &RatioProblem, c: &CVec, power: f64) -> (f64, CVec) {
    let (nv, ng) = problem.num.log_grad(c, power);
    let (dv, dg) = problem.den.log_grad(c, power);
    if nv == 0.0 || dv == 0.0 {
        return (f64::NEG_INFINITY, CVec::zeros(c.len()));
    }
    let g = problem.project(ng - dg);
    (nv.ln() - dv.ln(), g)
}

fn tangent(c: &CVec, g: &CVec) -> CVec {
    let along = c.dotc(g).re;
    g - c.map(|z| z * along)
}

fn ascend_stage(problem: &RatioProblem, start: &CVec, max_iter: usize, power: f64) -> (CVec, bool) {
    let mut c = start.clone();
    let (mut f, g) = objective(problem, &c, power);
    if !f.is_finite() {
        return (c, true);
    }
    let mut gt = tangent(&c, &g);
    let mut eta = 0.1 / gt.norm().max(1e-300);
    let mut prev: Option<(CVec, CVec)> = None;
    let mut flat = 0;
    for _ in 0..max_iter {
        let gn = gt.norm();
        if gn < 1e-13 {
            return (c, true);
        }
        if let Some((cp, gp)) = &prev {
            let s = &c - cp;
            let y = &gt - gp;
            let sy = s.dotc(&y).re;
            if sy.abs() > 0.0 {
                eta = (s.norm_squared() / sy.abs()).clamp(1e-10, 1e10);
            }
        }
        let mut accepted = None;
        for _ in 0..50 {
            let trial = linalg::normalized(&(&c + gt.map(|z| z * eta)));
            let (ft, gtr) = objective(problem, &trial, power);
            if ft >= f {
                accepted = Some((trial, ft, gtr));
                break;
            }
            eta *= 0.5;
        }
        let Some((cn, fnew, gnew)) = accepted else {
            return (c, true);
        };
        let gain = fnew - f;
        prev = Some((c, gt));
        c = cn;
        f = fnew;
        gt = tangent(&c, &gnew);
        if gain < 1e-15 {
            flat += 1;
            if flat >= 3 {
                return (c, true);
            }
        } else {
            flat = 0;
        }
    }
    (c, false)
}

/// For `num = max_j |a_j c|`: fixes the active row `j` and minimises the
/// denominator exactly on the hyperplane `a_j c = 1`.
fn polish_max_numerator(problem: &RatioProblem, c: &CVec) -> Option<(f64, CVec)> {
    let NormMap::Sampled { matrix, .. } = &problem.num else {
        return None;
    };
    let r = matrix * c;
    let (j, _) = r
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc });
    let a = matrix.row(j).adjoint();
    let an = a.norm_squared();
    if an == 0.0 {
        return None;
    }
    let c0 = a.map(|z| z / an);
    let k = linalg::complement_basis(&a);
    let x = match &problem.den {
        NormMap::Euclid => c0,
        NormMap::Sampled { matrix: dm, weights, p } => {
            if k.ncols() == 0 {
                c0
            } else {
                let rhs = -(dm * &c0);
                let sol = fit::lp_fit(&(dm * &k), &rhs, weights, *p).ok()?;
                c0 + &k * sol.coefficients
            }
        }
    };
    let x = problem.project(x);
    let v = problem.ratio(&x);
    v.is_finite().then(|| (v, linalg::normalized(&x)))
}

/// Brute-force evaluation over a grid on the unit sphere (N ≤ 3).
pub fn sphere_sweep(problem: &RatioProblem) -> (f64, CVec) {
    use std::f64::consts::PI;
    let n = problem.dim;
    let real = problem.field == Field::Real;
    let one = C64::new(1.0, 0.0);
    let mut pts: Vec<CVec> = Vec::new();
    match (n, real) {
        (1, _) => pts.push(CVec::from_element(1, one)),
        (2, true) => {
            for i in 0..4096 {
                let t = PI * i as f64 / 4096.0;
                pts.push(CVec::from_vec(vec![one * t.cos(), one * t.sin()]));
            }
        }
        (2, false) => {
            for i in 0..=200 {
                let a = 0.5 * PI * i as f64 / 200.0;
                for k in 0..400 {
                    let b = 2.0 * PI * k as f64 / 400.0;
                    pts.push(CVec::from_vec(vec![one * a.cos(), C64::from_polar(a.sin(), b)]));
                }
            }
        }
        (3, true) => {
            for i in 0..=200 {
                let t = PI * i as f64 / 200.0;
                for k in 0..400 {
                    let f = PI * k as f64 / 400.0;
                    pts.push(CVec::from_vec(vec![
                        one * (t.sin() * f.cos()),
                        one * (t.sin() * f.sin()),
                        one * t.cos(),
                    ]));
                }
            }
        }
        (3, false) => {
            let (na, nb, np) = (14, 14, 28);
            for i in 0..=na {
                let a = 0.5 * PI * i as f64 / na as f64;
                for j in 0..=nb {
                    let b = 0.5 * PI * j as f64 / nb as f64;
                    for k in 0..np {
                        let g = 2.0 * PI * k as f64 / np as f64;
                        for l in 0..np {
                            let h = 2.0 * PI * l as f64 / np as f64;
                            pts.push(CVec::from_vec(vec![
                                one * a.cos(),
                                C64::from_polar(a.sin() * b.cos(), g),
                                C64::from_polar(a.sin() * b.sin(), h),
                            ]));
                        }
                    }
                }
            }
        }
        _ => return (f64::NAN, CVec::zeros(n)),
    }
    let vals: Vec<f64> = pts.par_iter().map(|c| problem.ratio(c)).collect();
    let mut best = 0;
    for (i, v) in vals.iter().enumerate() {
        if *v > vals[best] {
            best = i;
        }
    }
    (vals[best], pts.swap_remove(best))
}

/// `(Σ w_j |v_j|^p)` helper for callers assembling their own norms.
pub fn pth_power_sum(v: &CVec, weights: &[f64], p: f64) -> f64 {
    v.iter().zip(weights).map(|(z, w)| w * abs_pow(*z, p)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rand_real(m: usize, n: usize, seed: u64) -> CMat {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(m, n, |_, _| C64::new(r.sample::<f64, _>(StandardNormal), 0.0))
    }

    fn opnorm_problem(a: CMat, r: Exponent, p: Exponent) -> RatioProblem {
        let (m, n) = a.shape();
        RatioProblem {
            num: NormMap::sampled(a, vec![1.0; m], p),
            den: NormMap::sampled(CMat::identity(n, n), vec![1.0; n], r),
            field: Field::Real,
            dim: n,
        }
    }

    #[test]
    fn eigen_path_matches_singular_value() {
        let a = rand_real(5, 3, 1);
        let s = a.clone().singular_values().max();
        let pr = opnorm_problem(a, Exponent::TWO, Exponent::TWO);
        let out = sup_ratio(&pr, &RatioOptions::default());
        assert_eq!(out.method, Method::EigenExact);
        assert!((out.value.value() - s).abs() < 1e-10);
    }

    #[test]
    fn optimizer_matches_eigen() {
        for seed in 0..5 {
            let a = rand_real(6, 4, seed);
            let pr = opnorm_problem(a, Exponent::TWO, Exponent::TWO);
            let e = sup_ratio(&pr, &RatioOptions::default()).value.value();
            let o = sup_ratio(
                &pr,
                &RatioOptions {
                    force_optimizer: true,
                    ..RatioOptions::default()
                },
            );
            assert!((o.value.value() - e).abs() <= 1e-8 * e, "{} vs {e}", o.value.value());
        }
    }

    #[test]
    fn vertex_path_is_max_abs_for_one_to_inf() {
        // (∞ → ∞) norm of A is the max row ℓ₁ norm.
        let a = rand_real(4, 3, 9);
        let want = (0..4)
            .map(|i| a.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let pr = opnorm_problem(a, Exponent::INF, Exponent::INF);
        let out = sup_ratio(&pr, &RatioOptions::default());
        assert_eq!(out.method, Method::VertexExact);
        assert!((out.value.value() - want).abs() < 1e-10);
    }

    #[test]
    fn closed_form_inf_over_two() {
        // (2 → ∞) norm of A is the max row ℓ₂ norm.
        let a = rand_real(4, 3, 3);
        let want = (0..4).map(|i| a.row(i).norm()).fold(0.0, f64::max);
        let pr = opnorm_problem(a, Exponent::TWO, Exponent::INF);
        let out = sup_ratio(&pr, &RatioOptions::default());
        assert_eq!(out.method, Method::ClosedForm);
        assert!((out.value.value() - want).abs() < 1e-12);
    }

    #[test]
    fn optimizer_reaches_inf_norms() {
        let a = rand_real(5, 3, 4);
        let pr = opnorm_problem(a, Exponent::INF, Exponent::INF);
        let exact = sup_ratio(&pr, &RatioOptions::default()).value.value();
        let o = sup_ratio(
            &pr,
            &RatioOptions {
                force_optimizer: true,
                ..RatioOptions::default()
            },
        )
        .value
        .value();
        assert!(o <= exact * (1.0 + 1e-9));
        assert!(o >= exact * (1.0 - 1e-3), "{o} vs {exact}");
    }

    #[test]
    fn kernel_gives_infinity() {
        let den = CMat::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(2.0, 0.0), C64::new(0.0, 0.0)]);
        let pr = RatioProblem {
            num: NormMap::Euclid,
            den: NormMap::sampled(den, vec![0.5, 0.5], Exponent::TWO),
            field: Field::Real,
            dim: 2,
        };
        let out = sup_ratio(&pr, &RatioOptions::default());
        assert_eq!(out.value, Constant::Infinite);
        assert!(out.witness[0].norm() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let a = rand_real(5, 3, 2);
        let pr = opnorm_problem(a, Exponent::new(3.0).unwrap(), Exponent::new(1.5).unwrap());
        let o1 = sup_ratio(&pr, &RatioOptions::with_seed(5));
        let o2 = sup_ratio(&pr, &RatioOptions::with_seed(5));
        assert_eq!(o1.value, o2.value);
        assert_eq!(o1.witness, o2.witness);
        // The sweep never beats the reported value by more than its grid error.
        assert!(o1.sweep_value.unwrap() <= o1.value.value() * (1.0 + 1e-12));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(12, 6), 924);
        assert_eq!(binomial(3, 4), 0);
    }
}
