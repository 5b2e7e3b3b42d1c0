use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit;
use crate::fnspace::domain::{DomainKind, DomainSpec, Point, Quadrature};
use crate::fnspace::system::FunctionSystem;
use crate::linalg::{self, CMat, CVec, DEGENERACY_RTOL};
use crate::optim::{self, Method, NormMap, RatioOptions, RatioProblem};
use crate::scalar::{abs_pow, Exponent, Field, C64};

/// Change of basis to an `L₂(μ)`-orthonormal system `u = T φ`.
#[derive(Clone, Debug)]
pub struct OrthoBasis {
    /// `T`.
    pub transform: CMat,
    /// `Tᵀ`: maps coordinates in `u` to coefficients in `φ`.
    pub to_raw: CMat,
    /// Inverse of `to_raw`.
    pub from_raw: CMat,
}

/// An evaluable function `Ω → ℂ`.
#[derive(Clone)]
pub struct Target {
    pub label: String,
    f: Arc<dyn Fn(&Point) -> C64 + Send + Sync>,
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Target({})", self.label)
    }
}

impl Target {
    pub fn new(label: impl Into<String>, f: impl Fn(&Point) -> C64 + Send + Sync + 'static) -> Self {
        Target {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn real(label: impl Into<String>, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(label, move |x| C64::new(f(x), 0.0))
    }

    /// `Σ c_i φ_i` for raw coefficients `c`.
    pub fn element(system: &FunctionSystem, coef: &CVec) -> Self {
        let s = system.clone();
        let c = coef.clone();
        Target::new("element", move |x| {
            s.eval_point(x).iter().zip(c.iter()).map(|(v, k)| v * k).sum()
        })
    }

    pub fn value(&self, x: &Point) -> C64 {
        (self.f)(x)
    }

    /// `α·self + β·other`.
    pub fn combine(&self, alpha: C64, other: &Target, beta: C64) -> Target {
        let (a, b) = (self.clone(), other.clone());
        Target::new(format!("{}+{}", self.label, other.label), move |x| {
            alpha * a.value(x) + beta * b.value(x)
        })
    }

    pub fn scaled(&self, alpha: C64) -> Target {
        let a = self.clone();
        Target::new(self.label.clone(), move |x| alpha * a.value(x))
    }
}

/// JSON description of a space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub system: FunctionSystem,
    pub domain: DomainSpec,
}

/// A finite-dimensional subspace `X_N = span φ` of `L_p(Ω, μ)` with its
/// quadrature, sup grid, Gram matrix and orthonormal basis precomputed.
#[derive(Clone, Debug)]
pub struct Space {
    system: FunctionSystem,
    domain: DomainSpec,
    quad: Quadrature,
    quad_values: CMat,
    sup_points: Vec<Point>,
    sup_values: CMat,
    gram: CMat,
    exact_gram: bool,
    basis: OrthoBasis,
}

fn value_rows(system: &FunctionSystem, pts: &[Point]) -> CMat {
    let rows: Vec<Vec<C64>> = pts.par_iter().map(|x| system.eval_point(x)).collect();
    CMat::from_fn(pts.len(), system.len(), |i, j| rows[i][j])
}

/// Smallest and largest eigenvalue of a Hermitian matrix.
fn extreme_eigen(g: &CMat) -> (f64, f64) {
    let (vals, _) = linalg::hermitian_eigen(g);
    (vals[0], *vals.last().expect("nonempty"))
}

impl Space {
    pub fn new(system: FunctionSystem, domain: DomainSpec) -> Result<Self> {
        system.validate()?;
        domain.validate()?;
        system.check_domain(&domain)?;
        let bp = system.breakpoints();
        let quad = domain.quadrature(&bp);
        let quad_values = value_rows(&system, &quad.points);
        let sup_points = domain.sup_grid(&bp);
        let sup_values = value_rows(&system, &sup_points);
        let n = system.len();
        let (gram, exact_gram) = match system.exact_gram_on(&domain) {
            Some(s2) => (CMat::identity(n, n) * C64::new(s2, 0.0), true),
            None => {
                let mut weighted = quad_values.clone();
                for (j, w) in quad.weights.iter().enumerate() {
                    weighted.row_mut(j).scale_mut(*w);
                }
                (linalg::hermitize(&(quad_values.adjoint() * weighted)), false)
            }
        };
        let (smallest, largest) = extreme_eigen(&gram);
        if !(smallest >= DEGENERACY_RTOL * largest) || largest <= 0.0 {
            return Err(Error::DegenerateSystem { smallest, largest });
        }
        let l = linalg::cholesky(&gram).ok_or(Error::DegenerateSystem { smallest, largest })?;
        let linv = linalg::lower_inverse(&l);
        let to_raw = linv.adjoint();
        let basis = OrthoBasis {
            transform: to_raw.transpose(),
            to_raw,
            from_raw: l.adjoint(),
        };
        Ok(Space {
            system,
            domain,
            quad,
            quad_values,
            sup_points,
            sup_values,
            gram,
            exact_gram,
            basis,
        })
    }

    pub fn from_spec(spec: &SpaceSpec) -> Result<Self> {
        Self::new(spec.system.clone(), spec.domain.clone())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(&serde_json::from_str(text)?)
    }

    pub fn spec(&self) -> SpaceSpec {
        SpaceSpec {
            system: self.system.clone(),
            domain: self.domain.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.system.len()
    }

    pub fn field(&self) -> Field {
        self.system.field()
    }

    pub fn system(&self) -> &FunctionSystem {
        &self.system
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    /// `G_ij = ⟨φ_j, φ_i⟩ = ∫ conj(φ_i) φ_j dμ`.
    pub fn gram(&self) -> &CMat {
        &self.gram
    }

    /// True when the Gram matrix came from a closed form.
    pub fn gram_is_exact(&self) -> bool {
        self.exact_gram
    }

    pub fn basis(&self) -> &OrthoBasis {
        &self.basis
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quad
    }

    pub fn sup_points(&self) -> &[Point] {
        &self.sup_points
    }

    /// Raw values, one row per point.
    pub fn raw_rows(&self, points: &[Point]) -> Result<CMat> {
        self.domain.check_points(points)?;
        Ok(value_rows(&self.system, points))
    }

    /// Orthonormal-basis values, one row per point.
    pub fn ortho_rows(&self, points: &[Point]) -> Result<CMat> {
        Ok(self.raw_rows(points)? * &self.basis.to_raw)
    }

    pub fn to_raw(&self, c: &CVec) -> CVec {
        &self.basis.to_raw * c
    }

    pub fn from_raw(&self, c: &CVec) -> CVec {
        &self.basis.from_raw * c
    }

    /// Sampled `‖·‖_p` (in orthonormal coordinates) on the quadrature or sup grid.
    pub fn norm_map(&self, p: Exponent) -> NormMap {
        if p.is_two() {
            NormMap::Euclid
        } else if p.is_inf() {
            NormMap::sampled(
                &self.sup_values * &self.basis.to_raw,
                vec![1.0; self.sup_points.len()],
                p,
            )
        } else {
            NormMap::sampled(&self.quad_values * &self.basis.to_raw, self.quad.weights.clone(), p)
        }
    }

    /// `‖Σ c_i φ_i‖_p` for raw coefficients.
    pub fn lp_norm(&self, coef: &CVec, p: Exponent) -> f64 {
        if p.is_two() {
            return coef.dotc(&(&self.gram * coef)).re.max(0.0).sqrt();
        }
        let grid = if p.is_inf() { &self.sup_values } else { &self.quad_values };
        let vals = grid * coef;
        if p.is_inf() {
            let s = self.system.clone();
            let c = coef.clone();
            let g: Vec<f64> = vals.iter().map(|z| z.norm()).collect();
            return self
                .refined_max(&g, &|x| {
                    s.eval_point(x).iter().zip(c.iter()).map(|(v, k)| v * k).sum::<C64>().norm()
                })
                .0;
        }
        fit::weighted_norm(&vals, &self.quad.weights, p)
    }

    /// `‖u‖_p` for coordinates in the orthonormal basis.
    pub fn lp_norm_ortho(&self, c: &CVec, p: Exponent) -> f64 {
        if p.is_two() {
            return c.norm();
        }
        self.lp_norm(&self.to_raw(c), p)
    }

    /// `‖f‖_p` of an arbitrary function (quadrature, or refined sup).
    pub fn lp_norm_fn(&self, f: &Target, p: Exponent) -> f64 {
        if p.is_inf() {
            let g: Vec<f64> = self.sup_points.par_iter().map(|x| f.value(x).norm()).collect();
            return self.refined_max(&g, &|x| f.value(x).norm()).0;
        }
        let pv = p.value();
        let s: f64 = self
            .quad
            .points
            .par_iter()
            .zip(&self.quad.weights)
            .map(|(x, w)| w * abs_pow(f.value(x), pv))
            .sum();
        s.powf(1.0 / pv)
    }

    /// Maximum of a nonnegative function over the domain: the grid maximum,
    /// improved by golden-section search around the best grid points on
    /// continuous domains.
    pub fn refined_max(&self, grid: &[f64], f: &(dyn Fn(&Point) -> f64 + Sync)) -> (f64, Point) {
        let mut order: Vec<usize> = (0..grid.len()).collect();
        order.sort_by(|&a, &b| grid[b].total_cmp(&grid[a]).then(a.cmp(&b)));
        let first = order[0];
        let mut best = (grid[first], self.sup_points[first].clone());
        if !self.domain.is_continuous() {
            return best;
        }
        let h = self.domain.cell_width();
        let (lo, hi, wrap) = match self.domain.kind {
            DomainKind::UnitInterval => (0.0, 1.0, false),
            _ => (f64::NEG_INFINITY, f64::INFINITY, true),
        };
        let refined: Vec<(f64, Point)> = order
            .iter()
            .take(8)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&&i| {
                let mut x = self.sup_points[i].clone();
                let mut fx = f(&x);
                let sweeps = if x.0.len() == 1 { 1 } else { 3 };
                for _ in 0..sweeps {
                    for d in 0..x.0.len() {
                        let c = x.0[d];
                        let (a, b) = ((c - h).max(lo), (c + h).min(hi));
                        let (t, ft) = golden_max(a, b, |t| {
                            let mut y = x.clone();
                            y.0[d] = if wrap { t.rem_euclid(2.0 * PI) } else { t };
                            f(&y)
                        });
                        if ft > fx {
                            fx = ft;
                            x.0[d] = if wrap { t.rem_euclid(2.0 * PI) } else { t };
                        }
                    }
                }
                (fx, x)
            })
            .collect();
        for (v, x) in refined {
            if v > best.0 {
                best = (v, x);
            }
        }
        best
    }

    /// `Σ |u_i(x)|²`.
    pub fn christoffel(&self, x: &Point) -> Result<f64> {
        self.domain.check_point(0, x)?;
        Ok(self.christoffel_unchecked(x))
    }

    fn christoffel_unchecked(&self, x: &Point) -> f64 {
        let phi = CVec::from_vec(self.system.eval_point(x));
        (self.basis.to_raw.transpose() * phi).norm_squared()
    }

    /// Maximum Christoffel value over the domain and where it is attained.
    pub fn max_christoffel(&self) -> (f64, Point) {
        let u = &self.sup_values * &self.basis.to_raw;
        let g: Vec<f64> = (0..u.nrows()).map(|i| u.row(i).norm_squared()).collect();
        self.refined_max(&g, &|x| self.christoffel_unchecked(x))
    }

    /// Orthonormal coordinates of the unit-`L₂` element maximising `|f(x)|`.
    pub fn christoffel_extremal(&self, x: &Point) -> CVec {
        let phi = CVec::from_vec(self.system.eval_point(x));
        let u = self.basis.to_raw.transpose() * phi;
        linalg::normalized(&u.map(|z| z.conj()))
    }

    /// Best approximation of `f` from the space in `L_p`; returns raw
    /// coefficients and `‖f − u‖_p`.
    pub fn best_approx(&self, f: &Target, p: Exponent) -> Result<(CVec, f64)> {
        let coef = if p.is_two() {
            let b = CVec::from_vec(self.quad.points.par_iter().map(|x| f.value(x)).collect());
            let wb = CVec::from_iterator(
                b.len(),
                b.iter().zip(&self.quad.weights).map(|(z, w)| z * *w),
            );
            let rhs = self.quad_values.adjoint() * wb;
            let c = &self.basis.to_raw * (self.basis.to_raw.adjoint() * rhs);
            if self.field() == Field::Real && linalg::is_real_vector(&b) {
                c.map(|z| C64::new(z.re, 0.0))
            } else {
                c
            }
        } else if p.is_inf() {
            let b = CVec::from_vec(self.sup_points.par_iter().map(|x| f.value(x)).collect());
            fit::lp_fit(&self.sup_values, &b, &vec![1.0; b.len()], p)?.coefficients
        } else {
            let b = CVec::from_vec(self.quad.points.par_iter().map(|x| f.value(x)).collect());
            fit::lp_fit(&self.quad_values, &b, &self.quad.weights, p)?.coefficients
        };
        let residual = f.combine(C64::new(1.0, 0.0), &Target::element(&self.system, &coef), C64::new(-1.0, 0.0));
        let d = self.lp_norm_fn(&residual, p);
        Ok((coef, d))
    }

    /// Ratio `‖u‖_num / ‖u‖_den` with refined sup norms.
    pub fn ortho_ratio(&self, c: &CVec, num: Exponent, den: Exponent) -> f64 {
        let d = self.lp_norm_ortho(c, den);
        let n = self.lp_norm_ortho(c, num);
        if d == 0.0 {
            if n == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            n / d
        }
    }

    /// Christoffel extremals at the `k` grid points with the largest values.
    pub fn top_extremals(&self, k: usize) -> Vec<CVec> {
        let u = &self.sup_values * &self.basis.to_raw;
        let mut idx: Vec<usize> = (0..u.nrows()).collect();
        let g: Vec<f64> = (0..u.nrows()).map(|i| u.row(i).norm_squared()).collect();
        idx.sort_by(|&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b)));
        idx.into_iter()
            .take(k)
            .map(|i| self.christoffel_extremal(&self.sup_points[i]))
            .collect()
    }

    /// `M = sup ‖f‖_q / ‖f‖_p`.
    pub fn nikolskii(&self, p: Exponent, q: Exponent, opts: &RatioOptions) -> Result<Nikolskii> {
        if p.value() > q.value() {
            return Err(Error::InvalidParameters(format!(
                "Nikol'skii needs p ≤ q, got p = {p}, q = {q}"
            )));
        }
        let n = self.dim();
        if p == q {
            let mut e = CVec::zeros(n);
            e[0] = C64::new(1.0, 0.0);
            return Ok(Nikolskii {
                value: 1.0,
                witness: e,
                method: Method::EigenExact,
            });
        }
        if p.is_two() && q.is_inf() {
            let (k, x) = self.max_christoffel();
            return Ok(Nikolskii {
                value: k.sqrt(),
                witness: self.christoffel_extremal(&x),
                method: Method::ClosedForm,
            });
        }
        let mut o = opts.clone();
        o.seeds.extend(self.top_extremals(4));
        let problem = RatioProblem {
            num: self.norm_map(q),
            den: self.norm_map(p),
            field: self.field(),
            dim: n,
        };
        let out = optim::sup_ratio(&problem, &o);
        let mut best = (self.ortho_ratio(&out.witness, q, p), out.witness.clone());
        for c in o.candidates.iter() {
            let r = self.ortho_ratio(c, q, p);
            if r > best.0 {
                best = (r, linalg::normalized(c));
            }
        }
        Ok(Nikolskii {
            value: best.0.max(out.value.value()),
            witness: best.1,
            method: out.method,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Nikolskii {
    pub value: f64,
    /// Orthonormal coordinates of the extremal element.
    pub witness: CVec,
    pub method: Method,
}

fn golden_max(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if b - a < 1e-14 {
            break;
        }
    }
    let (fa, fb) = (f(a), f(b));
    [(c, fc), (d, fd), (a, fa), (b, fb)]
        .into_iter()
        .fold((c, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
}
