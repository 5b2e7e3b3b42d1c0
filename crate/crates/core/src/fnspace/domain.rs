use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of a domain: torus/interval coordinates, or `[index]` for a
/// finite set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn scalar(x: f64) -> Self {
        Point(vec![x])
    }

    pub fn index(i: usize) -> Self {
        Point(vec![i as f64])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Index of a finite-set point (assumes it was validated).
    pub fn as_index(&self) -> usize {
        self.0[0] as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainKind {
    /// `[0, 2π)^dim`.
    Torus { dim: usize },
    /// `[0, 1]`.
    UnitInterval,
    /// `{0, 1, ..., size-1}`.
    FiniteSet { size: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Measure {
    /// Normalised Lebesgue / counting measure.
    #[default]
    Uniform,
    Atomic { points: Vec<Point>, masses: Vec<f64> },
}

/// Probability space `(Ω, μ)` together with the grid resolution used for
/// quadrature and sup norms on continuous domains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub kind: DomainKind,
    #[serde(default)]
    pub measure: Measure,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
}

fn default_grid() -> usize {
    256
}

const MASS_TOL: f64 = 1e-12;

impl DomainSpec {
    pub fn torus(dim: usize, grid_size: usize) -> Self {
        DomainSpec {
            kind: DomainKind::Torus { dim },
            measure: Measure::Uniform,
            grid_size,
        }
    }

    pub fn interval(grid_size: usize) -> Self {
        DomainSpec {
            kind: DomainKind::UnitInterval,
            measure: Measure::Uniform,
            grid_size,
        }
    }

    pub fn finite_set(size: usize) -> Self {
        DomainSpec {
            kind: DomainKind::FiniteSet { size },
            measure: Measure::Uniform,
            grid_size: size.max(2),
        }
    }

    /// Same kind and grid, with an atomic measure.
    pub fn with_atomic(&self, points: Vec<Point>, masses: Vec<f64>) -> Result<Self> {
        let d = DomainSpec {
            kind: self.kind.clone(),
            measure: Measure::Atomic { points, masses },
            grid_size: self.grid_size,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self.kind, DomainKind::FiniteSet { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            DomainKind::Torus { dim: 0 } => {
                return Err(Error::InvalidParameters("torus dimension must be positive".into()))
            }
            DomainKind::FiniteSet { size: 0 } => {
                return Err(Error::InvalidParameters("finite set must be nonempty".into()))
            }
            _ => {}
        }
        if self.is_continuous() && self.grid_size < 2 {
            return Err(Error::InvalidParameters(format!(
                "grid_size must be at least 2 on a continuous domain, got {}",
                self.grid_size
            )));
        }
        if let Measure::Atomic { points, masses } = &self.measure {
            if points.len() != masses.len() || points.is_empty() {
                return Err(Error::InvalidParameters(
                    "atomic measure needs one mass per point".into(),
                ));
            }
            if masses.iter().any(|&m| !(m >= 0.0)) {
                return Err(Error::InvalidParameters("masses must be nonnegative".into()));
            }
            let total: f64 = masses.iter().sum();
            if (total - 1.0).abs() > MASS_TOL {
                return Err(Error::InvalidParameters(format!(
                    "atomic masses sum to {total}, not 1"
                )));
            }
            for (i, p) in points.iter().enumerate() {
                self.check_point(i, p)?;
            }
        }
        Ok(())
    }

    pub fn check_point(&self, index: usize, p: &Point) -> Result<()> {
        let bad = |reason: String| Err(Error::DomainMismatch { index, reason });
        if p.0.iter().any(|x| !x.is_finite()) {
            return bad("non-finite coordinate".into());
        }
        match self.kind {
            DomainKind::Torus { dim } => {
                if p.0.len() != dim {
                    return bad(format!("expected {dim} coordinates, got {}", p.0.len()));
                }
            }
            DomainKind::UnitInterval => {
                if p.0.len() != 1 || p.0[0] < 0.0 || p.0[0] > 1.0 {
                    return bad(format!("{:?} is not in [0, 1]", p.0));
                }
            }
            DomainKind::FiniteSet { size } => {
                if p.0.len() != 1 || p.0[0].fract() != 0.0 || p.0[0] < 0.0 || p.0[0] >= size as f64 {
                    return bad(format!("{:?} is not an index below {size}", p.0));
                }
            }
        }
        Ok(())
    }

    pub fn check_points(&self, pts: &[Point]) -> Result<()> {
        pts.iter().enumerate().try_for_each(|(i, p)| self.check_point(i, p))
    }

    /// Cell width of the evaluation grid (continuous kinds).
    pub fn cell_width(&self) -> f64 {
        match self.kind {
            DomainKind::Torus { .. } => 2.0 * PI / self.grid_size as f64,
            DomainKind::UnitInterval => 1.0 / self.grid_size as f64,
            DomainKind::FiniteSet { .. } => 1.0,
        }
    }

    /// Draws one point from `μ`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match &self.measure {
            Measure::Atomic { points, masses } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (p, &m) in points.iter().zip(masses) {
                    acc += m;
                    if u < acc {
                        return p.clone();
                    }
                }
                let last = masses.iter().rposition(|&m| m > 0.0).unwrap_or(points.len() - 1);
                points[last].clone()
            }
            Measure::Uniform => match self.kind {
                DomainKind::Torus { dim } => {
                    Point((0..dim).map(|_| rng.random::<f64>() * 2.0 * PI).collect())
                }
                DomainKind::UnitInterval => Point::scalar(rng.random::<f64>()),
                DomainKind::FiniteSet { size } => Point::index(rng.random_range(0..size)),
            },
        }
    }

    /// Quadrature rule for integrals against `μ`. `breakpoints` are interior
    /// kinks of the integrands on the unit interval; cells are split there
    /// so piecewise polynomials integrate exactly.
    pub fn quadrature(&self, breakpoints: &[f64]) -> Quadrature {
        match &self.measure {
            Measure::Atomic { points, masses } => Quadrature {
                points: points.clone(),
                weights: masses.clone(),
            },
            Measure::Uniform => match self.kind {
                DomainKind::Torus { dim } => {
                    let pts = torus_grid(dim, self.grid_size);
                    let w = 1.0 / pts.len() as f64;
                    let n = pts.len();
                    Quadrature {
                        points: pts,
                        weights: vec![w; n],
                    }
                }
                DomainKind::UnitInterval => gauss_legendre_partition(self.grid_size, breakpoints),
                DomainKind::FiniteSet { size } => Quadrature {
                    points: (0..size).map(Point::index).collect(),
                    weights: vec![1.0 / size as f64; size],
                },
            },
        }
    }

    /// Points over which sup norms are taken (before local refinement).
    pub fn sup_grid(&self, breakpoints: &[f64]) -> Vec<Point> {
        let mut pts = match self.kind {
            DomainKind::Torus { dim } => torus_grid(dim, self.grid_size),
            DomainKind::UnitInterval => {
                let mut xs: Vec<f64> = (0..=self.grid_size)
                    .map(|i| i as f64 / self.grid_size as f64)
                    .collect();
                xs.extend(breakpoints.iter().copied().filter(|b| *b > 0.0 && *b < 1.0));
                xs.sort_by(f64::total_cmp);
                xs.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
                xs.into_iter().map(Point::scalar).collect()
            }
            DomainKind::FiniteSet { size } => (0..size).map(Point::index).collect(),
        };
        if let (Measure::Atomic { points, .. }, true) = (&self.measure, self.is_continuous()) {
            for p in points {
                if !pts.contains(p) {
                    pts.push(p.clone());
                }
            }
        }
        pts
    }

    /// `m` equispaced points (torus: along the diagonal grid in 1-d, a
    /// tensor grid of side `m` in higher dimension; interval: cell midpoints).
    pub fn equispaced(&self, m: usize) -> Vec<Point> {
        match self.kind {
            DomainKind::Torus { dim } => {
                if dim == 1 {
                    (0..m)
                        .map(|j| Point::scalar(2.0 * PI * j as f64 / m as f64))
                        .collect()
                } else {
                    torus_grid(dim, m)
                }
            }
            DomainKind::UnitInterval => (0..m)
                .map(|j| Point::scalar((j as f64 + 0.5) / m as f64))
                .collect(),
            DomainKind::FiniteSet { size } => (0..m).map(|j| Point::index(j * size / m.max(1))).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Quadrature {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

fn torus_grid(dim: usize, n: usize) -> Vec<Point> {
    let total = n.pow(dim as u32);
    (0..total)
        .map(|mut k| {
            let mut c = Vec::with_capacity(dim);
            for _ in 0..dim {
                c.push(2.0 * PI * (k % n) as f64 / n as f64);
                k /= n;
            }
            Point(c)
        })
        .collect()
}

const GL_NODES: [f64; 3] = [
    0.238_619_186_083_196_9,
    0.661_209_386_466_264_5,
    0.932_469_514_203_152,
];
const GL_WEIGHTS: [f64; 3] = [
    0.467_913_934_572_691,
    0.360_761_573_048_138_6,
    0.171_324_492_379_170_3,
];

/// Six-point Gauss–Legendre on each cell of the uniform partition refined
/// at (and graded towards) the breakpoints; exact for polynomials of
/// degree 11 per cell.
fn gauss_legendre_partition(cells: usize, breakpoints: &[f64]) -> Quadrature {
    let mut edges: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
    // Geometric grading towards each kink, where |f|^p may be singular.
    let h = 1.0 / cells as f64;
    for &b in breakpoints.iter().filter(|b| (0.0..=1.0).contains(*b)) {
        edges.push(b);
        for k in 1..=12 {
            let d = h * 0.5f64.powi(k);
            edges.extend([b - d, b + d].into_iter().filter(|x| *x > 0.0 && *x < 1.0));
        }
    }
    edges.retain(|x| (0.0..=1.0).contains(x));
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let mut points = Vec::with_capacity(6 * edges.len());
    let mut weights = Vec::with_capacity(6 * edges.len());
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
            for s in [-1.0, 1.0] {
                points.push(Point::scalar(mid + s * half * x));
                weights.push(half * wt);
            }
        }
    }
    Quadrature { points, weights }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn quadrature_weights_are_probability() {
        for d in [
            DomainSpec::torus(1, 16),
            DomainSpec::torus(2, 8),
            DomainSpec::interval(10),
            DomainSpec::finite_set(7),
        ] {
            let q = d.quadrature(&[0.3]);
            let s: f64 = q.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-13, "{d:?}");
        }
    }

    #[test]
    fn interval_quadrature_exact_for_polynomials() {
        let q = DomainSpec::interval(3).quadrature(&[0.125]);
        let v: f64 = q
            .points
            .iter()
            .zip(&q.weights)
            .map(|(p, w)| w * p.0[0].powi(9))
            .sum();
        assert!((v - 0.1).abs() < 1e-14);
    }

    #[test]
    fn atomic_masses_must_sum_to_one() {
        let d = DomainSpec::finite_set(3);
        let pts = vec![Point::index(0), Point::index(2)];
        assert!(d.with_atomic(pts.clone(), vec![0.5, 0.5]).is_ok());
        assert!(d.with_atomic(pts.clone(), vec![0.5, 0.4]).is_err());
        assert!(d.with_atomic(pts, vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn continuous_grid_needs_two_cells() {
        assert!(DomainSpec::interval(1).validate().is_err());
        assert!(DomainSpec::interval(2).validate().is_ok());
    }

    #[test]
    fn point_checks() {
        let d = DomainSpec::interval(4);
        assert!(d.check_point(0, &Point::scalar(1.5)).is_err());
        let f = DomainSpec::finite_set(3);
        assert!(f.check_point(0, &Point::index(3)).is_err());
        assert!(f.check_point(0, &Point::scalar(0.5)).is_err());
        let t = DomainSpec::torus(2, 4);
        assert!(t.check_point(0, &Point::scalar(0.5)).is_err());
    }

    #[test]
    fn sampling_respects_atoms() {
        let d = DomainSpec::finite_set(4)
            .with_atomic(vec![Point::index(1), Point::index(3)], vec![0.0, 1.0])
            .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            assert_eq!(d.sample(&mut rng), Point::index(3));
        }
    }
}
