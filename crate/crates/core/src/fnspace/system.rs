use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fnspace::domain::{DomainKind, DomainSpec, Point};
use crate::scalar::{Field, C64};

/// The generator list of a finite-dimensional system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SystemKind {
    /// `e^{i k·x}` for `k` in `Q ⊂ ℤ^d` on the `d`-torus.
    Trig { frequencies: Vec<Vec<i64>> },
    /// `e^{i k x}` on the circle with `k_{i+1} ≥ ratio · k_i`.
    Lacunary { frequencies: Vec<i64>, ratio: f64 },
    /// `cos(kx)` for `k` in `cos`, then `sin(kx)` for `k` in `sin`, on the circle.
    RealTrig {
        #[serde(default)]
        cos: Vec<i64>,
        #[serde(default)]
        sin: Vec<i64>,
    },
    /// The plateau functions `f_a` on `[0, 1]`.
    Hat { a: Vec<f64> },
    /// `1, x, ..., x^degree` on `[0, 1]`.
    Monomials { degree: usize },
    /// Value table on a finite set: `values[i][x]` is generator `i` at `x`.
    DiscreteMatrix {
        values: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        imag: Option<Vec<Vec<f64>>>,
    },
    /// The constant function followed by the generators of `base`.
    WithConstant { base: Box<FunctionSystem> },
    /// The generators of `base` at `indices`, in that order.
    Select {
        base: Box<FunctionSystem>,
        indices: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionSystem {
    #[serde(flatten)]
    pub kind: SystemKind,
    /// Every generator is multiplied by this factor.
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

/// `f_a(x)`: 1 on `[0, a]`, `2 - x/a` on `[a, 2a]`, 0 on `[2a, 1]`.
pub fn fa(a: f64, x: f64) -> f64 {
    if x <= a {
        1.0
    } else if x <= 2.0 * a {
        2.0 - x / a
    } else {
        0.0
    }
}

impl FunctionSystem {
    fn of(kind: SystemKind) -> Result<Self> {
        let s = FunctionSystem { kind, scale: 1.0 };
        s.validate()?;
        Ok(s)
    }

    /// Trigonometric system on the `d`-torus.
    pub fn trig(frequencies: Vec<Vec<i64>>) -> Result<Self> {
        Self::of(SystemKind::Trig { frequencies })
    }

    /// One-dimensional trigonometric system.
    pub fn trig_1d(frequencies: &[i64]) -> Result<Self> {
        Self::trig(frequencies.iter().map(|&k| vec![k]).collect())
    }

    /// `{e^{ikx} : |k| ≤ n}`, so `N = 2n + 1`.
    pub fn trig_degree(n: i64) -> Self {
        Self::trig_1d(&(-n..=n).collect::<Vec<_>>()).expect("distinct frequencies")
    }

    /// Lacunary system; the recorded ratio is the smallest consecutive ratio.
    pub fn lacunary(frequencies: &[i64]) -> Result<Self> {
        if frequencies.is_empty() || frequencies[0] <= 0 {
            return Err(Error::InvalidParameters(
                "lacunary frequencies must be positive".into(),
            ));
        }
        let ratio = frequencies
            .windows(2)
            .map(|w| w[1] as f64 / w[0] as f64)
            .fold(f64::INFINITY, f64::min);
        Self::of(SystemKind::Lacunary {
            frequencies: frequencies.to_vec(),
            ratio,
        })
    }

    /// `{2^0, ..., 2^{n-1}}`.
    pub fn dyadic_lacunary(n: usize) -> Self {
        Self::lacunary(&(0..n).map(|i| 1i64 << i).collect::<Vec<_>>()).expect("dyadic")
    }

    pub fn real_trig(cos: &[i64], sin: &[i64]) -> Result<Self> {
        Self::of(SystemKind::RealTrig {
            cos: cos.to_vec(),
            sin: sin.to_vec(),
        })
    }

    pub fn monomials(degree: usize) -> Self {
        FunctionSystem {
            kind: SystemKind::Monomials { degree },
            scale: 1.0,
        }
    }

    pub fn hat(a: &[f64]) -> Result<Self> {
        Self::of(SystemKind::Hat { a: a.to_vec() })
    }

    /// Real value table, one row per generator.
    pub fn discrete(values: Vec<Vec<f64>>) -> Result<Self> {
        Self::of(SystemKind::DiscreteMatrix { values, imag: None })
    }

    pub fn discrete_complex(values: Vec<Vec<f64>>, imag: Vec<Vec<f64>>) -> Result<Self> {
        Self::of(SystemKind::DiscreteMatrix {
            values,
            imag: Some(imag),
        })
    }

    /// The system with the constant function prepended.
    pub fn with_constant(&self) -> Self {
        FunctionSystem {
            kind: SystemKind::WithConstant {
                base: Box::new(self.clone()),
            },
            scale: 1.0,
        }
    }

    /// The subsystem of generators at `indices` (distinct, in range).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if indices.is_empty() || sorted.len() != indices.len() || sorted.last().is_some_and(|&i| i >= n) {
            return Err(Error::InvalidParameters(format!(
                "subset {indices:?} of a system with {n} generators"
            )));
        }
        let kind = match &self.kind {
            SystemKind::Trig { frequencies } => SystemKind::Trig {
                frequencies: indices.iter().map(|&i| frequencies[i].clone()).collect(),
            },
            SystemKind::Lacunary { frequencies, ratio } => {
                let f: Vec<i64> = sorted.iter().map(|&i| frequencies[i]).collect();
                let r = f
                    .windows(2)
                    .map(|w| w[1] as f64 / w[0] as f64)
                    .fold(f64::INFINITY, f64::min);
                if indices == sorted.as_slice() && (f.len() == 1 || r.is_finite()) {
                    SystemKind::Lacunary {
                        ratio: if f.len() == 1 { *ratio } else { r },
                        frequencies: f,
                    }
                } else {
                    SystemKind::Trig {
                        frequencies: indices.iter().map(|&i| vec![frequencies[i]]).collect(),
                    }
                }
            }
            SystemKind::Hat { a } => SystemKind::Hat {
                a: indices.iter().map(|&i| a[i]).collect(),
            },
            SystemKind::DiscreteMatrix { values, imag } => SystemKind::DiscreteMatrix {
                values: indices.iter().map(|&i| values[i].clone()).collect(),
                imag: imag.as_ref().map(|t| indices.iter().map(|&i| t[i].clone()).collect()),
            },
            SystemKind::RealTrig { cos, sin } if sorted == indices => {
                let c: Vec<usize> = indices.iter().copied().filter(|&i| i < cos.len()).collect();
                let t: Vec<usize> = indices.iter().filter(|&&i| i >= cos.len()).map(|&i| i - cos.len()).collect();
                SystemKind::RealTrig {
                    cos: pick_idx(cos, &c),
                    sin: pick_idx(sin, &t),
                }
            }
            _ => SystemKind::Select {
                base: Box::new(FunctionSystem {
                    kind: self.kind.clone(),
                    scale: 1.0,
                }),
                indices: indices.to_vec(),
            },
        };
        let s = FunctionSystem {
            kind,
            scale: self.scale,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        FunctionSystem {
            kind: self.kind.clone(),
            scale: self.scale * factor,
        }
    }

    /// Number of generators `N`.
    pub fn len(&self) -> usize {
        match &self.kind {
            SystemKind::Trig { frequencies } => frequencies.len(),
            SystemKind::Lacunary { frequencies, .. } => frequencies.len(),
            SystemKind::RealTrig { cos, sin } => cos.len() + sin.len(),
            SystemKind::Hat { a } => a.len(),
            SystemKind::Monomials { degree } => degree + 1,
            SystemKind::DiscreteMatrix { values, .. } => values.len(),
            SystemKind::WithConstant { base } => base.len() + 1,
            SystemKind::Select { indices, .. } => indices.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn field(&self) -> Field {
        match &self.kind {
            SystemKind::Trig { .. } | SystemKind::Lacunary { .. } => Field::Complex,
            SystemKind::Hat { .. } | SystemKind::RealTrig { .. } | SystemKind::Monomials { .. } => {
                Field::Real
            }
            SystemKind::DiscreteMatrix { imag, .. } => match imag {
                Some(im) if im.iter().flatten().any(|v| *v != 0.0) => Field::Complex,
                _ => Field::Real,
            },
            SystemKind::WithConstant { base } | SystemKind::Select { base, .. } => base.field(),
        }
    }

    /// The domain kind this system lives on.
    pub fn domain_kind(&self) -> DomainKind {
        match &self.kind {
            SystemKind::Trig { frequencies } => DomainKind::Torus {
                dim: frequencies.first().map_or(1, Vec::len),
            },
            SystemKind::Lacunary { .. } | SystemKind::RealTrig { .. } => DomainKind::Torus { dim: 1 },
            SystemKind::Hat { .. } | SystemKind::Monomials { .. } => DomainKind::UnitInterval,
            SystemKind::DiscreteMatrix { values, .. } => DomainKind::FiniteSet {
                size: values.first().map_or(0, Vec::len),
            },
            SystemKind::WithConstant { base } | SystemKind::Select { base, .. } => base.domain_kind(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameters(m));
        if !(self.scale.is_finite() && self.scale != 0.0) {
            return bad(format!("scale must be finite and nonzero, got {}", self.scale));
        }
        match &self.kind {
            SystemKind::Trig { frequencies } => {
                if frequencies.is_empty() {
                    return bad("empty frequency set".into());
                }
                let d = frequencies[0].len();
                if d == 0 || frequencies.iter().any(|k| k.len() != d) {
                    return bad("frequencies must share a positive dimension".into());
                }
                let mut sorted = frequencies.clone();
                sorted.sort();
                sorted.dedup();
                if sorted.len() != frequencies.len() {
                    return bad("repeated frequency".into());
                }
            }
            SystemKind::Lacunary { frequencies, ratio } => {
                if frequencies.is_empty() {
                    return bad("empty frequency set".into());
                }
                if frequencies.len() > 1 && !(*ratio > 1.0) {
                    return bad(format!("lacunary ratio must exceed 1, got {ratio}"));
                }
                for w in frequencies.windows(2) {
                    if (w[1] as f64) < ratio * w[0] as f64 * (1.0 - 1e-12) || w[1] <= w[0] {
                        return bad(format!("{} -> {} breaks ratio {ratio}", w[0], w[1]));
                    }
                }
            }
            SystemKind::RealTrig { cos, sin } => {
                if cos.is_empty() && sin.is_empty() {
                    return bad("empty real trigonometric system".into());
                }
                let (mut c, mut s) = (cos.clone(), sin.clone());
                c.sort();
                c.dedup();
                s.sort();
                s.dedup();
                if c.len() != cos.len() || s.len() != sin.len() {
                    return bad("repeated frequency".into());
                }
                if c.iter().any(|&k| k < 0) || s.iter().any(|&k| k <= 0) {
                    return bad("cosine frequencies must be ≥ 0 and sine frequencies > 0".into());
                }
            }
            SystemKind::Monomials { .. } => {}
            SystemKind::Hat { a } => {
                if a.is_empty() {
                    return bad("empty hat family".into());
                }
                if let Some(x) = a.iter().find(|&&x| !(x > 0.0 && x <= 0.5)) {
                    return bad(format!("hat parameter {x} outside (0, 1/2]"));
                }
            }
            SystemKind::DiscreteMatrix { values, imag } => {
                let k = values.first().map_or(0, Vec::len);
                if values.is_empty() || k == 0 || values.iter().any(|r| r.len() != k) {
                    return bad("value table must be a nonempty rectangle".into());
                }
                if values.iter().flatten().any(|v| !v.is_finite()) {
                    return bad("value table has non-finite entries".into());
                }
                if let Some(im) = imag {
                    if im.len() != values.len() || im.iter().any(|r| r.len() != k) {
                        return bad("imaginary table shape differs".into());
                    }
                }
            }
            SystemKind::WithConstant { base } => base.validate()?,
            SystemKind::Select { base, indices } => {
                base.validate()?;
                let mut sorted = indices.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if indices.is_empty() || sorted.len() != indices.len() || sorted.last().is_some_and(|&i| i >= base.len()) {
                    return bad(format!("selection {indices:?} out of {} generators", base.len()));
                }
            }
        }
        Ok(())
    }

    /// Checks that `domain` is the kind this system is defined on.
    pub fn check_domain(&self, domain: &DomainSpec) -> Result<()> {
        let want = self.domain_kind();
        if want != domain.kind {
            return Err(Error::InvalidParameters(format!(
                "system lives on {want:?}, domain is {:?}",
                domain.kind
            )));
        }
        Ok(())
    }

    /// Values of all generators at `x` (no domain check).
    pub fn eval_point(&self, x: &Point) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.len());
        self.push_values(x, &mut out);
        if self.scale != 1.0 {
            for v in &mut out {
                *v *= self.scale;
            }
        }
        out
    }

    fn push_values(&self, x: &Point, out: &mut Vec<C64>) {
        let c = x.coords();
        match &self.kind {
            SystemKind::Trig { frequencies } => {
                for k in frequencies {
                    let phase: f64 = k.iter().zip(c).map(|(&ki, &xi)| ki as f64 * xi).sum();
                    out.push(C64::from_polar(1.0, phase));
                }
            }
            SystemKind::Lacunary { frequencies, .. } => {
                for &k in frequencies {
                    out.push(C64::from_polar(1.0, k as f64 * c[0]));
                }
            }
            SystemKind::RealTrig { cos, sin } => {
                for &k in cos {
                    out.push(C64::new((k as f64 * c[0]).cos(), 0.0));
                }
                for &k in sin {
                    out.push(C64::new((k as f64 * c[0]).sin(), 0.0));
                }
            }
            SystemKind::Monomials { degree } => {
                let mut v = 1.0;
                for _ in 0..=*degree {
                    out.push(C64::new(v, 0.0));
                    v *= c[0];
                }
            }
            SystemKind::Hat { a } => {
                for &ai in a {
                    out.push(C64::new(fa(ai, c[0]), 0.0));
                }
            }
            SystemKind::DiscreteMatrix { values, imag } => {
                let j = x.as_index();
                for (i, row) in values.iter().enumerate() {
                    let im = imag.as_ref().map_or(0.0, |t| t[i][j]);
                    out.push(C64::new(row[j], im));
                }
            }
            SystemKind::WithConstant { base } => {
                out.push(C64::new(1.0, 0.0));
                out.extend(base.eval_point(x));
            }
            SystemKind::Select { base, indices } => {
                let all = base.eval_point(x);
                out.extend(indices.iter().map(|&i| all[i]));
            }
        }
    }

    /// Kinks of the generators inside `(0, 1)`, used to split quadrature cells.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            SystemKind::Hat { a } => a.iter().flat_map(|&x| [x, 2.0 * x]).collect(),
            SystemKind::WithConstant { base } | SystemKind::Select { base, .. } => base.breakpoints(),
            _ => Vec::new(),
        }
    }

    /// True when the system is an orthonormal exponential family with
    /// unit scale on a uniform torus, so its Gram matrix is the identity.
    pub(crate) fn exact_gram_on(&self, domain: &DomainSpec) -> Option<f64> {
        use crate::fnspace::domain::Measure;
        if domain.measure != Measure::Uniform {
            return None;
        }
        match &self.kind {
            SystemKind::Trig { .. } | SystemKind::Lacunary { .. } => Some(self.scale * self.scale),
            _ => None,
        }
    }

    /// Largest absolute frequency (trig kinds), used to size grids.
    pub fn max_frequency(&self) -> Option<i64> {
        match &self.kind {
            SystemKind::Trig { frequencies } => frequencies.iter().flatten().map(|k| k.abs()).max(),
            SystemKind::Lacunary { frequencies, .. } => frequencies.iter().map(|k| k.abs()).max(),
            SystemKind::RealTrig { cos, sin } => cos.iter().chain(sin).map(|k| k.abs()).max(),
            SystemKind::WithConstant { base } | SystemKind::Select { base, .. } => base.max_frequency(),
            _ => None,
        }
    }
}

fn pick_idx(v: &[i64], idx: &[usize]) -> Vec<i64> {
    idx.iter().map(|&i| v[i]).collect()
}

/// The single-function system `{f_a}`.
pub fn make_fa(a: f64) -> Result<FunctionSystem> {
    if !(a > 0.0 && a <= 0.5) {
        return Err(Error::InvalidParameters(format!("a = {a} outside (0, 1/2]")));
    }
    FunctionSystem::hat(&[a])
}

/// `N × #points` value table, with a domain check on every point.
pub fn eval_system(
    system: &FunctionSystem,
    domain: &DomainSpec,
    points: &[Point],
) -> Result<Vec<Vec<C64>>> {
    system.check_domain(domain)?;
    domain.check_points(points)?;
    let cols: Vec<Vec<C64>> = points.iter().map(|x| system.eval_point(x)).collect();
    Ok((0..system.len())
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect())
}

/// Writes a value table as CSV: one row per point, columns `re_i, im_i`.
pub fn value_table_csv<W: std::io::Write>(
    table: &[Vec<C64>],
    points: &[Point],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = table.len();
    let mut header = vec!["point".to_string()];
    for i in 0..n {
        header.push(format!("re_{i}"));
        header.push(format!("im_{i}"));
    }
    w.write_record(&header)?;
    for (j, p) in points.iter().enumerate() {
        let mut rec = vec![p
            .coords()
            .iter()
            .map(|x| format!("{x:?}"))
            .collect::<Vec<_>>()
            .join(" ")];
        for row in table {
            rec.push(format!("{:?}", row[j].re));
            rec.push(format!("{:?}", row[j].im));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn trig_values() {
        let d = DomainSpec::torus(1, 8);
        let s = FunctionSystem::trig_1d(&[0]).unwrap();
        let t = eval_system(&s, &d, &[Point::scalar(1.234)]).unwrap();
        assert_eq!(t[0][0], C64::new(1.0, 0.0));
        let s = FunctionSystem::trig_1d(&[1]).unwrap();
        let t = eval_system(&s, &d, &[Point::scalar(PI)]).unwrap();
        assert!((t[0][0] - C64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn hat_values() {
        let f = make_fa(0.25).unwrap();
        let d = DomainSpec::interval(8);
        let t = eval_system(
            &f,
            &d,
            &[Point::scalar(0.375), Point::scalar(0.25), Point::scalar(0.5)],
        )
        .unwrap();
        assert_eq!(t[0][0].re, 0.5);
        assert_eq!(t[0][1].re, 1.0);
        assert_eq!(t[0][2].re, 0.0);
    }

    #[test]
    fn make_fa_range() {
        assert!(make_fa(0.0).is_err());
        assert!(make_fa(0.51).is_err());
        assert!(make_fa(0.5).is_ok());
    }

    #[test]
    fn out_of_domain_point() {
        let f = make_fa(0.25).unwrap();
        let d = DomainSpec::interval(8);
        let e = eval_system(&f, &d, &[Point::scalar(0.1), Point::scalar(1.5)]).unwrap_err();
        assert!(matches!(e, Error::DomainMismatch { index: 1, .. }));
    }

    #[test]
    fn lacunary_ratio_recorded() {
        let s = FunctionSystem::lacunary(&[1, 3, 7]).unwrap();
        match s.kind {
            SystemKind::Lacunary { ratio, .. } => assert!((ratio - 7.0 / 3.0).abs() < 1e-15),
            _ => unreachable!(),
        }
        assert!(FunctionSystem::lacunary(&[2, 2]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = FunctionSystem::dyadic_lacunary(3);
        let j = serde_json::to_string(&s).unwrap();
        let back: FunctionSystem = serde_json::from_str(&j).unwrap();
        assert_eq!(s, back);
        let h: FunctionSystem = serde_json::from_str(r#"{"kind":"hat","a":[0.25,0.125]}"#).unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!(h.scale, 1.0);
    }

    #[test]
    fn csv_export() {
        let s = FunctionSystem::trig_1d(&[0, 1]).unwrap();
        let d = DomainSpec::torus(1, 4);
        let pts = vec![Point::scalar(0.0), Point::scalar(1.0)];
        let t = eval_system(&s, &d, &pts).unwrap();
        let mut buf = Vec::new();
        value_table_csv(&t, &pts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("point,re_0,im_0,re_1,im_1"));
    }
}
