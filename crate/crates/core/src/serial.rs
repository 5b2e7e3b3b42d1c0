//! JSON shapes for complex vectors and matrices.

use serde::{Deserialize, Serialize};

use crate::linalg::{CMat, CVec};
use crate::scalar::C64;

/// Coefficients `c_1..c_N` as separate real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefVector {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&CVec> for CoefVector {
    fn from(v: &CVec) -> Self {
        CoefVector {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }
}

impl CoefVector {
    pub fn to_cvec(&self) -> CVec {
        CVec::from_iterator(
            self.re.len(),
            self.re
                .iter()
                .zip(self.im.iter().chain(std::iter::repeat(&0.0)))
                .map(|(&r, &i)| C64::new(r, i)),
        )
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }
}

/// Row-major matrix with separate real and imaginary tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixData {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

impl From<&CMat> for MatrixData {
    fn from(a: &CMat) -> Self {
        let rows = |f: fn(&C64) -> f64| {
            (0..a.nrows())
                .map(|i| a.row(i).iter().map(f).collect())
                .collect()
        };
        MatrixData {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

impl MatrixData {
    pub fn to_cmat(&self) -> CMat {
        let m = self.re.len();
        let n = self.re.first().map_or(0, Vec::len);
        CMat::from_fn(m, n, |i, j| {
            let im = self.im.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0.0);
            C64::new(self.re[i][j], im)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let a = CMat::from_fn(2, 3, |i, j| C64::new(i as f64, j as f64));
        assert_eq!(MatrixData::from(&a).to_cmat(), a);
        let v = CVec::from_vec(vec![C64::new(1.0, -2.0)]);
        assert_eq!(CoefVector::from(&v).to_cvec(), v);
        let real: MatrixData = serde_json::from_str(r#"{"re":[[1,2]]}"#).unwrap();
        assert_eq!(real.to_cmat()[(0, 1)], C64::new(2.0, 0.0));
    }
}
