//! Scalars, exponents and possibly infinite constants.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;

/// Scalar field of a function system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

/// A norm exponent `p` in `[1, ∞]`.
///
/// Serializes as a JSON number, or as the string `"inf"` for `p = ∞`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub const ONE: Exponent = Exponent(1.0);
    pub const TWO: Exponent = Exponent(2.0);
    pub const INF: Exponent = Exponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidParameters(format!(
                "exponent must lie in [1, inf], got {p}"
            )));
        }
        Ok(Exponent(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_inf(self) -> bool {
        self.0.is_infinite()
    }

    pub fn is_two(self) -> bool {
        self.0 == 2.0
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_inf() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl TryFrom<f64> for Exponent {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        Exponent::new(p)
    }
}

fn serialize_extended<S: Serializer>(v: f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(v)
    }
}

struct ExtendedVisitor;

impl<'de> Visitor<'de> for ExtendedVisitor {
    type Value = f64;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "a number or the string \"inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<f64, E> {
        Ok(v)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<f64, E> {
        match v {
            "inf" | "infinity" | "Infinity" => Ok(f64::INFINITY),
            _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_extended(self.0, s)
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = d.deserialize_any(ExtendedVisitor)?;
        Exponent::new(v).map_err(de::Error::custom)
    }
}

/// A nonnegative constant that may be `+∞` (e.g. an LDI constant when the
/// sampling operator has a kernel).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Constant {
    Finite(f64),
    Infinite,
}

impl Constant {
    pub fn from_f64(v: f64) -> Self {
        if v.is_infinite() {
            Constant::Infinite
        } else {
            Constant::Finite(v)
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Constant::Finite(v) => v,
            Constant::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Constant::Finite(v) => Some(v),
            Constant::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Constant::Finite(_))
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Finite(v) => write!(f, "{v}"),
            Constant::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Constant {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_extended(self.value(), s)
    }
}

impl<'de> Deserialize<'de> for Constant {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Constant::from_f64(d.deserialize_any(ExtendedVisitor)?))
    }
}

/// `|z|^p`, with the `p = 2` case kept exact.
#[inline]
pub(crate) fn abs_pow(z: C64, p: f64) -> f64 {
    if p == 2.0 {
        z.norm_sqr()
    } else if p.fract() == 0.0 && p <= 64.0 && (p as i32) % 2 == 0 {
        z.norm_sqr().powi(p as i32 / 2)
    } else {
        real_pow(z.norm(), p)
    }
}

/// `x^p` for `x ≥ 0`, with `powi` for small integer exponents.
pub(crate) fn real_pow(x: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() <= 64.0 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    }
}
