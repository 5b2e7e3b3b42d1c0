//! Sampling discretization inequalities and sampling recovery for
//! finite-dimensional function spaces.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod discretize;
pub mod error;
pub mod fit;
pub mod fnspace;
pub mod harness;
pub mod linalg;
pub mod lp;
pub mod matrixtools;
pub mod optim;
pub mod recovery;
pub mod rng;
pub mod scalar;
pub mod serial;

pub use error::{Error, Result};
pub use scalar::{Constant, Exponent, Field, C64};
