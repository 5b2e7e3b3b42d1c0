//! Finite-dimensional function spaces over probability spaces.

mod domain;
mod space;
mod system;

pub use domain::{DomainKind, DomainSpec, Measure, Point, Quadrature};
pub use space::{Nikolskii, OrthoBasis, Space, SpaceSpec, Target};
pub use system::{eval_system, fa, make_fa, value_table_csv, FunctionSystem, SystemKind};

#[cfg(test)]
mod tests;
