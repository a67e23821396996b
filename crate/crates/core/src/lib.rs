//! Radial ground states of stationary (fractional) NLS-type equations.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod mass_min;
pub mod operator;
pub mod problem;
pub mod solve;
pub mod spectrum;

pub use error::{Error, Result};
pub use grid::{DomainKind, RadialGrid};
pub use operator::{build_fractional_laplacian_1d, build_radial_laplacian, DiscreteOperator};
