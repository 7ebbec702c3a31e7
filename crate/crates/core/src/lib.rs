pub mod error;
pub mod hermite_basis;
pub mod quadrature;

pub use error::{Error, Result};
pub mod derivatives_riesz;
pub mod estimate_lab;
pub mod frac_ops;
pub mod functions;
pub mod grid;
pub mod heat_semigroup;
pub mod holder_spaces;
mod subordination;
