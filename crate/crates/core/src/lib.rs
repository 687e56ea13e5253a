//! Jost solutions, spectral weights and large-n asymptotics of orthonormal polynomials
//! for Jacobi matrices whose coefficients have bounded variation.

pub mod ansatz;
mod dd;
pub mod error;
pub mod harness;
pub mod jost;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod recurrence;
pub mod spectral;

pub use ansatz::{Side, SpectralPoint, C};
pub use error::{Error, Result};
pub use model::CoefficientModel;
