//! Numerical laboratory for curvature-integral isoperimetric inequalities on
//! smooth domains, built on symmetric-function calculus, sphere quadrature and
//! optimal transport potentials.
//!
//! The symmetric-function and series modules are generic over [`Real`] (`f32`
//! or `f64`); geometry, transport and the inequality checks run in `f64`.

pub mod error;
pub mod geometry;
pub mod scalar;
pub mod series;
pub mod sum;
pub mod symfun;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type SymMatrix64 = symfun::SymMatrix<f64>;
pub type SymMatrix32 = symfun::SymMatrix<f32>;
pub type Mat64 = symfun::Mat<f64>;
pub type Series64 = series::Series<f64>;
pub type Series32 = series::Series<f32>;
pub type SeriesConfig64 = series::SeriesConfig<f64>;
pub type SeriesConfig32 = series::SeriesConfig<f32>;
