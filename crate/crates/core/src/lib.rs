//! Numerical laboratory for φ-entropies under Ornstein-Uhlenbeck and kinetic
//! Fokker-Planck dynamics with harmonic confinement.
//!
//! The crate is organised bottom-up:
//!
//! * [`phi`], [`grid`], [`field`]: entropy generators, Gaussian quadrature
//!   grids and the functionals E, I and L^p norms.
//! * [`hypo`]: the hypocoercivity matrices, their spectra and the rate
//!   optimisation.
//! * [`fp`]: the one-dimensional OU flow and the improved decay estimate.
//! * [`kfp`]: the phase-space solver, twisted Fisher diagnostics and the
//!   adaptive λ(t) controller.
//! * [`inequality`]: sampled checks of the static functional inequalities.

pub mod error;
pub mod exec;
pub mod field;
pub mod fit;
pub mod format;
pub mod fp;
pub mod grid;
pub mod hypo;
pub mod inequality;
pub mod interp;
pub mod kfp;
pub mod linalg;
pub mod phi;
pub mod profiles;
pub mod quadrature;
pub mod stencil;
pub mod suite;

pub use error::{Error, Result};
pub use exec::Execution;
pub use field::ScalarField;
pub use grid::QuadratureGrid;
pub use phi::PhiFamily;
