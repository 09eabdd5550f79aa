//! Numerical laboratory for reaction-diffusion systems with dissipative,
//! monotone, polynomially growing nonlinearities on a box with Dirichlet
//! boundary conditions.
//!
//! The crate simulates the system  du/dt = a Lap u - f(u) + g  (and its
//! fractional and Cahn-Hilliard variants) on a sine-spectral truncation,
//! solves the associated monotone elliptic problems, measures every energy
//! functional the a priori estimates use, evaluates the closed-form
//! exponent formulas, and runs empirical attractor studies.

pub mod attractor;
pub mod diagnostics;
pub mod dst;
pub mod elliptic;
pub mod ensemble;
pub mod error;
pub mod evolution;
pub mod exponents;
pub mod field;
pub mod fitting;
pub mod grid;
pub mod nonlin;
pub mod norms;
pub mod solver;
pub mod quad;
pub mod rng;

pub use error::{Error, Result};
pub use field::{PhysicalField, SpectralField, DEALIAS_FACTOR};
pub use grid::Grid;
pub use nonlin::{approximate, verify_constants, ApproxSpec, Builtin, NonlinearSpec};
pub use norms::{norms, NormReport};
