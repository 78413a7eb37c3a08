//! Numerical laboratory for planar Beltrami operators and non-symmetric
//! divergence-form elliptic equations.
//!
//! The crate is organised bottom-up:
//!
//! * [`coeff_algebra`] converts between Beltrami pairs `(μ, ν)` and real
//!   conductivity matrices `σ`, and evaluates the sharp ellipticity constants.
//! * [`grid`] builds structured P1 triangulations, element fields and dyadic
//!   square families.
//! * [`elliptic_solver`] assembles and solves `div(σ∇u) = 0` with Dirichlet or
//!   periodic conditions and reconstructs stream functions.
//! * [`sigma_harmonic`] builds σ-harmonic mappings and primary pairs and checks
//!   Jacobian positivity, Beltrami residuals and injectivity.
//! * [`homogenization`] solves periodic cell problems and evaluates effective
//!   tensors and image-area formulas.
//! * [`weights`] estimates BMO norms, reverse Hölder constants and A∞ envelopes
//!   of Jacobian weights.

pub mod coeff_algebra;
pub mod coefficients;
pub mod elliptic_solver;
pub mod error;
pub mod grid;
pub mod homogenization;
pub mod mat2;
pub mod sigma_harmonic;
pub mod weights;

pub use error::{Error, Result};
pub use mat2::Mat2;
pub use num_complex::Complex64;
