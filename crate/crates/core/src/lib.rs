//! Floquet–Bloch spectral toolkit for ordinary differential operators
//! `y^(n) + P_2(x) y^(n-2) + … + P_n(x) y` with 1-periodic `m×m` matrix
//! coefficients.
//!
//! * [`operator`]: operator model, mean matrix `C` and the closed-form
//!   spectrum of the constant-coefficient fibers.
//! * [`bloch`]: fiber spectra by Fourier–Galerkin truncation, the
//!   characteristic-determinant oracle, band tracking, asymptotic residuals
//!   and the disk census.
//! * [`singularity`]: multiple eigenvalues, `α`-exponent classification and
//!   the growth probe at infinity.
//! * [`gelfand`]: Gelfand transform of finitely supported cell functions.
//! * [`expansion`]: the bracketed spectral expansion and reconstruction.

pub mod assignment;
pub mod bloch;
pub mod error;
pub mod expansion;
pub mod fixtures;
pub mod gelfand;
pub mod io;
pub mod linalg;
pub mod ode;
pub mod operator;
pub mod quadrature;
pub mod singularity;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
