//! Numerical lab for boundary vanishing orders of solutions to
//! `(-Δ)^s u = h u` with the spectral fractional Laplacian.
//!
//! The pipeline goes eigenbasis → fractional operator → extension →
//! straightening → frequency → blow-up, with `diagnostics` auditing the
//! inequalities and integral identities along the way.

pub mod blowup;
pub mod diagnostics;
pub mod dual;
pub mod eigenbasis;
pub mod error;
pub mod extension;
pub mod extrapolate;
pub mod field;
pub mod fractional_op;
pub mod frequency;
pub mod polynomial;
pub mod quadrature;
pub mod report;
pub mod scenario;
pub mod special;
pub mod sphere_eig;
pub mod straightening;

pub use error::{Error, Result};

/// Points in the upper half-space are stored as `[y_1, .., y_N, t]` padded to
/// length 3; for `N = 1` the last slot is unused and kept at zero.
pub type Point = [f64; 3];

/// Fixed capacity for (N+1)-vectors and matrices; N is 1 or 2.
pub type Mat3 = [[f64; 3]; 3];
