//! Finite-dimensional JB*-triples realized on `M_n(ℂ)`, θ-derivations, and the
//! direct-method recovery of linear θ-derivations from perturbed maps.
//!
//! Everything is generic over the real scalar `T: Scalar` (`f64` or `f32`);
//! the `f64` aliases below are what most callers want.

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod linalg;
pub mod sampling;
pub mod scalar;
pub mod stability;
pub mod triple;

pub use check::Check;
pub use linalg::{ComplexMatrix, LinalgError};
pub use scalar::Scalar;
pub use triple::{LinearOperator, MatrixMap, TripleError};

pub type C64 = num_complex::Complex<f64>;
pub type Matrix = ComplexMatrix<f64>;
pub type Matrix32 = ComplexMatrix<f32>;
pub type Operator = LinearOperator<f64>;
pub type Operator32 = LinearOperator<f32>;
