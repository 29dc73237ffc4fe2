//! Real scalar abstraction underlying every complex matrix in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real field the complex entries are built over: `f64` or `f32`.
///
/// The two tolerance hooks scale structural checks (unitarity,
/// skew-adjointness) and the spectral-norm iteration to the precision
/// of the underlying float.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Tolerance for structural preconditions such as `‖u*u − I‖`.
    fn structural_tol() -> Self;

    /// Default relative tolerance of the spectral-norm power iteration.
    fn norm_tol() -> Self;

    /// Converts an `f64` literal. Panics only on values the type cannot represent at all.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal not representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn structural_tol() -> Self {
        1e-10
    }

    fn norm_tol() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn structural_tol() -> Self {
        1e-4
    }

    fn norm_tol() -> Self {
        1e-6
    }
}

/// Complex number from real and imaginary `f64` parts.
pub fn cplx<T: Scalar>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}
