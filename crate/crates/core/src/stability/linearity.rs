//! ℂ-linearity of the recovered map, rebuilt the way the uniqueness proof
//! does it: S¹-homogeneity, then real scalars split into an integer part
//! and a fractional part written as an average of two unimodular numbers.

use num_complex::Complex;
use rayon::prelude::*;

use super::StabilityError;
use crate::check::Check;
use crate::linalg::ComplexMatrix;
use crate::scalar::Scalar;
use crate::triple::MatrixMap;

/// Complex number of modulus one (to `1e-12`, or a few ulps for `f32`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnimodularScalar<T>(Complex<T>);

impl<T: Scalar> UnimodularScalar<T> {
    pub fn tolerance() -> T {
        T::lit(1e-12).max(T::epsilon() * T::lit(8.0))
    }

    pub fn new(value: Complex<T>) -> Result<Self, StabilityError> {
        if (value.norm() - T::one()).abs() <= Self::tolerance() {
            Ok(Self(value))
        } else {
            Err(StabilityError::InvalidParameter(format!("|{value}| ≠ 1")))
        }
    }

    /// `e^{it}`
    pub fn from_angle(t: T) -> Self {
        Self(Complex::new(t.cos(), t.sin()))
    }

    pub fn value(self) -> Complex<T> {
        self.0
    }
}

/// `γ = (μ₁ + μ₂)/2` with `μ₁ = γ + i√(1 − γ²)` and `μ₂ = conj(μ₁)`.
pub fn unimodular_average_decomposition<T: Scalar>(
    gamma: T,
) -> Result<(UnimodularScalar<T>, UnimodularScalar<T>), StabilityError> {
    if !(gamma >= T::zero() && gamma < T::one()) {
        return Err(StabilityError::InvalidParameter(format!("γ = {gamma} is outside [0, 1)")));
    }
    let mu = Complex::new(gamma, (T::one() - gamma * gamma).sqrt());
    Ok((UnimodularScalar::new(mu)?, UnimodularScalar::new(mu.conj())?))
}

/// Worst `‖D̂(μx) − μD̂(x)‖ / max(1, ‖x‖)` against `τ`.
pub fn verify_s1_homogeneity<T: Scalar>(
    d: &impl MatrixMap<T>,
    probes: &[ComplexMatrix<T>],
    mus: &[UnimodularScalar<T>],
    tau: T,
) -> Check<T> {
    let per_probe: Vec<T> = probes
        .par_iter()
        .map(|x| {
            let dx = d.apply(x);
            let scale = T::one().max(x.norm());
            mus.iter()
                .map(|mu| d.apply(&x.scale(mu.value())).distance(&dx.scale(mu.value())) / scale)
                .fold(T::zero(), T::max)
        })
        .collect();
    Check::new(per_probe.into_iter().fold(T::zero(), T::max), tau)
}

/// `floor(α)` and `α − floor(α)`, with the fractional part kept strictly below 1.
fn split_real<T: Scalar>(alpha: T) -> (T, T) {
    let m = alpha.floor();
    let gamma = alpha - m;
    if gamma >= T::one() {
        (m + T::one(), T::zero())
    } else {
        (m, gamma)
    }
}

/// `D̂(αx)` for real `α` using only additivity and S¹-homogeneity of `D̂`:
/// `⌊α⌋ D̂(x) + ½(D̂(μ₁x) + D̂(μ₂x))`.
fn real_route<T: Scalar>(d: &impl MatrixMap<T>, alpha: T, x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>, StabilityError> {
    let (m, gamma) = split_real(alpha);
    let (mu1, mu2) = unimodular_average_decomposition(gamma)?;
    let mut avg = d.apply(&x.scale(mu1.value()));
    avg += &d.apply(&x.scale(mu2.value()));
    let mut out = d.apply(x).scale_real(m);
    out += &avg.scale_real(T::lit(0.5));
    Ok(out)
}

/// `‖D̂(λx) − route(λ, x)‖` against `τ·max(1, |λ|‖x‖)`, where the route
/// reassembles `λ = α₁ + iα₂` from integer parts and unimodular averages.
pub fn complex_homogeneity_via_decomposition<T: Scalar>(
    d: &impl MatrixMap<T>,
    lambda: Complex<T>,
    x: &ComplexMatrix<T>,
    tau: T,
) -> Result<Check<T>, StabilityError> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(StabilityError::InvalidParameter(format!("λ = {lambda} is not finite")));
    }
    let direct = d.apply(&x.scale(lambda));
    let mut route = real_route(d, lambda.re, x)?;
    let i = UnimodularScalar::from_angle(T::FRAC_PI_2()).value();
    route += &real_route(d, lambda.im, x)?.scale(i);
    let scale = T::one().max(lambda.norm() * x.norm());
    Ok(Check::new(direct.distance(&route), tau * scale))
}
