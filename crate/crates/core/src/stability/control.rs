//! Control functions, direct-method schemes and the stability bounds.
//!
//! Every scheme pairs an approximant `A_l` with a weighted series `φ̃` of the
//! control function. For power-type control `ε(‖x‖^p + ‖y‖^p + ‖z‖^p)` the
//! series is geometric and has a closed form; the bound at `x` then collapses
//! to a constant times `ε‖x‖^p`.
//!
//! | scheme               | `A_l(x)`        | `φ̃` term                 | power gate |
//! |----------------------|-----------------|---------------------------|------------|
//! | `Cauchy2`            | `f(2^l x)/2^l`  | `2^{-j} φ(2^j ·)`, j ≥ 0  | `p < 1`    |
//! | `Cauchy2Contractive` | `2^l f(x/2^l)`  | `2^{j} φ(2^{-j} ·)`, j ≥ 1 | `p > 1`    |
//! | `Jensen3`            | `f(3^l x)/3^l`  | `3^{-j} φ(3^j ·)`, j ≥ 0  | `p < 1`    |
//! | `Jensen3Contractive` | `3^l f(x/3^l)`  | `3^{j} φ(3^{-j} ·)`, j ≥ 0 | `p > 3`    |
//!
//! The `Jensen3Contractive` gate is the stronger summability condition
//! `Σ 3^{3j} φ(·/3^j) < ∞`, which the θ-derivation step needs.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::StabilityError;
use crate::linalg::ComplexMatrix;
use crate::scalar::Scalar;

/// Iteration cap for series summation of custom control functions.
pub const SERIES_MAX_TERMS: usize = 10_000;

/// Consecutive non-decreasing terms after which a series is declared divergent.
const GROWTH_RUN_LIMIT: usize = 64;

type ControlFn<T> = dyn Fn(&ComplexMatrix<T>, &ComplexMatrix<T>, &ComplexMatrix<T>) -> T + Send + Sync;

/// Nonnegative control `φ(x, y, z)` of the approximate functional equations.
#[derive(Clone)]
pub enum ControlFunction<T> {
    /// `ε(‖x‖^p + ‖y‖^p + ‖z‖^p)` with `‖0‖^p = 0` for every `p ≥ 0`.
    PowerType { eps: T, p: T },
    Custom(Arc<ControlFn<T>>),
}

impl<T: Scalar> fmt::Debug for ControlFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PowerType { eps, p } => write!(f, "PowerType {{ eps: {eps}, p: {p} }}"),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// `t^p` with the convention `0^p = 0` (including `p = 0`).
pub fn pow_norm<T: Scalar>(t: T, p: T) -> T {
    if t == T::zero() {
        T::zero()
    } else {
        t.powf(p)
    }
}

impl<T: Scalar> ControlFunction<T> {
    pub fn power(eps: T, p: T) -> Result<Self, StabilityError> {
        if !(eps >= T::zero() && eps.is_finite() && p >= T::zero() && p.is_finite()) {
            return Err(StabilityError::InvalidParameter(format!(
                "power-type control needs finite ε ≥ 0 and p ≥ 0, got ε = {eps}, p = {p}"
            )));
        }
        Ok(Self::PowerType { eps, p })
    }

    pub fn custom(
        f: impl Fn(&ComplexMatrix<T>, &ComplexMatrix<T>, &ComplexMatrix<T>) -> T + Send + Sync + 'static,
    ) -> Self {
        Self::Custom(Arc::new(f))
    }

    pub fn eval(&self, x: &ComplexMatrix<T>, y: &ComplexMatrix<T>, z: &ComplexMatrix<T>) -> T {
        match self {
            Self::PowerType { eps, p } => {
                *eps * (pow_norm(x.norm(), *p) + pow_norm(y.norm(), *p) + pow_norm(z.norm(), *p))
            }
            Self::Custom(f) => f(x, y, z),
        }
    }
}

/// Which approximate functional equation a perturbation is certified for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalForm {
    /// `‖f(μx + y) − μf(x) − f(y)‖ ≤ φ(x, y, 0)`
    Cauchy,
    /// `‖2f((μx + y)/2) − μf(x) − f(y)‖ ≤ φ(x, y, 0)`
    Jensen,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Cauchy2,
    Cauchy2Contractive,
    Jensen3,
    Jensen3Contractive,
}

/// How `φ̃` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Summation {
    /// Closed form for power-type control, partial sums otherwise.
    Auto,
    /// Always partial sums, even for power-type control.
    Series,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Cauchy2,
        Scheme::Cauchy2Contractive,
        Scheme::Jensen3,
        Scheme::Jensen3Contractive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Cauchy2 => "cauchy2",
            Self::Cauchy2Contractive => "cauchy2_contractive",
            Self::Jensen3 => "jensen3",
            Self::Jensen3Contractive => "jensen3_contractive",
        }
    }

    /// Scaling base of the approximant: 2 or 3.
    pub fn base<T: Scalar>(self) -> T {
        match self {
            Self::Cauchy2 | Self::Cauchy2Contractive => T::lit(2.0),
            Self::Jensen3 | Self::Jensen3Contractive => T::lit(3.0),
        }
    }

    /// Contractive schemes evaluate `f` at `x / k^l`.
    pub fn is_contractive(self) -> bool {
        matches!(self, Self::Cauchy2Contractive | Self::Jensen3Contractive)
    }

    pub fn form(self) -> FunctionalForm {
        match self {
            Self::Cauchy2 | Self::Cauchy2Contractive => FunctionalForm::Cauchy,
            Self::Jensen3 | Self::Jensen3Contractive => FunctionalForm::Jensen,
        }
    }

    /// Human-readable summability condition for power-type control.
    pub fn gate_condition(self) -> &'static str {
        match self {
            Self::Cauchy2 => "p < 1 (Σ 2^{-j} φ(2^j x, 2^j y, 2^j z) must converge)",
            Self::Cauchy2Contractive => "p > 1 (Σ_{j≥1} 2^{j} φ(2^{-j} x, 2^{-j} y) must converge)",
            Self::Jensen3 => "p < 1 (Σ 3^{-j} φ(3^j x, 3^j y, 3^j z) must converge)",
            Self::Jensen3Contractive => "p > 3 (Σ 3^{3j} φ(x/3^j, y/3^j, z/3^j) must converge)",
        }
    }

    /// Rejects exponents for which the scheme's series diverges.
    pub fn check_power_gate<T: Scalar>(self, p: T) -> Result<(), StabilityError> {
        let p64 = p.to_f64_lossy();
        let ok = match self {
            Self::Cauchy2 | Self::Jensen3 => p64 < 1.0,
            Self::Cauchy2Contractive => p64 > 1.0,
            Self::Jensen3Contractive => p64 > 3.0,
        };
        if ok && p64 >= 0.0 {
            return Ok(());
        }
        let note = if p64 == 1.0 {
            "; there is no analogue of the power-type stability result for p = 1"
        } else {
            ""
        };
        Err(StabilityError::Gate {
            scheme: self,
            p: p64,
            condition: format!("{}{}", self.gate_condition(), note),
        })
    }

    /// Geometric ratio of successive approximant differences for power-type perturbations.
    pub fn convergence_rate<T: Scalar>(self, p: T) -> T {
        let k: T = self.base();
        if self.is_contractive() {
            k.powf(T::one() - p)
        } else {
            k.powf(p - T::one())
        }
    }

    /// `(first index, weight_j, argument scale_j)` of the `φ̃` series.
    fn series_term<T: Scalar>(self, j: i32) -> (T, T) {
        let k: T = self.base();
        if self.is_contractive() {
            (k.powi(j), k.powi(-j))
        } else {
            (k.powi(-j), k.powi(j))
        }
    }

    fn series_start(self) -> i32 {
        match self {
            Self::Cauchy2Contractive => 1,
            _ => 0,
        }
    }

    /// Closed form of `Σ_j weight_j · scale_j^p` (requires the power gate).
    fn power_series_sum<T: Scalar>(self, p: T) -> T {
        let one = T::one();
        match self {
            Self::Cauchy2Contractive => {
                let r = T::lit(2.0).powf(one - p);
                r / (one - r)
            }
            _ => one / (one - self.convergence_rate(p)),
        }
    }

    /// Approximant `A_l(x)`; errors if the scaled argument leaves the finite range.
    pub fn approximant<T: Scalar>(
        self,
        f: &impl crate::triple::MatrixMap<T>,
        x: &ComplexMatrix<T>,
        level: usize,
    ) -> Result<ComplexMatrix<T>, StabilityError> {
        let k: T = self.base();
        let scale = k.powi(level as i32);
        let overflow = || StabilityError::Overflow {
            level,
            scheme: self,
        };
        if !scale.is_finite() {
            return Err(overflow());
        }
        let out = if self.is_contractive() {
            f.apply(&x.scale_real(scale.recip())).scale_real(scale)
        } else {
            let arg = x.scale_real(scale);
            if !arg.is_finite() {
                return Err(overflow());
            }
            f.apply(&arg).scale_real(scale.recip())
        };
        if out.is_finite() {
            Ok(out)
        } else {
            Err(overflow())
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = StabilityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace(['-', ' '], "_");
        Self::ALL
            .into_iter()
            .find(|sc| sc.name() == norm || sc.name().replace('_', "") == norm.replace('_', ""))
            .ok_or_else(|| StabilityError::InvalidParameter(format!("unknown scheme `{s}`")))
    }
}

/// Sums `term(j)` for `j = start, start+1, …` until the term falls below
/// `tol · (sum + tol)`. Errors on non-finite terms, sustained growth, or the cap.
fn sum_series<T: Scalar>(term: impl Fn(i32) -> T, start: i32, tol: T) -> Result<T, usize> {
    let mut sum = T::zero();
    let mut prev: Option<T> = None;
    let mut growth = 0usize;
    for (count, j) in (start..).take(SERIES_MAX_TERMS).enumerate() {
        let t = term(j);
        if !t.is_finite() || t < T::zero() {
            return Err(count + 1);
        }
        sum = sum + t;
        if !sum.is_finite() {
            return Err(count + 1);
        }
        if t <= tol * (sum + tol) {
            return Ok(sum);
        }
        match prev {
            Some(q) if t >= q => growth += 1,
            _ => growth = 0,
        }
        if growth >= GROWTH_RUN_LIMIT {
            return Err(count + 1);
        }
        prev = Some(t);
    }
    Err(SERIES_MAX_TERMS)
}

/// The scheme's weighted series `φ̃(x, y, z)`.
pub fn phi_tilde<T: Scalar>(
    phi: &ControlFunction<T>,
    scheme: Scheme,
    x: &ComplexMatrix<T>,
    y: &ComplexMatrix<T>,
    z: &ComplexMatrix<T>,
    tol: T,
) -> Result<T, StabilityError> {
    phi_tilde_with(phi, scheme, x, y, z, tol, Summation::Auto)
}

pub fn phi_tilde_with<T: Scalar>(
    phi: &ControlFunction<T>,
    scheme: Scheme,
    x: &ComplexMatrix<T>,
    y: &ComplexMatrix<T>,
    z: &ComplexMatrix<T>,
    tol: T,
    summation: Summation,
) -> Result<T, StabilityError> {
    if let ControlFunction::PowerType { eps, p } = phi {
        scheme.check_power_gate(*p)?;
        if summation == Summation::Auto {
            return Ok(phi.eval(x, y, z) * scheme.power_series_sum(*p));
        }
        if *eps == T::zero() {
            return Ok(T::zero());
        }
    }
    let divergent = |terms| StabilityError::Divergent {
        scheme,
        terms,
        condition: scheme.gate_condition().to_string(),
    };
    if scheme == Scheme::Jensen3Contractive && matches!(phi, ControlFunction::Custom(_)) {
        // summability gate with the cubic weight
        let three = T::lit(3.0);
        sum_series(
            |j| {
                let s = three.powi(-j);
                three.powi(3 * j) * phi.eval(&x.scale_real(s), &y.scale_real(s), &z.scale_real(s))
            },
            0,
            tol,
        )
        .map_err(divergent)?;
    }
    sum_series(
        |j| {
            let (w, s) = scheme.series_term::<T>(j);
            w * phi.eval(&x.scale_real(s), &y.scale_real(s), &z.scale_real(s))
        },
        scheme.series_start(),
        tol,
    )
    .map_err(divergent)
}

/// Upper bound on `‖f(x) − D(x)‖` supplied by the scheme's stability theorem.
pub fn hyers_bound<T: Scalar>(
    phi: &ControlFunction<T>,
    scheme: Scheme,
    x: &ComplexMatrix<T>,
    tol: T,
) -> Result<T, StabilityError> {
    hyers_bound_with(phi, scheme, x, tol, Summation::Auto)
}

pub fn hyers_bound_with<T: Scalar>(
    phi: &ControlFunction<T>,
    scheme: Scheme,
    x: &ComplexMatrix<T>,
    tol: T,
    summation: Summation,
) -> Result<T, StabilityError> {
    let zero = ComplexMatrix::zeros(x.dim());
    let pt = |a: &ComplexMatrix<T>, b: &ComplexMatrix<T>| phi_tilde_with(phi, scheme, a, b, &zero, tol, summation);
    let three = T::lit(3.0);
    match scheme {
        Scheme::Cauchy2 | Scheme::Cauchy2Contractive => Ok(T::lit(0.5) * pt(x, x)?),
        Scheme::Jensen3 => {
            let neg = -x;
            Ok((pt(x, &neg)? + pt(&neg, &x.scale_real(three))?) / three)
        }
        Scheme::Jensen3Contractive => {
            let third = x.scale_real(three.recip());
            let neg_third = -&third;
            Ok(pt(&third, &neg_third)? + pt(&neg_third, x)?)
        }
    }
}

/// Closed-form constant `C(p)` of the power-type bound `‖f(x) − D(x)‖ ≤ C(p)·ε‖x‖^p`.
pub fn corollary_constant<T: Scalar>(scheme: Scheme, p: T) -> Result<T, StabilityError> {
    scheme.check_power_gate(p)?;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    Ok(match scheme {
        Scheme::Cauchy2 | Scheme::Cauchy2Contractive => two / (two - two.powf(p)).abs(),
        Scheme::Jensen3 => (three + three.powf(p)) / (three - three.powf(p)),
        Scheme::Jensen3Contractive => (three.powf(p) + three) / (three.powf(p) - three),
    })
}
