//! Pass/fail outcomes that always carry their numbers.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// A residual measured against the threshold it must not exceed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check<T> {
    pub residual: T,
    pub threshold: T,
}

impl<T: Scalar> Check<T> {
    pub fn new(residual: T, threshold: T) -> Self {
        Self { residual, threshold }
    }

    /// NaN residuals never pass.
    pub fn passed(&self) -> bool {
        self.residual <= self.threshold
    }

    /// Worst of two checks at the same threshold.
    pub fn worst(self, other: Self) -> Self {
        if other.residual > self.residual || other.residual.is_nan() {
            other
        } else {
            self
        }
    }
}

/// `max(1, ∏ factors)`, the normalizer of every relative residual.
pub fn relative_scale<T: Scalar>(factors: &[T]) -> T {
    T::one().max(factors.iter().fold(T::one(), |acc, &f| acc * f))
}
