//! Numerical checkers for the JB*-triple axioms on `M_n(ℂ)`.
//!
//! Relative residuals are divided by `max(1, ∏‖inputs‖)`.
//! Axiom (iii) is checked through a Hilbert–Schmidt proxy: `L(a, a)` must be
//! self-adjoint and have a nonnegative quadratic form on the probe set.

use serde::{Deserialize, Serialize};

use super::operator::{operator_l, MatrixMap};
use super::{tp, TripleError};
use crate::check::{relative_scale, Check};
use crate::linalg::ComplexMatrix;
use crate::scalar::Scalar;

/// `‖{x,y,z} − {z,y,x}‖`, absolute.
pub fn check_commutativity<T: Scalar>(
    x: &ComplexMatrix<T>,
    y: &ComplexMatrix<T>,
    z: &ComplexMatrix<T>,
    tol: T,
) -> Check<T> {
    Check::new(tp(x, y, z).distance(&tp(z, y, x)), tol)
}

/// Relative residual of the Jordan identity
/// `L(a,b){x,y,z} = {L(a,b)x,y,z} − {x,L(b,a)y,z} + {x,y,L(a,b)z}`.
pub fn check_jordan_identity<T: Scalar>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
    x: &ComplexMatrix<T>,
    y: &ComplexMatrix<T>,
    z: &ComplexMatrix<T>,
    tol: T,
) -> Check<T> {
    let l_ab = |m: &ComplexMatrix<T>| tp(a, b, m);
    let lhs = l_ab(&tp(x, y, z));
    let mut rhs = tp(&l_ab(x), y, z);
    rhs -= &tp(x, &tp(b, a, y), z);
    rhs += &tp(x, y, &l_ab(z));
    let scale = relative_scale(&[a.norm(), b.norm(), x.norm(), y.norm(), z.norm()]);
    Check::new(lhs.distance(&rhs) / scale, tol)
}

/// `|‖{x,x,x}‖ − ‖x‖³| / max(1, ‖x‖³)`.
pub fn check_norm_identity<T: Scalar>(x: &ComplexMatrix<T>, tol: T) -> Check<T> {
    let cube = x.norm().powi(3);
    let lhs = tp(x, x, x).norm();
    Check::new((lhs - cube).abs() / T::one().max(cube), tol)
}

/// Relative gap between the C*-form and the Jordan-form triple products.
pub fn product_agreement<T: Scalar>(
    x: &ComplexMatrix<T>,
    y: &ComplexMatrix<T>,
    z: &ComplexMatrix<T>,
    tol: T,
) -> Result<Check<T>, TripleError> {
    let c = super::triple_product_cstar(x, y, z)?;
    let j = super::triple_product_jbstar(x, y, z)?;
    let scale = relative_scale(&[x.norm(), y.norm(), z.norm()]);
    Ok(Check::new(c.distance(&j) / scale, tol))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport<T> {
    /// `max |⟨L x, y⟩ − ⟨x, L y⟩|` over probe pairs.
    pub self_adjoint_violation: T,
    /// `max(0, −min Re⟨L x, x⟩)` over probes.
    pub positivity_violation: T,
    pub tolerance: T,
}

impl<T: Scalar> PositivityReport<T> {
    pub fn passed(&self) -> bool {
        self.self_adjoint_violation <= self.tolerance && self.positivity_violation <= self.tolerance
    }
}

/// Hilbert–Schmidt proxy for "L(a, a) is hermitian with positive spectrum".
pub fn check_l_positive<T: Scalar>(
    a: &ComplexMatrix<T>,
    probes: &[ComplexMatrix<T>],
    tol: T,
) -> Result<PositivityReport<T>, TripleError> {
    assert!(!probes.is_empty(), "check_l_positive needs at least one probe");
    let l = operator_l(a, a)?;
    let images: Vec<_> = probes.iter().map(|x| l.apply(x)).collect();
    let mut self_adjoint = T::zero();
    let mut positivity = T::zero();
    for (x, lx) in probes.iter().zip(&images) {
        for (y, ly) in probes.iter().zip(&images) {
            let gap = (lx.hs_inner(y) - x.hs_inner(ly)).norm();
            self_adjoint = self_adjoint.max(gap);
        }
        positivity = positivity.max(-lx.hs_inner(x).re);
    }
    Ok(PositivityReport {
        self_adjoint_violation: self_adjoint,
        positivity_violation: positivity,
        tolerance: tol,
    })
}
