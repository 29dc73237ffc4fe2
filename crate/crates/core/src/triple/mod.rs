//! The JB*-triple structure of `M_n(ℂ)`.
//!
//! The canonical triple product is the C*-form `{x, y, z} = (xy*z + zy*x)/2`;
//! the Jordan-algebra form built from the anticommutator is provided for
//! cross-checking. Linear maps on the triple live in [`operator`], the
//! axiom checkers in [`axioms`], and θ-derivation machinery in [`derivation`].

pub mod axioms;
pub mod derivation;
pub mod operator;

use thiserror::Error;

use crate::linalg::{ComplexMatrix, LinalgError};
use crate::scalar::Scalar;

pub use axioms::{
    check_commutativity, check_jordan_identity, check_l_positive, check_norm_identity, product_agreement,
    PositivityReport,
};
pub use derivation::{
    jordan_theta_residual, make_theta_derivation, make_triple_derivation, make_triple_homomorphism,
    theta_derivation_residual, triple_derivation_residual, triple_homomorphism_residual,
};
pub use operator::{operator_l, LinearOperator, MatrixMap, OperatorForm};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TripleError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("operator dimension mismatch: expected {expected}, got {got}")]
    OperatorDimension { expected: usize, got: usize },
    #[error("matrix is not unitary: ‖u*u − I‖ = {residual:e}")]
    NotUnitary { residual: f64 },
    #[error("matrix is not skew-adjoint: ‖a* + a‖ = {residual:e}")]
    NotSkewAdjoint { residual: f64 },
    #[error("{what} precondition failed: residual {residual:e} above {threshold:e}")]
    Precondition {
        what: &'static str,
        residual: f64,
        threshold: f64,
    },
    #[error("empty operator sum")]
    EmptySum,
    #[error("malformed operator encoding: {0}")]
    Encoding(String),
}

fn same_dim<T: Scalar>(ms: &[&ComplexMatrix<T>]) -> Result<(), TripleError> {
    let n = ms[0].dim();
    match ms.iter().find(|m| m.dim() != n) {
        Some(m) => Err(LinalgError::DimensionMismatch {
            left: n,
            right: m.dim(),
        }
        .into()),
        None => Ok(()),
    }
}

/// Anticommutator `x ∘ y = (xy + yx)/2`.
pub fn jordan_product<T: Scalar>(x: &ComplexMatrix<T>, y: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>, TripleError> {
    same_dim(&[x, y])?;
    Ok(jordan(x, y))
}

/// C*-algebra triple product `{x, y, z} = (x y* z + z y* x)/2`.
pub fn triple_product_cstar<T: Scalar>(
    x: &ComplexMatrix<T>,
    y: &ComplexMatrix<T>,
    z: &ComplexMatrix<T>,
) -> Result<ComplexMatrix<T>, TripleError> {
    same_dim(&[x, y, z])?;
    Ok(tp(x, y, z))
}

/// Jordan triple product `(x∘y*)∘z + (y*∘z)∘x − (x∘z)∘y*`.
pub fn triple_product_jbstar<T: Scalar>(
    x: &ComplexMatrix<T>,
    y: &ComplexMatrix<T>,
    z: &ComplexMatrix<T>,
) -> Result<ComplexMatrix<T>, TripleError> {
    same_dim(&[x, y, z])?;
    let ys = y.adjoint();
    let mut out = jordan(&jordan(x, &ys), z);
    out += &jordan(&jordan(&ys, z), x);
    out -= &jordan(&jordan(x, z), &ys);
    Ok(out)
}

pub(crate) fn jordan<T: Scalar>(x: &ComplexMatrix<T>, y: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let mut s = x * y;
    s += &(y * x);
    s.scale_real(T::lit(0.5))
}

/// Canonical triple product; panics on dimension mismatch.
pub(crate) fn tp<T: Scalar>(x: &ComplexMatrix<T>, y: &ComplexMatrix<T>, z: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let ys = y.adjoint();
    let mut s = &(x * &ys) * z;
    s += &(&(z * &ys) * x);
    s.scale_real(T::lit(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_matrices, random_matrix, rng_from_seed};
    use crate::scalar::cplx;

    type M = ComplexMatrix<f64>;

    fn e(n: usize, i: usize, j: usize) -> M {
        M::unit(n, i - 1, j - 1)
    }

    /// Entrywise oracle for `(x y* z + z y* x)/2` written with explicit index sums.
    fn cstar_oracle(x: &M, y: &M, z: &M) -> M {
        let n = x.dim();
        M::from_fn(n, |i, l| {
            let mut acc = cplx(0.0, 0.0);
            for j in 0..n {
                for k in 0..n {
                    acc += x[(i, j)] * y[(k, j)].conj() * z[(k, l)];
                    acc += z[(i, j)] * y[(k, j)].conj() * x[(k, l)];
                }
            }
            acc * 0.5
        })
    }

    #[test]
    fn jordan_product_examples() {
        let mut rng = rng_from_seed(1);
        let x: M = random_matrix(&mut rng, 3);
        assert!(jordan_product(&M::identity(3), &x).unwrap().approx_eq(&x, 1e-15));
        let p = jordan_product(&e(2, 1, 1), &e(2, 1, 2)).unwrap();
        assert_eq!(p, e(2, 1, 2).scale_real(0.5));
        let a = M::diag(&[cplx(2.0, 1.0), cplx(-1.0, 0.5)]);
        let b = M::diag(&[cplx(0.5, 0.0), cplx(3.0, -2.0)]);
        let ab = M::diag(&[cplx::<f64>(2.0, 1.0) * cplx::<f64>(0.5, 0.0), cplx::<f64>(-1.0, 0.5) * cplx::<f64>(3.0, -2.0)]);
        assert!(jordan_product(&a, &b).unwrap().approx_eq(&ab, 1e-15));
        assert!(jordan_product(&a, &M::identity(3)).is_err());
    }

    #[test]
    fn cstar_product_examples() {
        let e11 = e(2, 1, 1);
        let e12 = e(2, 1, 2);
        assert_eq!(triple_product_cstar(&e11, &e11, &e11).unwrap(), e11);
        assert_eq!(triple_product_cstar(&e12, &e12, &e12).unwrap(), e12);
        let two = e11.scale_real(2.0);
        assert_eq!(triple_product_cstar(&two, &e11, &e11).unwrap(), two);
        assert_eq!(triple_product_cstar(&two, &two, &two).unwrap(), e11.scale_real(8.0));
        assert!(triple_product_cstar(&e11, &M::identity(3), &e11).is_err());
    }

    #[test]
    fn cstar_product_matches_index_oracle() {
        let ms = random_matrices::<f64>(5, 3, 30);
        for w in ms.windows(3) {
            let got = triple_product_cstar(&w[0], &w[1], &w[2]).unwrap();
            assert!(got.max_abs_diff(&cstar_oracle(&w[0], &w[1], &w[2])) < 1e-14);
        }
    }

    #[test]
    fn jbstar_product_examples() {
        let mut rng = rng_from_seed(2);
        let z: M = random_matrix(&mut rng, 3);
        let i3 = M::identity(3);
        assert!(triple_product_jbstar(&i3, &i3, &z).unwrap().approx_eq(&z, 1e-15));
        let e12 = e(2, 1, 2);
        let jb = triple_product_jbstar(&e12, &e12, &e12).unwrap();
        assert_eq!(jb, triple_product_cstar(&e12, &e12, &e12).unwrap());
        assert_eq!(jb, e12);
        let x: M = random_matrix(&mut rng, 3);
        assert!(triple_product_jbstar(&x, &M::zeros(3), &z).unwrap().is_zero());
    }

    #[test]
    fn unital_recovery_of_jordan_product_and_involution() {
        let ms = random_matrices::<f64>(9, 3, 20);
        let e_unit = M::identity(3);
        for w in ms.windows(2) {
            let via_triple = triple_product_cstar(&w[0], &e_unit, &w[1]).unwrap();
            assert!(via_triple.approx_eq(&jordan_product(&w[0], &w[1]).unwrap(), 1e-15));
            let star = triple_product_cstar(&e_unit, &w[0], &e_unit).unwrap();
            assert!(star.approx_eq(&w[0].adjoint(), 1e-15));
        }
    }
}
