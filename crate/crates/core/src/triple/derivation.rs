//! Exact triple homomorphisms, triple derivations and θ-derivations, with
//! the residual checkers that certify them.

use super::operator::{LinearOperator, MatrixMap};
use super::{tp, TripleError};
use crate::check::relative_scale;
use crate::linalg::ComplexMatrix;
use crate::sampling::random_matrices;
use crate::scalar::Scalar;

/// Fixed seed of the internal triples used to verify generator preconditions.
const PRECONDITION_SEED: u64 = 0x7d1e_5eed;
const PRECONDITION_TRIPLES: usize = 8;

/// `ψ(x) = u x u*`, a triple homomorphism for unitary `u`.
pub fn make_triple_homomorphism<T: Scalar>(u: ComplexMatrix<T>) -> Result<LinearOperator<T>, TripleError> {
    LinearOperator::conjugation(u)
}

/// `d(x) = a x − x a`, a triple derivation for skew-adjoint `a`.
pub fn make_triple_derivation<T: Scalar>(a: ComplexMatrix<T>) -> Result<LinearOperator<T>, TripleError> {
    LinearOperator::commutator(a)
}

/// Relative residual of `ψ{xyz} = {ψx, ψy, ψz}`.
pub fn triple_homomorphism_residual<T: Scalar>(
    psi: &impl MatrixMap<T>,
    x: &ComplexMatrix<T>,
    y: &ComplexMatrix<T>,
    z: &ComplexMatrix<T>,
) -> T {
    let lhs = psi.apply(&tp(x, y, z));
    let rhs = tp(&psi.apply(x), &psi.apply(y), &psi.apply(z));
    lhs.distance(&rhs) / relative_scale(&[x.norm(), y.norm(), z.norm()])
}

/// Relative residual of `d{xyz} = {dx,y,z} + {x,dy,z} + {x,y,dz}`.
pub fn triple_derivation_residual<T: Scalar>(
    d: &impl MatrixMap<T>,
    x: &ComplexMatrix<T>,
    y: &ComplexMatrix<T>,
    z: &ComplexMatrix<T>,
) -> T {
    let lhs = d.apply(&tp(x, y, z));
    let mut rhs = tp(&d.apply(x), y, z);
    rhs += &tp(x, &d.apply(y), z);
    rhs += &tp(x, y, &d.apply(z));
    lhs.distance(&rhs) / relative_scale(&[x.norm(), y.norm(), z.norm()])
}

/// `‖D{xyz} − {Dx,θy,θz} − {θx,Dy,θz} − {θx,θy,Dz}‖`.
pub fn theta_derivation_residual<T: Scalar>(
    d: &impl MatrixMap<T>,
    theta: &impl MatrixMap<T>,
    x: &ComplexMatrix<T>,
    y: &ComplexMatrix<T>,
    z: &ComplexMatrix<T>,
) -> T {
    let (tx, ty, tz) = (theta.apply(x), theta.apply(y), theta.apply(z));
    let lhs = d.apply(&tp(x, y, z));
    let mut rhs = tp(&d.apply(x), &ty, &tz);
    rhs += &tp(&tx, &d.apply(y), &tz);
    rhs += &tp(&tx, &ty, &d.apply(z));
    lhs.distance(&rhs)
}

/// One-variable residual `‖D{xxx} − {Dx,θx,θx} − {θx,Dx,θx} − {θx,θx,Dx}‖`.
pub fn jordan_theta_residual<T: Scalar>(d: &impl MatrixMap<T>, theta: &impl MatrixMap<T>, x: &ComplexMatrix<T>) -> T {
    theta_derivation_residual(d, theta, x, x, x)
}

/// `D = θ ∘ d` after checking that θ is a triple homomorphism and `d` a triple
/// derivation on a fixed internal sample (relative residual ≤ structural tolerance).
type TripleFn<'a, T> = dyn Fn(&ComplexMatrix<T>, &ComplexMatrix<T>, &ComplexMatrix<T>) -> T + 'a;

pub fn make_theta_derivation<T: Scalar>(
    theta: LinearOperator<T>,
    d: LinearOperator<T>,
) -> Result<LinearOperator<T>, TripleError> {
    let n = theta.dim();
    let sample = random_matrices::<T>(PRECONDITION_SEED, n, 3 * PRECONDITION_TRIPLES);
    let threshold = T::structural_tol();
    let worst = |f: &TripleFn<'_, T>| {
        sample
            .chunks(3)
            .map(|t| f(&t[0], &t[1], &t[2]))
            .fold(T::zero(), T::max)
    };
    let hom = worst(&|x, y, z| triple_homomorphism_residual(&theta, x, y, z));
    if !(hom <= threshold) {
        return Err(TripleError::Precondition {
            what: "triple homomorphism",
            residual: hom.to_f64_lossy(),
            threshold: threshold.to_f64_lossy(),
        });
    }
    if d.dim() != n {
        return Err(TripleError::OperatorDimension {
            expected: n,
            got: d.dim(),
        });
    }
    let der = worst(&|x, y, z| triple_derivation_residual(&d, x, y, z));
    if !(der <= threshold) {
        return Err(TripleError::Precondition {
            what: "triple derivation",
            residual: der.to_f64_lossy(),
            threshold: threshold.to_f64_lossy(),
        });
    }
    LinearOperator::compose(theta, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_matrices, random_skew_adjoint, random_unitary, rng_from_seed};
    use crate::scalar::cplx;
    use num_complex::Complex;

    type M = ComplexMatrix<f64>;
    type Op = LinearOperator<f64>;

    fn triples(seed: u64, n: usize, count: usize) -> Vec<[M; 3]> {
        random_matrices::<f64>(seed, n, 3 * count)
            .chunks(3)
            .map(|c| [c[0].clone(), c[1].clone(), c[2].clone()])
            .collect()
    }

    #[test]
    fn homomorphism_examples() {
        let id = make_triple_homomorphism(M::identity(2)).unwrap();
        let x = random_matrices::<f64>(1, 2, 1).remove(0);
        assert_eq!(id.apply(&x), x);
        let swap = M::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let psi = make_triple_homomorphism(swap).unwrap();
        assert_eq!(psi.apply(&M::unit(2, 0, 0)), M::unit(2, 1, 1));
        let mut rng = rng_from_seed(2);
        let psi = make_triple_homomorphism(random_unitary::<f64, _>(&mut rng, 3)).unwrap();
        for [x, y, z] in triples(3, 3, 50) {
            assert!(triple_homomorphism_residual(&psi, &x, &y, &z) <= 1e-10);
        }
        let not_unitary = M::from_real_rows(&[&[2.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert!(make_triple_homomorphism(not_unitary).is_err());
    }

    #[test]
    fn derivation_examples() {
        let zero = make_triple_derivation(M::zeros(2)).unwrap();
        assert!(zero.apply(&M::identity(2)).is_zero());
        let a = M::diag(&[cplx(0.0, 1.0), cplx(0.0, -1.0)]);
        let d = make_triple_derivation(a).unwrap();
        assert_eq!(d.apply(&M::unit(2, 0, 1)), M::unit(2, 0, 1).scale(cplx(0.0, 2.0)));
        let mut rng = rng_from_seed(4);
        let d = make_triple_derivation(random_skew_adjoint::<f64, _>(&mut rng, 3, 1.0)).unwrap();
        for [x, y, z] in triples(5, 3, 50) {
            assert!(triple_derivation_residual(&d, &x, &y, &z) <= 1e-10);
        }
        assert!(make_triple_derivation(M::identity(2)).is_err());
    }

    #[test]
    fn theta_derivation_examples() {
        let mut rng = rng_from_seed(6);
        let theta = Op::identity(3);
        let zero_d = make_theta_derivation(theta.clone(), Op::commutator(M::zeros(3)).unwrap()).unwrap();
        for [x, y, z] in triples(7, 3, 5) {
            assert_eq!(theta_derivation_residual(&zero_d, &theta, &x, &y, &z), 0.0);
        }
        let a = random_skew_adjoint::<f64, _>(&mut rng, 3, 1.0);
        let plain = make_theta_derivation(theta.clone(), Op::commutator(a.clone()).unwrap()).unwrap();
        let u = Op::conjugation(random_unitary(&mut rng, 3)).unwrap();
        let twisted = make_theta_derivation(u.clone(), Op::commutator(a).unwrap()).unwrap();
        for [x, y, z] in triples(8, 3, 50) {
            let scale = 1f64.max(x.norm() * y.norm() * z.norm());
            assert!(theta_derivation_residual(&plain, &theta, &x, &y, &z) <= 1e-10 * scale);
            assert!(theta_derivation_residual(&twisted, &u, &x, &y, &z) <= 1e-10 * scale);
            assert!(jordan_theta_residual(&twisted, &u, &x) <= 1e-10 * 1f64.max(x.norm().powi(3)));
        }
    }

    #[test]
    fn theta_derivation_rejects_bad_preconditions() {
        // θ = 2·identity is not a triple homomorphism
        let theta = Op::scaled(cplx(2.0, 0.0), Op::identity(2));
        let err = make_theta_derivation(theta, Op::commutator(M::zeros(2)).unwrap()).unwrap_err();
        assert!(matches!(err, TripleError::Precondition { what: "triple homomorphism", .. }));
        // the identity map is not a triple derivation
        let err = make_theta_derivation(Op::identity(2), Op::identity(2)).unwrap_err();
        assert!(matches!(err, TripleError::Precondition { what: "triple derivation", .. }));
    }

    #[test]
    fn one_third_scaling_needs_inverse_sqrt_three() {
        // θ = ψ/√3 and D = θ/3 satisfy the θ-derivation identity: c = 3c³ at c = 3^{-1/2}
        let c = 3f64.powf(-0.5);
        assert!((c - 3.0 * c.powi(3)).abs() < 1e-15);
        let mut rng = rng_from_seed(10);
        let psi = Op::conjugation(random_unitary(&mut rng, 3)).unwrap();
        let theta = Op::scaled(Complex::new(c, 0.0), psi.clone());
        let d = Op::scaled(Complex::new(1.0 / 3.0, 0.0), theta.clone());
        // literal θ = ψ, D = ψ/3 does not
        let d_literal = Op::scaled(Complex::new(1.0 / 3.0, 0.0), psi.clone());
        for [x, y, z] in triples(11, 3, 30) {
            let scale = 1f64.max(x.norm() * y.norm() * z.norm());
            assert!(theta_derivation_residual(&d, &theta, &x, &y, &z) <= 1e-10 * scale);
            let lit = theta_derivation_residual(&d_literal, &psi, &x, &y, &z);
            assert!(lit > 1e-3 * tp(&x, &y, &z).norm());
        }
    }

    #[test]
    fn jordan_residual_is_bounded_by_three_variable_residual() {
        let d = Op::scaled(cplx(0.5, 0.1), Op::identity(2));
        let theta = Op::identity(2);
        for x in random_matrices::<f64>(12, 2, 10) {
            let r3 = theta_derivation_residual(&d, &theta, &x, &x, &x);
            assert_eq!(jordan_theta_residual(&d, &theta, &x), r3);
        }
        assert_eq!(jordan_theta_residual(&d, &theta, &M::zeros(2)), 0.0);
    }
}
