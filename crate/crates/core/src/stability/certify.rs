//! Certificates for the recovered maps: the stability bound per probe and
//! the θ-derivation identity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::control::{hyers_bound, ControlFunction, Scheme};
use super::StabilityError;
use crate::check::{relative_scale, Check};
use crate::linalg::ComplexMatrix;
use crate::scalar::Scalar;
use crate::triple::{theta_derivation_residual, MatrixMap};

/// Summation tolerance used for bound series of custom control functions.
const BOUND_SERIES_TOL: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow<T> {
    pub norm_x: T,
    pub bound: T,
    pub error: T,
    pub ratio: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport<T> {
    pub max_ratio: T,
    pub rows: Vec<ProbeRow<T>>,
}

impl<T: Scalar> BoundReport<T> {
    /// The theorem predicts `max_ratio ≤ 1`; `slack` absorbs rounding.
    pub fn passed(&self, slack: T) -> bool {
        self.max_ratio <= T::one() + slack
    }
}

/// `‖f(x) − D̂(x)‖ / hyers_bound(φ, scheme, x)` on every probe.
///
/// Probes where the bound vanishes are skipped if the error vanishes too;
/// a nonzero error against a zero bound yields an infinite ratio.
pub fn verify_stability_bound<T: Scalar>(
    f: &impl MatrixMap<T>,
    d_hat: &impl MatrixMap<T>,
    phi: &ControlFunction<T>,
    scheme: Scheme,
    probes: &[ComplexMatrix<T>],
) -> Result<BoundReport<T>, StabilityError> {
    if probes.is_empty() {
        return Err(StabilityError::InvalidParameter("bound check needs at least one probe".into()));
    }
    let rows: Vec<Result<Option<ProbeRow<T>>, StabilityError>> = probes
        .par_iter()
        .map(|x| {
            let bound = hyers_bound(phi, scheme, x, T::lit(BOUND_SERIES_TOL))?;
            let error = f.apply(x).distance(&d_hat.apply(x));
            let ratio = if bound > T::zero() {
                error / bound
            } else if error == T::zero() {
                return Ok(None);
            } else {
                T::infinity()
            };
            Ok(Some(ProbeRow {
                norm_x: x.norm(),
                bound,
                error,
                ratio,
            }))
        })
        .collect();
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        if let Some(r) = row? {
            out.push(r);
        }
    }
    let max_ratio = out
        .iter()
        .map(|r| r.ratio)
        .fold(T::zero(), |a, b| if b > a || b.is_nan() { b } else { a });
    Ok(BoundReport { max_ratio, rows: out })
}

/// Cyclic triples `(x_i, x_{i+1}, x_{i+2})`, one per probe.
pub fn probe_triples<T: Scalar>(probes: &[ComplexMatrix<T>]) -> Vec<[ComplexMatrix<T>; 3]> {
    let m = probes.len();
    (0..m)
        .map(|i| [probes[i].clone(), probes[(i + 1) % m].clone(), probes[(i + 2) % m].clone()])
        .collect()
}

/// Worst θ-derivation residual of `(D̂, θ̂)` normalized by `max(1, ‖x‖‖y‖‖z‖)`.
pub fn certify_theta_derivation<T: Scalar>(
    d_hat: &impl MatrixMap<T>,
    theta_hat: &impl MatrixMap<T>,
    triples: &[[ComplexMatrix<T>; 3]],
    tau: T,
) -> Result<Check<T>, StabilityError> {
    if triples.is_empty() {
        return Err(StabilityError::InvalidParameter("θ-derivation certificate needs probe triples".into()));
    }
    let residuals: Vec<T> = triples
        .par_iter()
        .map(|[x, y, z]| {
            theta_derivation_residual(d_hat, theta_hat, x, y, z) / relative_scale(&[x.norm(), y.norm(), z.norm()])
        })
        .collect();
    let worst = residuals
        .into_iter()
        .fold(T::zero(), |a, b| if b > a || b.is_nan() { b } else { a });
    Ok(Check::new(worst, tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{probe_set, random_matrices, random_skew_adjoint, random_unitary, rng_from_seed};
    use crate::stability::control::FunctionalForm;
    use crate::stability::direct::{recover_linear_map, RecoveryOptions};
    use crate::stability::perturbation::make_perturbation;
    use crate::triple::{make_theta_derivation, LinearOperator};

    type Op = LinearOperator<f64>;

    fn exact_pair(seed: u64, n: usize) -> (Op, Op) {
        let mut rng = rng_from_seed(seed);
        let theta = Op::conjugation(random_unitary(&mut rng, n)).unwrap();
        let d = Op::commutator(random_skew_adjoint(&mut rng, n, 1.0)).unwrap();
        (make_theta_derivation(theta.clone(), d).unwrap(), theta)
    }

    #[test]
    fn zero_eps_gives_zero_ratio() {
        let (d, _) = exact_pair(1, 2);
        let f = make_perturbation(d.clone(), 0.0, 0.5, FunctionalForm::Cauchy, 2).unwrap();
        let phi = ControlFunction::power(0.1, 0.5).unwrap();
        let probes = probe_set::<f64>(3, 2, 10, 1e-2, 10.0);
        let r = verify_stability_bound(&f, &d, &phi, Scheme::Cauchy2, &probes).unwrap();
        assert_eq!(r.max_ratio, 0.0);
        assert_eq!(r.rows.len(), 10);
    }

    #[test]
    fn bound_holds_for_each_scheme() {
        let (d, _) = exact_pair(4, 2);
        let probes = probe_set::<f64>(5, 2, 100, 1e-2, 10.0);
        for (scheme, form, eps, p) in [
            (Scheme::Cauchy2, FunctionalForm::Cauchy, 0.1, 0.5),
            (Scheme::Cauchy2Contractive, FunctionalForm::Cauchy, 0.1, 2.0),
            (Scheme::Jensen3, FunctionalForm::Jensen, 0.1, 0.5),
            (Scheme::Jensen3Contractive, FunctionalForm::Jensen, 1.0, 4.0),
        ] {
            let f = make_perturbation(d.clone(), eps, p, form, 6).unwrap();
            let rec = recover_linear_map(&f, scheme, &RecoveryOptions::default()).unwrap();
            let phi = ControlFunction::power(eps, p).unwrap();
            let r = verify_stability_bound(&f, &rec.operator, &phi, scheme, &probes).unwrap();
            assert!(r.passed(1e-9), "{scheme}: {}", r.max_ratio);
            assert!(r.max_ratio > 0.0);
        }
    }

    #[test]
    fn zero_bound_with_error_is_infinite() {
        let (d, _) = exact_pair(7, 2);
        let phi = ControlFunction::power(0.0, 0.5).unwrap();
        let probes = random_matrices::<f64>(8, 2, 3);
        let r = verify_stability_bound(&d, &Op::zero(2), &phi, Scheme::Cauchy2, &probes).unwrap();
        assert!(r.max_ratio.is_infinite());
        assert!(verify_stability_bound(&d, &d, &phi, Scheme::Cauchy2, &[]).is_err());
    }

    #[test]
    fn theta_certificate_for_exact_and_wrong_pairs() {
        let (d, theta) = exact_pair(9, 3);
        let triples = probe_triples(&probe_set::<f64>(10, 3, 30, 1e-2, 10.0));
        assert!(certify_theta_derivation(&d, &theta, &triples, 1e-10).unwrap().passed());
        let wrong = Op::identity(3);
        assert!(!certify_theta_derivation(&d, &wrong, &triples, 1e-6).unwrap().passed());
        assert!(certify_theta_derivation(&d, &theta, &[], 1e-6).is_err());
    }

    #[test]
    fn probe_triples_are_cyclic() {
        let probes = random_matrices::<f64>(11, 2, 4);
        let t = probe_triples(&probes);
        assert_eq!(t.len(), 4);
        assert_eq!(t[3][1], probes[0]);
        assert_eq!(t[3][2], probes[1]);
    }
}
