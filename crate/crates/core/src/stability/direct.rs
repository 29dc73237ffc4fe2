//! Direct-method iteration and recovery of the limiting linear map.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::control::Scheme;
use super::perturbation::PerturbedMap;
use super::StabilityError;
use crate::check::Check;
use crate::linalg::ComplexMatrix;
use crate::sampling::{derive_seed, random_matrices, stream};
use crate::scalar::Scalar;
use crate::triple::operator::basis;
use crate::triple::{tp, LinearOperator, MatrixMap};

#[derive(Clone, Debug, PartialEq)]
pub struct DirectOutcome<T> {
    pub value: ComplexMatrix<T>,
    pub l_used: usize,
    pub converged: bool,
    /// `‖A_{l+1}(x) − A_l(x)‖` for `l = 0, 1, …, l_used − 1`.
    pub differences: Vec<T>,
}

impl<T: Scalar> DirectOutcome<T> {
    /// Mean of the last `window` successive-difference ratios.
    pub fn rate_estimate(&self, window: usize) -> Option<T> {
        let ratios = successive_ratios(&self.differences);
        let tail = &ratios[ratios.len().saturating_sub(window)..];
        if tail.is_empty() {
            return None;
        }
        Some(tail.iter().copied().sum::<T>() / T::from_usize(tail.len()).unwrap())
    }
}

/// `seq[i+1] / seq[i]`, skipping zero denominators.
pub fn successive_ratios<T: Scalar>(seq: &[T]) -> Vec<T> {
    seq.windows(2)
        .filter(|w| w[0] > T::zero())
        .map(|w| w[1] / w[0])
        .collect()
}

/// Iterates `A_l(x)` until `‖A_{l+1} − A_l‖ ≤ tol·max(1, ‖A_l‖)` or `l = l_max`.
pub fn direct_method<T: Scalar>(
    f: &impl MatrixMap<T>,
    scheme: Scheme,
    x: &ComplexMatrix<T>,
    tol: T,
    l_max: usize,
) -> Result<DirectOutcome<T>, StabilityError> {
    if !(tol > T::zero()) {
        return Err(StabilityError::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let mut current = scheme.approximant(f, x, 0)?;
    let mut differences = Vec::new();
    for l in 0..l_max {
        let next = scheme.approximant(f, x, l + 1)?;
        let diff = next.distance(&current);
        differences.push(diff);
        let scale = T::one().max(current.norm());
        current = next;
        if diff <= tol * scale {
            return Ok(DirectOutcome {
                value: current,
                l_used: l + 1,
                converged: true,
                differences,
            });
        }
    }
    Ok(DirectOutcome {
        value: current,
        l_used: l_max,
        converged: false,
        differences,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOptions<T> {
    pub tol: T,
    pub l_max: usize,
    /// Number of random probes for the linearity certificate (at least 20).
    pub probes: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for RecoveryOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-9),
            l_max: 200,
            probes: 20,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Recovery<T> {
    pub operator: LinearOperator<T>,
    /// Levels used per basis element, in column-stacked basis order.
    pub basis_levels: Vec<usize>,
    /// Worst `‖D̂(x) − A(x)‖ / max(1, ‖x‖)` over the probes against `10·tol`.
    pub certification: Check<T>,
    /// Tolerance actually used inside the iteration.
    pub inner_tol: T,
}

/// Tolerance for individual iterations so that summing `n²` basis images
/// stays well inside the `10·tol` certificate: the geometric tail after the
/// stop is at most `diff · r/(1 − r)`.
fn inner_tolerance<T: Scalar>(f: &PerturbedMap<T>, scheme: Scheme, tol: T) -> T {
    let r = if f.amplitude() == T::zero() {
        T::zero()
    } else {
        scheme.convergence_rate(f.exponent())
    };
    let floor = T::epsilon() * T::lit(64.0);
    (tol * (T::one() - r) / T::lit(10.0)).max(floor)
}

/// Recovers the limiting map on the basis `E_jk` and certifies it against
/// fresh direct-method evaluations on random probes.
pub fn recover_linear_map<T: Scalar>(
    f: &PerturbedMap<T>,
    scheme: Scheme,
    opts: &RecoveryOptions<T>,
) -> Result<Recovery<T>, StabilityError> {
    scheme.check_power_gate(f.exponent())?;
    if opts.probes < 20 {
        return Err(StabilityError::InvalidParameter(format!(
            "linearity certificate needs at least 20 probes, got {}",
            opts.probes
        )));
    }
    let n = f.dim();
    let inner = inner_tolerance(f, scheme, opts.tol);
    let outcomes: Vec<Result<DirectOutcome<T>, StabilityError>> = basis::<T>(n)
        .par_iter()
        .map(|e| direct_method(f, scheme, e, inner, opts.l_max))
        .collect();
    let mut images = Vec::with_capacity(n * n);
    let mut basis_levels = Vec::with_capacity(n * n);
    for (index, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome?;
        if !outcome.converged {
            return Err(StabilityError::NotConverged { index, l_max: opts.l_max });
        }
        basis_levels.push(outcome.l_used);
        images.push(outcome.value);
    }
    let operator = LinearOperator::from_basis_images(n, &images);

    let probes = random_matrices::<T>(derive_seed(opts.seed, stream::CERTIFY), n, opts.probes);
    let residuals: Vec<Result<(T, T), StabilityError>> = probes
        .par_iter()
        .map(|x| {
            let direct = direct_method(f, scheme, x, inner, opts.l_max)?;
            let scale = T::one().max(x.norm());
            let r = if direct.converged {
                operator.apply(x).distance(&direct.value) / scale
            } else {
                T::infinity()
            };
            Ok((r, x.norm()))
        })
        .collect();
    let threshold = T::lit(10.0) * opts.tol;
    let mut worst = (T::zero(), T::zero());
    for r in residuals {
        let (res, norm) = r?;
        if res > worst.0 || res.is_nan() {
            worst = (res, norm);
        }
    }
    let certification = Check::new(worst.0, threshold);
    if !certification.passed() {
        return Err(StabilityError::Certification {
            residual: worst.0.to_f64_lossy(),
            threshold: threshold.to_f64_lossy(),
            probe_norm: worst.1.to_f64_lossy(),
        });
    }
    Ok(Recovery {
        operator,
        basis_levels,
        certification,
        inner_tol: inner,
    })
}

/// Scaled θ-derivation defect of `(f, h)` at level `l`.
///
/// Expanding schemes: `k^{-3l} ‖f(k^{3l}{xyz}) − {f(k^l x), h(k^l y), h(k^l z)} − …‖`;
/// contractive schemes: `k^{3l} ‖f({xyz}/k^{3l}) − {f(x/k^l), h(y/k^l), h(z/k^l)} − …‖`.
pub fn derivation_limit_residual<T: Scalar>(
    f: &impl MatrixMap<T>,
    h: &impl MatrixMap<T>,
    scheme: Scheme,
    x: &ComplexMatrix<T>,
    y: &ComplexMatrix<T>,
    z: &ComplexMatrix<T>,
    l: usize,
) -> Result<T, StabilityError> {
    let k: T = scheme.base();
    let s = k.powi(l as i32);
    let s3 = k.powi(3 * l as i32);
    let overflow = StabilityError::Overflow { level: l, scheme };
    if !s3.is_finite() || s3 == T::zero() {
        return Err(overflow);
    }
    let (arg_scale, arg_scale3, out_scale) = if scheme.is_contractive() {
        (s.recip(), s3.recip(), s3)
    } else {
        (s, s3, s3.recip())
    };
    let (xs, ys, zs) = (x.scale_real(arg_scale), y.scale_real(arg_scale), z.scale_real(arg_scale));
    let t = tp(x, y, z).scale_real(arg_scale3);
    if !(xs.is_finite() && ys.is_finite() && zs.is_finite() && t.is_finite()) {
        return Err(overflow);
    }
    let (fx, fy, fz) = (f.apply(&xs), f.apply(&ys), f.apply(&zs));
    let (hx, hy, hz) = (h.apply(&xs), h.apply(&ys), h.apply(&zs));
    let mut rhs = tp(&fx, &hy, &hz);
    rhs += &tp(&hx, &fy, &hz);
    rhs += &tp(&hx, &hy, &fz);
    let r = f.apply(&t).distance(&rhs) * out_scale;
    if r.is_finite() {
        Ok(r)
    } else {
        Err(overflow)
    }
}

/// `derivation_limit_residual` at every level in `levels`.
pub fn derivation_limit_sequence<T: Scalar>(
    f: &impl MatrixMap<T>,
    h: &impl MatrixMap<T>,
    scheme: Scheme,
    x: &ComplexMatrix<T>,
    y: &ComplexMatrix<T>,
    z: &ComplexMatrix<T>,
    levels: std::ops::RangeInclusive<usize>,
) -> Result<Vec<T>, StabilityError> {
    levels
        .map(|l| derivation_limit_residual(f, h, scheme, x, y, z, l))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{probe_set, random_skew_adjoint, random_unitary, rng_from_seed};
    use crate::stability::control::FunctionalForm;
    use crate::stability::perturbation::make_perturbation;
    use crate::triple::make_theta_derivation;

    type M = ComplexMatrix<f64>;
    type Op = LinearOperator<f64>;

    fn exact_pair(seed: u64, n: usize) -> (Op, Op) {
        let mut rng = rng_from_seed(seed);
        let theta = Op::conjugation(random_unitary(&mut rng, n)).unwrap();
        let d = Op::commutator(random_skew_adjoint(&mut rng, n, 1.0)).unwrap();
        (make_theta_derivation(theta.clone(), d).unwrap(), theta)
    }

    fn unit_probe(seed: u64, n: usize) -> M {
        probe_set::<f64>(seed, n, 1, 1.0, 1.0).remove(0)
    }

    #[test]
    fn exact_map_converges_immediately() {
        let (d, _) = exact_pair(1, 3);
        let x = unit_probe(2, 3);
        for scheme in Scheme::ALL {
            let out = direct_method(&d, scheme, &x, 1e-9, 200).unwrap();
            assert!(out.converged);
            assert_eq!(out.l_used, 1);
            assert!(out.value.approx_eq(&d.apply(&x), 1e-14));
        }
    }

    #[test]
    fn cauchy2_tail_matches_geometric_oracle() {
        let (d, _) = exact_pair(3, 2);
        let f = make_perturbation(d.clone(), 0.1, 0.5, FunctionalForm::Cauchy, 4).unwrap();
        let x = unit_probe(5, 2);
        let exact = d.apply(&x);
        let r = 2f64.powf(-0.5);
        for l in [10usize, 30, 50] {
            let a = Scheme::Cauchy2.approximant(&f, &x, l).unwrap();
            let oracle = f.amplitude() * r.powi(l as i32) / (1.0 - r);
            assert!(a.distance(&exact) <= oracle * (1.0 + 1e-9));
        }
        assert!(Scheme::Cauchy2.approximant(&f, &x, 50).unwrap().distance(&exact) < 1e-6);
    }

    #[test]
    fn successive_difference_ratios_approach_scheme_rate() {
        for (scheme, form, eps, p, norm) in [
            (Scheme::Cauchy2, FunctionalForm::Cauchy, 0.1, 0.5, 1.0),
            (Scheme::Cauchy2Contractive, FunctionalForm::Cauchy, 0.1, 2.0, 1.0),
            (Scheme::Jensen3, FunctionalForm::Jensen, 0.1, 0.5, 1.0),
            (Scheme::Jensen3Contractive, FunctionalForm::Jensen, 1.0, 4.0, 10.0),
        ] {
            let (d, _) = exact_pair(6, 3);
            let f = make_perturbation(d, eps, p, form, 7).unwrap();
            let x = probe_set::<f64>(8, 3, 1, norm, norm).remove(0);
            let out = direct_method(&f, scheme, &x, 1e-9, 200).unwrap();
            assert!(out.converged, "{scheme}");
            let rate = out.rate_estimate(10).unwrap();
            assert!((rate - scheme.convergence_rate(p)).abs() <= 0.05, "{scheme}: {rate}");
        }
    }

    #[test]
    fn contractive_jensen_rate_is_one_over_27() {
        let (d, _) = exact_pair(9, 2);
        let f = make_perturbation(d, 1.0, 4.0, FunctionalForm::Jensen, 10).unwrap();
        let x = probe_set::<f64>(11, 2, 1, 5.0, 5.0).remove(0);
        let out = direct_method(&f, Scheme::Jensen3Contractive, &x, 1e-9, 200).unwrap();
        for r in successive_ratios(&out.differences) {
            assert!((r - 1.0 / 27.0).abs() < 1e-6, "{r}");
        }
    }

    #[test]
    fn overflow_is_reported() {
        let (d, _) = exact_pair(12, 2);
        // rate 2^{-0.01}: the tail outlives the representable range of 2^l x
        let f = make_perturbation(d, 0.1, 0.99, FunctionalForm::Cauchy, 13).unwrap();
        let x = unit_probe(14, 2).scale_real(1e250);
        let err = direct_method(&f, Scheme::Cauchy2, &x, 1e-300, 2000).unwrap_err();
        assert!(matches!(err, StabilityError::Overflow { .. }));
        assert!(err.to_string().contains("reduce l_max"));
        assert!(direct_method(&f, Scheme::Cauchy2, &x, 0.0, 10).is_err());
    }

    #[test]
    fn recovery_of_exact_map_is_exact() {
        let (d, _) = exact_pair(15, 3);
        let f = make_perturbation(d.clone(), 0.0, 0.5, FunctionalForm::Cauchy, 16).unwrap();
        let rec = recover_linear_map(&f, Scheme::Cauchy2, &RecoveryOptions::default()).unwrap();
        assert!(rec.operator.max_coeff_diff(&d) <= 1e-12);
        assert!(rec.basis_levels.iter().all(|&l| l == 1));
    }

    #[test]
    fn recovery_matches_base_and_is_scheme_and_seed_independent() {
        let (d, _) = exact_pair(17, 2);
        let opts = RecoveryOptions::default();
        let fc = make_perturbation(d.clone(), 0.1, 0.5, FunctionalForm::Cauchy, 18).unwrap();
        let c2 = recover_linear_map(&fc, Scheme::Cauchy2, &opts).unwrap();
        assert!(c2.operator.max_coeff_diff(&d) <= 1e-6);
        assert!(c2.certification.passed());
        let fj = make_perturbation(d.clone(), 0.1, 0.5, FunctionalForm::Jensen, 18).unwrap();
        let j3 = recover_linear_map(&fj, Scheme::Jensen3, &opts).unwrap();
        assert!(j3.operator.max_coeff_diff(&c2.operator) <= 1e-6);
        let fc2 = make_perturbation(d.clone(), 0.1, 0.5, FunctionalForm::Cauchy, 99).unwrap();
        let other = recover_linear_map(&fc2, Scheme::Cauchy2, &opts).unwrap();
        assert!(other.operator.max_coeff_diff(&c2.operator) <= 1e-6);
    }

    #[test]
    fn recovery_rejects_gate_violations_and_few_probes() {
        let (d, _) = exact_pair(19, 2);
        let f = make_perturbation(d, 0.1, 2.0, FunctionalForm::Jensen, 20).unwrap();
        let err = recover_linear_map(&f, Scheme::Jensen3Contractive, &RecoveryOptions::default()).unwrap_err();
        assert!(matches!(err, StabilityError::Gate { .. }));
        let opts = RecoveryOptions {
            probes: 5,
            ..RecoveryOptions::default()
        };
        assert!(recover_linear_map(&f, Scheme::Cauchy2Contractive, &opts).is_err());
    }

    #[test]
    fn non_convergence_is_an_error() {
        let (d, _) = exact_pair(21, 2);
        let f = make_perturbation(d, 0.1, 0.5, FunctionalForm::Cauchy, 22).unwrap();
        let opts = RecoveryOptions {
            l_max: 3,
            ..RecoveryOptions::default()
        };
        let err = recover_linear_map(&f, Scheme::Cauchy2, &opts).unwrap_err();
        assert!(matches!(err, StabilityError::NotConverged { .. }));
    }

    #[test]
    fn derivation_limit_vanishes_for_exact_pair() {
        let (d, theta) = exact_pair(23, 2);
        let ms = probe_set::<f64>(24, 2, 3, 0.5, 2.0);
        for scheme in Scheme::ALL {
            for l in [0usize, 3, 8] {
                let r = derivation_limit_residual(&d, &theta, scheme, &ms[0], &ms[1], &ms[2], l).unwrap();
                assert!(r <= 1e-12, "{scheme} l={l}: {r}");
            }
        }
    }

    #[test]
    fn derivation_limit_decays_at_scheme_rate() {
        let (d, theta) = exact_pair(25, 2);
        let ms = probe_set::<f64>(26, 2, 3, 1.0, 1.0);
        let cases = [
            (Scheme::Cauchy2, FunctionalForm::Cauchy, 0.1, 0.5, 6..=30),
            (Scheme::Jensen3, FunctionalForm::Jensen, 0.1, 0.5, 6..=20),
            (Scheme::Jensen3Contractive, FunctionalForm::Jensen, 1.0, 4.0, 5..=9),
        ];
        for (scheme, form, eps, p, levels) in cases {
            let f = make_perturbation(d.clone(), eps, p, form, 27).unwrap();
            let h = make_perturbation(theta.clone(), eps, p, form, 28).unwrap();
            let seq = derivation_limit_sequence(&f, &h, scheme, &ms[0], &ms[1], &ms[2], levels).unwrap();
            assert!(seq.windows(2).all(|w| w[1] < w[0]), "{scheme}: {seq:?}");
            let rate = scheme.convergence_rate(p);
            for r in successive_ratios(&seq).iter().rev().take(5) {
                assert!((r - rate).abs() <= 0.05, "{scheme}: ratio {r} vs {rate}");
            }
        }
    }
}
