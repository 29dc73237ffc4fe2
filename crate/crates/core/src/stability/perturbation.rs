//! Perturbations `f = base + g` certified for the approximate Cauchy and
//! Jensen hypotheses.
//!
//! `g(x) = c‖x‖^p s(x) W` with a seeded unit-norm direction `W` and the
//! bounded phase `s(x) = sin(α + β Re tr(x)/‖x‖)`. Since `|s| ≤ 1`, the
//! triangle inequality gives the hypothesis bound for the amplitudes below,
//! and since `s` is invariant under positive scaling, `g(kx) = k^p g(x)` for
//! `k > 0`, which makes the approximant differences exactly geometric.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::control::{pow_norm, ControlFunction, FunctionalForm};
use super::StabilityError;
use crate::linalg::ComplexMatrix;
use crate::sampling::{random_matrix, rng_from_seed};
use crate::scalar::Scalar;
use crate::triple::{tp, LinearOperator, MatrixMap};

#[derive(Clone, Debug)]
pub struct PerturbedMap<T> {
    base: LinearOperator<T>,
    amplitude: T,
    exponent: T,
    seed: u64,
    form: FunctionalForm,
    direction: ComplexMatrix<T>,
    alpha: T,
    beta: T,
}

/// `K_p = max(1, 2^{p−1})`, so that `‖x + y‖^p ≤ K_p(‖x‖^p + ‖y‖^p)`.
fn k_p<T: Scalar>(p: T) -> T {
    T::one().max(T::lit(2.0).powf(p - T::one()))
}

/// Largest amplitude for which the triangle-inequality certificate holds.
pub fn certified_amplitude<T: Scalar>(eps: T, p: T, form: FunctionalForm) -> T {
    match form {
        FunctionalForm::Cauchy => eps / (k_p(p) + T::one()),
        FunctionalForm::Jensen => eps / (T::lit(2.0).powf(T::one() - p) * k_p(p) + T::one()),
    }
}

/// `f = base + g` with `‖f(μx + y) − μf(x) − f(y)‖ ≤ ε(‖x‖^p + ‖y‖^p)`
/// (Cauchy form) or the Jensen analogue.
pub fn make_perturbation<T: Scalar>(
    base: LinearOperator<T>,
    eps: T,
    p: T,
    form: FunctionalForm,
    seed: u64,
) -> Result<PerturbedMap<T>, StabilityError> {
    if !(eps >= T::zero() && eps.is_finite() && p >= T::zero() && p.is_finite()) {
        return Err(StabilityError::InvalidParameter(format!(
            "perturbation needs finite ε ≥ 0 and p ≥ 0, got ε = {eps}, p = {p}"
        )));
    }
    let n = base.dim();
    let mut rng = rng_from_seed(seed);
    let direction = loop {
        let w: ComplexMatrix<T> = random_matrix(&mut rng, n);
        let nw = w.norm();
        if nw > T::lit(1e-3) {
            break w.scale_real(nw.recip());
        }
    };
    let alpha = T::lit(rng.gen_range(1.0..=2.0));
    let beta = T::lit(rng.gen_range(1.0..=2.0));
    Ok(PerturbedMap {
        base,
        amplitude: certified_amplitude(eps, p, form),
        exponent: p,
        seed,
        form,
        direction,
        alpha,
        beta,
    })
}

impl<T: Scalar> PerturbedMap<T> {
    pub fn base(&self) -> &LinearOperator<T> {
        &self.base
    }

    pub fn amplitude(&self) -> T {
        self.amplitude
    }

    pub fn exponent(&self) -> T {
        self.exponent
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn form(&self) -> FunctionalForm {
        self.form
    }

    pub fn direction(&self) -> &ComplexMatrix<T> {
        &self.direction
    }

    /// The perturbation `g(x)` alone.
    pub fn noise(&self, x: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let n = x.dim();
        if self.amplitude == T::zero() {
            return ComplexMatrix::zeros(n);
        }
        let nx = x.norm();
        if nx == T::zero() {
            return ComplexMatrix::zeros(n);
        }
        let phase = (self.alpha + self.beta * x.trace().re / nx).sin();
        self.direction.scale_real(self.amplitude * pow_norm(nx, self.exponent) * phase)
    }
}

impl<T: Scalar> MatrixMap<T> for PerturbedMap<T> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply(&self, x: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let mut out = self.base.apply(x);
        if self.amplitude != T::zero() {
            out += &self.noise(x);
        }
        out
    }
}

/// Largest `LHS/φ` over samples with `φ > 0`, and the largest bare `LHS` where `φ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioStat<T> {
    pub max_ratio: T,
    pub max_abs_residual_at_zero_control: T,
    pub samples: usize,
}

impl<T: Scalar> RatioStat<T> {
    fn empty() -> Self {
        Self {
            max_ratio: T::zero(),
            max_abs_residual_at_zero_control: T::zero(),
            samples: 0,
        }
    }

    fn from_pair(lhs: T, phi: T) -> Self {
        let mut s = Self::empty();
        s.samples = 1;
        if phi > T::zero() {
            s.max_ratio = lhs / phi;
        } else {
            s.max_abs_residual_at_zero_control = lhs;
        }
        s
    }

    fn merge(self, other: Self) -> Self {
        let max = |a: T, b: T| if b > a || b.is_nan() { b } else { a };
        Self {
            max_ratio: max(self.max_ratio, other.max_ratio),
            max_abs_residual_at_zero_control: max(
                self.max_abs_residual_at_zero_control,
                other.max_abs_residual_at_zero_control,
            ),
            samples: self.samples + other.samples,
        }
    }
}

/// Hypothesis ratios for `f`, for `h`, and the empirical triple-product ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport<T> {
    pub form: FunctionalForm,
    pub f: RatioStat<T>,
    pub h: RatioStat<T>,
    pub triple: RatioStat<T>,
}

impl<T: Scalar> HypothesisReport<T> {
    /// The functional-equation hypotheses hold on the sample (ratio ≤ 1 up to `slack`,
    /// absolute residual ≤ `abs_tol` where the control vanishes). The triple ratio is not judged.
    pub fn passed(&self, slack: T, abs_tol: T) -> bool {
        [self.f, self.h]
            .iter()
            .all(|s| s.max_ratio <= T::one() + slack && s.max_abs_residual_at_zero_control <= abs_tol)
    }
}

fn functional_lhs<T: Scalar>(
    f: &impl MatrixMap<T>,
    form: FunctionalForm,
    mu: Complex<T>,
    x: &ComplexMatrix<T>,
    y: &ComplexMatrix<T>,
) -> T {
    let mut arg = x.scale(mu);
    arg += y;
    let lhs = match form {
        FunctionalForm::Cauchy => f.apply(&arg),
        FunctionalForm::Jensen => f.apply(&arg.scale_real(T::lit(0.5))).scale_real(T::lit(2.0)),
    };
    let mut rhs = f.apply(x).scale(mu);
    rhs += &f.apply(y);
    lhs.distance(&rhs)
}

fn triple_lhs<T: Scalar>(
    f: &impl MatrixMap<T>,
    h: &impl MatrixMap<T>,
    x: &ComplexMatrix<T>,
    y: &ComplexMatrix<T>,
    z: &ComplexMatrix<T>,
) -> T {
    let (fx, fy, fz) = (f.apply(x), f.apply(y), f.apply(z));
    let (hx, hy, hz) = (h.apply(x), h.apply(y), h.apply(z));
    let mut rhs = tp(&fx, &hy, &hz);
    rhs += &tp(&hx, &fy, &hz);
    rhs += &tp(&hx, &hy, &fz);
    f.apply(&tp(x, y, z)).distance(&rhs)
}

/// Samples the hypotheses on pairs `(x_i, x_{i+1})` and `(x_i, 0)` for every μ,
/// and the triple-product hypothesis on cyclic triples `(x_i, x_{i+1}, x_{i+2})`.
pub fn verify_hypotheses<T: Scalar>(
    f: &PerturbedMap<T>,
    h: &PerturbedMap<T>,
    phi: &ControlFunction<T>,
    form: FunctionalForm,
    probes: &[ComplexMatrix<T>],
    mus: &[Complex<T>],
) -> Result<HypothesisReport<T>, StabilityError> {
    if probes.is_empty() || mus.is_empty() {
        return Err(StabilityError::InvalidParameter("hypothesis check needs probes and μ samples".into()));
    }
    if let Some(mu) = mus.iter().find(|m| (m.norm() - T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(8.0))) {
        return Err(StabilityError::InvalidParameter(format!("μ = {mu} is not unimodular")));
    }
    let m = probes.len();
    let zero = ComplexMatrix::zeros(probes[0].dim());
    let per_probe: Vec<(RatioStat<T>, RatioStat<T>, RatioStat<T>)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let x = &probes[i];
            let mut sf = RatioStat::empty();
            let mut sh = RatioStat::empty();
            for y in [&probes[(i + 1) % m], &zero] {
                let control = phi.eval(x, y, &zero);
                for &mu in mus {
                    sf = sf.merge(RatioStat::from_pair(functional_lhs(f, form, mu, x, y), control));
                    sh = sh.merge(RatioStat::from_pair(functional_lhs(h, form, mu, x, y), control));
                }
            }
            let (y, z) = (&probes[(i + 1) % m], &probes[(i + 2) % m]);
            let st = RatioStat::from_pair(triple_lhs(f, h, x, y, z), phi.eval(x, y, z));
            (sf, sh, st)
        })
        .collect();
    let (sf, sh, st) = per_probe.into_iter().fold(
        (RatioStat::empty(), RatioStat::empty(), RatioStat::empty()),
        |(a, b, c), (x, y, z)| (a.merge(x), b.merge(y), c.merge(z)),
    );
    Ok(HypothesisReport {
        form,
        f: sf,
        h: sh,
        triple: st,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{probe_set, random_skew_adjoint, random_unitary, unimodular_samples};
    use crate::triple::make_theta_derivation;

    type M = ComplexMatrix<f64>;
    type Op = LinearOperator<f64>;

    fn exact_pair(seed: u64, n: usize) -> (Op, Op) {
        let mut rng = rng_from_seed(seed);
        let theta = Op::conjugation(random_unitary(&mut rng, n)).unwrap();
        let d = Op::commutator(random_skew_adjoint(&mut rng, n, 1.0)).unwrap();
        (make_theta_derivation(theta.clone(), d).unwrap(), theta)
    }

    #[test]
    fn zero_eps_is_exactly_the_base() {
        let (d, _) = exact_pair(1, 3);
        let f = make_perturbation(d.clone(), 0.0, 0.5, FunctionalForm::Cauchy, 9).unwrap();
        for x in probe_set::<f64>(2, 3, 10, 1e-2, 10.0) {
            assert_eq!(f.apply(&x), d.apply(&x));
        }
    }

    #[test]
    fn origin_maps_to_zero() {
        let (d, _) = exact_pair(3, 2);
        for seed in 0..10 {
            for p in [0.0, 0.5, 2.0, 4.0] {
                let f = make_perturbation(d.clone(), 1.0, p, FunctionalForm::Jensen, seed).unwrap();
                assert!(f.apply(&M::zeros(2)).is_zero());
            }
        }
    }

    #[test]
    fn noise_is_bounded_and_positively_homogeneous() {
        let (d, _) = exact_pair(4, 3);
        let f = make_perturbation(d, 0.3, 0.5, FunctionalForm::Cauchy, 5).unwrap();
        assert!((f.direction().norm() - 1.0).abs() < 1e-12);
        for x in probe_set::<f64>(6, 3, 20, 1e-2, 10.0) {
            let g = f.noise(&x);
            assert!(g.norm() <= f.amplitude() * x.norm().sqrt() * (1.0 + 1e-12));
            let g4 = f.noise(&x.scale_real(4.0));
            assert!(g4.approx_eq(&g.scale_real(2.0), 1e-11));
        }
    }

    #[test]
    fn amplitudes_follow_the_triangle_certificate() {
        assert!((certified_amplitude(0.1f64, 0.5, FunctionalForm::Cauchy) - 0.05).abs() < 1e-16);
        // p = 4: K = 8, 2^{-3}·8 + 1 = 2
        assert!((certified_amplitude(1.0f64, 4.0, FunctionalForm::Jensen) - 0.5).abs() < 1e-16);
        assert!((certified_amplitude(1.0f64, 4.0, FunctionalForm::Cauchy) - 1.0 / 9.0).abs() < 1e-16);
    }

    #[test]
    fn cauchy_hypothesis_holds_on_ten_thousand_samples() {
        let (d, theta) = exact_pair(7, 2);
        let f = make_perturbation(d, 0.1, 0.5, FunctionalForm::Cauchy, 8).unwrap();
        let h = make_perturbation(theta, 0.1, 0.5, FunctionalForm::Cauchy, 9).unwrap();
        let phi = ControlFunction::power(0.1, 0.5).unwrap();
        let probes = probe_set::<f64>(10, 2, 50, 1e-2, 10.0);
        let mus = unimodular_samples::<f64>(11, 100);
        let r = verify_hypotheses(&f, &h, &phi, FunctionalForm::Cauchy, &probes, &mus).unwrap();
        assert_eq!(r.f.samples, 50 * 2 * 100);
        assert!(r.f.max_ratio <= 1.0 && r.h.max_ratio <= 1.0, "{r:?}");
        assert!(r.f.max_ratio > 0.1);
        assert!(r.triple.max_ratio.is_finite());
    }

    #[test]
    fn jensen_hypothesis_holds_for_large_exponent() {
        let (d, theta) = exact_pair(12, 3);
        let f = make_perturbation(d, 1.0, 4.0, FunctionalForm::Jensen, 13).unwrap();
        let h = make_perturbation(theta, 1.0, 4.0, FunctionalForm::Jensen, 14).unwrap();
        let phi = ControlFunction::power(1.0, 4.0).unwrap();
        let probes = probe_set::<f64>(15, 3, 40, 1e-2, 10.0);
        let mus = unimodular_samples::<f64>(16, 25);
        let r = verify_hypotheses(&f, &h, &phi, FunctionalForm::Jensen, &probes, &mus).unwrap();
        assert!(r.passed(1e-9, 1e-10), "{r:?}");
    }

    #[test]
    fn exact_pair_has_vanishing_residuals() {
        let (d, theta) = exact_pair(17, 2);
        let f = make_perturbation(d, 0.0, 0.5, FunctionalForm::Cauchy, 1).unwrap();
        let h = make_perturbation(theta, 0.0, 0.5, FunctionalForm::Cauchy, 2).unwrap();
        let phi = ControlFunction::power(0.0, 0.5).unwrap();
        let probes = probe_set::<f64>(18, 2, 10, 1e-2, 1.0);
        let mus = unimodular_samples::<f64>(19, 5);
        let r = verify_hypotheses(&f, &h, &phi, FunctionalForm::Cauchy, &probes, &mus).unwrap();
        assert!(r.f.max_abs_residual_at_zero_control <= 1e-10);
        assert!(r.h.max_abs_residual_at_zero_control <= 1e-10);
        assert!(r.triple.max_abs_residual_at_zero_control <= 1e-10);
    }

    #[test]
    fn mu_one_y_zero_is_trivial() {
        let (d, _) = exact_pair(20, 2);
        let f = make_perturbation(d, 0.5, 0.5, FunctionalForm::Cauchy, 3).unwrap();
        let x = probe_set::<f64>(21, 2, 1, 1.0, 1.0).remove(0);
        let lhs = functional_lhs(&f, FunctionalForm::Cauchy, Complex::new(1.0, 0.0), &x, &M::zeros(2));
        assert_eq!(lhs, 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (d, _) = exact_pair(22, 2);
        assert!(make_perturbation(d.clone(), -0.1, 0.5, FunctionalForm::Cauchy, 0).is_err());
        let f = make_perturbation(d, 0.1, 0.5, FunctionalForm::Cauchy, 0).unwrap();
        let phi = ControlFunction::power(0.1, 0.5).unwrap();
        let probes = probe_set::<f64>(1, 2, 3, 0.1, 1.0);
        let bad_mu = [Complex::new(2.0, 0.0)];
        assert!(verify_hypotheses(&f, &f, &phi, FunctionalForm::Cauchy, &probes, &bad_mu).is_err());
        assert!(verify_hypotheses(&f, &f, &phi, FunctionalForm::Cauchy, &[], &[Complex::new(1.0, 0.0)]).is_err());
    }
}
