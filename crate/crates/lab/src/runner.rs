//! Scenario runners behind the `axioms`, `recover` and `bounds` subcommands.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use triple_stab_core::check::relative_scale;
use triple_stab_core::sampling::{
    derive_seed, probe_set, random_matrices, stream, unimodular_grid, unimodular_samples,
};
use triple_stab_core::stability::{
    certify_theta_derivation, complex_homogeneity_via_decomposition, corollary_constant, derivation_limit_residual,
    direct_method, hyers_bound_with, make_perturbation, probe_triples, recover_linear_map, successive_ratios,
    verify_hypotheses, verify_s1_homogeneity, verify_stability_bound, ControlFunction, RecoveryOptions, Scheme,
    Summation, UnimodularScalar,
};
use triple_stab_core::triple::{
    check_commutativity, check_jordan_identity, check_l_positive, check_norm_identity, product_agreement,
};
use triple_stab_core::{Check, Matrix};

use crate::config::ExperimentConfig;
use crate::report::{
    AxiomSection, CheckEntry, ConvergenceSection, DerivationLimitSection, HomogeneityEntry, RecoverySection,
    StabilityReport,
};

/// Thresholds of the axiom suite.
pub mod tolerances {
    pub const COMMUTATIVITY: f64 = 1e-13;
    pub const JORDAN_IDENTITY: f64 = 1e-10;
    pub const L_POSITIVE: f64 = 1e-10;
    pub const NORM_IDENTITY: f64 = 1e-8;
    pub const PRODUCT_AGREEMENT: f64 = 1e-12;
    /// Rounding slack on ratios the theory bounds by 1.
    pub const RATIO_SLACK: f64 = 1e-9;
    /// Allowed gap between an empirical ratio and the predicted rate.
    pub const RATE_WINDOW: f64 = 0.05;
    /// Number of trailing ratios the rate checks look at.
    pub const RATE_RATIOS: usize = 10;
    /// Absolute residual allowed where the control function vanishes.
    pub const ZERO_CONTROL: f64 = 1e-10;
    /// Closed form vs series for the corollary constants.
    pub const CONSTANT_AGREEMENT: f64 = 1e-12;
}

/// Multiple of `tol` allowed for recovery error and the linearity certificates.
const RECOVERY_FACTOR: f64 = 1e3;
/// First level of the derivation-limit sequence and the maximum number of levels.
const DERIVATION_FIRST_LEVEL: usize = 6;
const DERIVATION_MAX_LEVELS: usize = 40;
/// Residuals below this multiple of `max(1, ‖x‖‖y‖‖z‖)` are rounding noise.
const DERIVATION_FLOOR: f64 = 1e-12;
/// Norm of the probes used for the rate measurements.
const RATE_PROBE_NORM: f64 = 3.0;

fn worst(checks: impl IntoIterator<Item = Check<f64>>, threshold: f64) -> Check<f64> {
    checks.into_iter().fold(Check::new(0.0, threshold), Check::worst)
}

/// Axiom residuals over explicit `(a, b, x, y, z)` samples.
pub fn axiom_suite_on(dim: usize, samples: &[[Matrix; 5]]) -> AxiomSection {
    use tolerances::*;
    let per_sample: Vec<[Check<f64>; 6]> = samples
        .par_iter()
        .map(|[a, b, x, y, z]| {
            let pos = check_l_positive(a, &[b.clone(), x.clone(), y.clone(), z.clone()], L_POSITIVE)
                .expect("samples share one dimension");
            [
                check_commutativity(x, y, z, COMMUTATIVITY),
                check_jordan_identity(a, b, x, y, z, JORDAN_IDENTITY),
                Check::new(pos.self_adjoint_violation, L_POSITIVE),
                Check::new(pos.positivity_violation, L_POSITIVE),
                check_norm_identity(x, NORM_IDENTITY),
                product_agreement(x, y, z, PRODUCT_AGREEMENT).expect("samples share one dimension"),
            ]
        })
        .collect();
    let col = |k: usize, t: f64| worst(per_sample.iter().map(|c| c[k]), t);
    AxiomSection {
        dim,
        samples: samples.len(),
        commutativity: col(0, COMMUTATIVITY),
        jordan_identity: col(1, JORDAN_IDENTITY),
        l_self_adjoint: col(2, L_POSITIVE),
        l_positivity: col(3, L_POSITIVE),
        norm_identity: col(4, NORM_IDENTITY),
        product_agreement: col(5, PRODUCT_AGREEMENT),
    }
}

/// Axiom residuals on `cfg.samples` seeded samples in dimension `cfg.dim`.
pub fn run_axiom_suite(cfg: &ExperimentConfig) -> AxiomSection {
    let ms = random_matrices::<f64>(derive_seed(cfg.seed, stream::AXIOMS), cfg.dim, 5 * cfg.samples);
    let samples: Vec<[Matrix; 5]> = ms
        .chunks(5)
        .map(|c| [c[0].clone(), c[1].clone(), c[2].clone(), c[3].clone(), c[4].clone()])
        .collect();
    axiom_suite_on(cfg.dim, &samples)
}

fn axiom_checks(s: &AxiomSection) -> Vec<CheckEntry> {
    vec![
        CheckEntry::new("axiom_commutativity", s.commutativity),
        CheckEntry::new("axiom_jordan_identity", s.jordan_identity),
        CheckEntry::new("axiom_l_self_adjoint", s.l_self_adjoint),
        CheckEntry::new("axiom_l_positivity", s.l_positivity),
        CheckEntry::new("axiom_norm_identity", s.norm_identity),
        CheckEntry::new("axiom_product_agreement", s.product_agreement),
    ]
}

struct Stopwatch {
    enabled: bool,
    start: Instant,
    laps: BTreeMap<String, f64>,
}

impl Stopwatch {
    fn new(enabled: bool) -> Self {
        Self {
            enabled,
            start: Instant::now(),
            laps: BTreeMap::new(),
        }
    }

    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.laps.insert(name.to_string(), (now - self.start).as_secs_f64());
        self.start = now;
    }

    fn finish(self) -> Option<BTreeMap<String, f64>> {
        self.enabled.then_some(self.laps)
    }
}

/// Report for the `axioms` subcommand.
pub fn run_axioms(cfg: &ExperimentConfig, timings: bool) -> StabilityReport {
    let mut watch = Stopwatch::new(timings);
    let mut report = StabilityReport::new("axioms", cfg.clone());
    let section = run_axiom_suite(cfg);
    watch.lap("axioms");
    report.checks = axiom_checks(&section);
    report.axioms = Some(section);
    report.timings = watch.finish();
    report
}

/// End-to-end recovery pipeline for the `recover` subcommand.
///
/// A failing stage is recorded in `errors`; sections computed before it are kept.
pub fn run_recovery(cfg: &ExperimentConfig, timings: bool) -> StabilityReport {
    let mut report = StabilityReport::new("recover", cfg.clone());
    let mut watch = Stopwatch::new(timings);
    if let Err(e) = recovery_pipeline(cfg, &mut report, &mut watch) {
        report.errors.push(e);
    }
    report.timings = watch.finish();
    report
}

fn recovery_pipeline(cfg: &ExperimentConfig, report: &mut StabilityReport, watch: &mut Stopwatch) -> Result<(), String> {
    use tolerances::*;
    let s = |e: &dyn std::fmt::Display| e.to_string();
    cfg.validate().map_err(|e| s(&e))?;
    let n = cfg.dim;
    let scheme = cfg.scheme;
    let form = scheme.form();
    let rate = scheme.convergence_rate(cfg.p);
    let tau = RECOVERY_FACTOR * cfg.tol;

    let (d, theta) = cfg.exact_pair().map_err(|e| s(&e))?;
    let f = make_perturbation(d.clone(), cfg.eps, cfg.p, form, derive_seed(cfg.seed, stream::PERTURB_F)).map_err(|e| s(&e))?;
    let h = make_perturbation(theta.clone(), cfg.eps, cfg.p, form, derive_seed(cfg.seed, stream::PERTURB_H))
        .map_err(|e| s(&e))?;
    let phi = ControlFunction::power(cfg.eps, cfg.p).map_err(|e| s(&e))?;
    let probes = probe_set::<f64>(derive_seed(cfg.seed, stream::PROBES), n, cfg.probe_count, 1e-2, 10.0);
    let section = report.recovery.insert(RecoverySection {
        hypotheses: None,
        recovery_error_d: None,
        recovery_error_theta: None,
        basis_levels_d: Vec::new(),
        basis_levels_theta: Vec::new(),
        corollary_constant: corollary_constant(scheme, cfg.p).map_err(|e| s(&e))?,
        bound: None,
        convergence: None,
        s1_homogeneity: None,
        complex_homogeneity: Vec::new(),
        theta_derivation: None,
        derivation_limit: None,
    });
    let checks = &mut report.checks;

    let mus = unimodular_samples::<f64>(derive_seed(cfg.seed, stream::MU), cfg.mu_count);
    let hyp = verify_hypotheses(&f, &h, &phi, form, &probes, &mus).map_err(|e| s(&e))?;
    for (name, stat) in [("f", hyp.f), ("h", hyp.h)] {
        checks.push(CheckEntry::new(
            format!("hypothesis_{name}_ratio"),
            Check::new(stat.max_ratio, 1.0 + RATIO_SLACK),
        ));
        checks.push(CheckEntry::new(
            format!("hypothesis_{name}_zero_control"),
            Check::new(stat.max_abs_residual_at_zero_control, ZERO_CONTROL),
        ));
    }
    section.hypotheses = Some(hyp);
    watch.lap("hypotheses");

    let opts = RecoveryOptions {
        tol: cfg.tol,
        l_max: cfg.l_max,
        probes: cfg.certify_probes,
        seed: cfg.seed,
    };
    let rec_d = recover_linear_map(&f, scheme, &opts).map_err(|e| format!("recovering D: {e}"))?;
    let rec_theta = recover_linear_map(&h, scheme, &opts).map_err(|e| format!("recovering θ: {e}"))?;
    watch.lap("recovery");
    let (d_hat, theta_hat) = (rec_d.operator, rec_theta.operator);
    let err_d = d_hat.max_coeff_diff(&d);
    let err_theta = theta_hat.max_coeff_diff(&theta);
    section.recovery_error_d = Some(err_d);
    section.recovery_error_theta = Some(err_theta);
    section.basis_levels_d = rec_d.basis_levels;
    section.basis_levels_theta = rec_theta.basis_levels;
    checks.push(CheckEntry::new("linearity_certificate_d", rec_d.certification));
    checks.push(CheckEntry::new("linearity_certificate_theta", rec_theta.certification));
    checks.push(CheckEntry::new("recovery_error_d", Check::new(err_d, tau)));
    checks.push(CheckEntry::new("recovery_error_theta", Check::new(err_theta, tau)));

    let bound = verify_stability_bound(&f, &d_hat, &phi, scheme, &probes).map_err(|e| s(&e))?;
    if cfg.eps > 0.0 {
        checks.push(CheckEntry::new("stability_bound", Check::new(bound.max_ratio, 1.0 + RATIO_SLACK)));
    } else {
        // The bound is identically zero; only rounding error is left to measure.
        let worst_error = bound.rows.iter().map(|r| r.error / r.norm_x.max(1.0)).fold(0.0, f64::max);
        checks.push(CheckEntry::new("stability_bound_exact", Check::new(worst_error, ZERO_CONTROL)));
    }
    section.bound = Some(bound);
    watch.lap("bound");

    let grid: Vec<UnimodularScalar<f64>> = unimodular_grid::<f64>(cfg.mu_count)
        .into_iter()
        .map(|m| UnimodularScalar::new(m).map_err(|e| s(&e)))
        .collect::<Result<_, _>>()?;
    let s1 = verify_s1_homogeneity(&d_hat, &probes, &grid, tau);
    checks.push(CheckEntry::new("s1_homogeneity", s1));
    section.s1_homogeneity = Some(s1);
    let x_mid = &probes[probes.len() / 2];
    for lambda in [Complex::new(2.0, 0.0), Complex::new(0.0, 1.0), Complex::new(0.9, 2.3)] {
        let c = complex_homogeneity_via_decomposition(&d_hat, lambda, x_mid, tau).map_err(|e| s(&e))?;
        checks.push(CheckEntry::new(format!("complex_homogeneity[{}{:+}i]", lambda.re, lambda.im), c));
        section.complex_homogeneity.push(HomogeneityEntry {
            lambda: [lambda.re, lambda.im],
            check: c,
        });
    }
    let theta_check = certify_theta_derivation(&d_hat, &theta_hat, &probe_triples(&probes), tau).map_err(|e| s(&e))?;
    checks.push(CheckEntry::new("theta_derivation", theta_check));
    section.theta_derivation = Some(theta_check);
    watch.lap("linearity");

    let rate_probes = probe_set::<f64>(derive_seed(cfg.seed, stream::TRIPLES), n, 4, RATE_PROBE_NORM, RATE_PROBE_NORM);
    let out = direct_method(&f, scheme, &rate_probes[3], cfg.tol, cfg.l_max).map_err(|e| s(&e))?;
    let ratios = successive_ratios(&out.differences);
    let tail = &ratios[ratios.len().saturating_sub(RATE_RATIOS)..];
    if cfg.eps > 0.0 {
        checks.push(CheckEntry::new("convergence_rate", rate_check(tail, rate)));
    }
    section.convergence = Some(ConvergenceSection {
        probe_norm: RATE_PROBE_NORM,
        expected_rate: rate,
        ratios: tail.to_vec(),
        differences: out.differences,
        levels_used: out.l_used,
        converged: out.converged,
    });

    let [x, y, z] = [&rate_probes[0], &rate_probes[1], &rate_probes[2]];
    let floor = DERIVATION_FLOOR * relative_scale(&[x.norm(), y.norm(), z.norm()]);
    let mut residuals = Vec::new();
    for l in DERIVATION_FIRST_LEVEL..DERIVATION_FIRST_LEVEL + DERIVATION_MAX_LEVELS {
        let r = derivation_limit_residual(&f, &h, scheme, x, y, z, l).map_err(|e| s(&e))?;
        if cfg.eps > 0.0 && r <= floor {
            break;
        }
        residuals.push(r);
        if cfg.eps == 0.0 && residuals.len() == 5 {
            break;
        }
    }
    let dl_ratios = successive_ratios(&residuals);
    if cfg.eps > 0.0 {
        if dl_ratios.len() < 2 {
            return Err(format!(
                "derivation-limit residual reached the rounding floor after {} levels",
                residuals.len()
            ));
        }
        let non_decreasing = residuals.windows(2).filter(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Less)).count();
        checks.push(CheckEntry::new("derivation_limit_monotone", Check::new(non_decreasing as f64, 0.0)));
        let tail = &dl_ratios[dl_ratios.len().saturating_sub(RATE_RATIOS)..];
        checks.push(CheckEntry::new("derivation_limit_rate", rate_check(tail, rate)));
    } else {
        let worst_residual = residuals.iter().copied().fold(0.0, f64::max);
        checks.push(CheckEntry::new(
            "derivation_limit_exact",
            Check::new(worst_residual, ZERO_CONTROL * relative_scale(&[x.norm(), y.norm(), z.norm()])),
        ));
    }
    section.derivation_limit = Some(DerivationLimitSection {
        first_level: DERIVATION_FIRST_LEVEL,
        residuals,
        ratios: dl_ratios,
        expected_rate: rate,
    });
    watch.lap("rates");
    Ok(())
}

/// Largest `|ratio − rate|`; an empty window fails.
fn rate_check(ratios: &[f64], rate: f64) -> Check<f64> {
    let dev = if ratios.is_empty() {
        f64::INFINITY
    } else {
        ratios.iter().map(|r| (r - rate).abs()).fold(0.0, f64::max)
    };
    Check::new(dev, tolerances::RATE_WINDOW)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub scheme: Scheme,
    pub p: f64,
    pub eps: f64,
    /// `C(p)·ε` from the closed-form corollary constant.
    pub closed_form: f64,
    /// The same bound at `‖x‖ = 1` summed through the scheme's series.
    pub series: f64,
    pub relative_error: f64,
}

/// Exponents tabulated by `bounds` for each scheme.
pub fn bounds_grid(scheme: Scheme) -> &'static [f64] {
    match scheme {
        Scheme::Cauchy2 | Scheme::Jensen3 => &[0.0, 0.25, 0.5, 0.75, 0.9],
        Scheme::Cauchy2Contractive => &[1.5, 2.0, 3.0, 4.0],
        Scheme::Jensen3Contractive => &[3.5, 4.0, 5.0, 6.0],
    }
}

/// One row of the corollary-constant table.
pub fn bounds_row(scheme: Scheme, eps: f64, p: f64) -> Result<BoundsRow, String> {
    let closed_form = corollary_constant(scheme, p).map_err(|e| e.to_string())? * eps;
    let phi = ControlFunction::power(eps, p).map_err(|e| e.to_string())?;
    let x = Matrix::unit(2, 0, 0);
    let series = hyers_bound_with(&phi, scheme, &x, 1e-16, Summation::Series).map_err(|e| e.to_string())?;
    let relative_error = if closed_form == 0.0 {
        series.abs()
    } else {
        (series - closed_form).abs() / closed_form.abs()
    };
    Ok(BoundsRow {
        scheme,
        p,
        eps,
        closed_form,
        series,
        relative_error,
    })
}

/// Corollary constants over the exponent grid of every scheme.
pub fn run_bounds(eps: f64) -> Result<(Vec<BoundsRow>, Vec<CheckEntry>), String> {
    let mut rows = Vec::new();
    for scheme in Scheme::ALL {
        for &p in bounds_grid(scheme) {
            rows.push(bounds_row(scheme, eps, p)?);
        }
    }
    let checks = rows
        .iter()
        .map(|r| {
            CheckEntry::new(
                format!("constant[{}:p={}]", r.scheme, r.p),
                Check::new(r.relative_error, tolerances::CONSTANT_AGREEMENT),
            )
        })
        .collect();
    Ok((rows, checks))
}

pub fn render_bounds_csv(rows: &[BoundsRow]) -> String {
    let mut out = String::from("scheme,p,eps,closed_form,series,relative_error\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.scheme, r.p, r.eps, r.closed_form, r.series, r.relative_error
        ));
    }
    out
}
