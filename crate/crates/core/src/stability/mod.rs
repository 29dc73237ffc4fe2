//! Hyers–Ulam–Rassias stability of θ-derivations.
//!
//! Perturbed maps `f = D + g` satisfying the approximate Cauchy or Jensen
//! hypotheses are pushed through a direct-method scheme to recover the exact
//! ℂ-linear map, and every bound of the stability theorems is checked on
//! probe sets.

pub mod certify;
pub mod control;
pub mod direct;
pub mod linearity;
pub mod perturbation;

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::triple::TripleError;

pub use certify::{certify_theta_derivation, probe_triples, verify_stability_bound, BoundReport, ProbeRow};
pub use control::{
    corollary_constant, hyers_bound, hyers_bound_with, phi_tilde, phi_tilde_with, pow_norm, ControlFunction,
    FunctionalForm, Scheme, Summation,
};
pub use direct::{
    derivation_limit_residual, derivation_limit_sequence, direct_method, recover_linear_map, successive_ratios,
    DirectOutcome, Recovery, RecoveryOptions,
};
pub use linearity::{
    complex_homogeneity_via_decomposition, unimodular_average_decomposition, verify_s1_homogeneity, UnimodularScalar,
};
pub use perturbation::{make_perturbation, verify_hypotheses, HypothesisReport, PerturbedMap, RatioStat};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("scheme {scheme} rejects p = {p}: requires {condition}")]
    Gate { scheme: Scheme, p: f64, condition: String },
    #[error("series for scheme {scheme} diverges after {terms} terms: requires {condition}")]
    Divergent {
        scheme: Scheme,
        terms: usize,
        condition: String,
    },
    #[error("scaled argument overflows at level {level} of scheme {scheme}; reduce l_max")]
    Overflow { level: usize, scheme: Scheme },
    #[error("direct method did not converge on basis element {index} within l_max = {l_max}")]
    NotConverged { index: usize, l_max: usize },
    #[error("linearity certification failed: residual {residual:e} above {threshold:e} at probe of norm {probe_norm:e}")]
    Certification {
        residual: f64,
        threshold: f64,
        probe_norm: f64,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Triple(#[from] TripleError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
