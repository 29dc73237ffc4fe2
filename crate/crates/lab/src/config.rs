//! Experiment configuration: JSON file plus command-line overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use triple_stab_core::sampling::{derive_seed, random_skew_adjoint, random_unitary, rng_from_seed, stream};
use triple_stab_core::stability::Scheme;
use triple_stab_core::triple::make_theta_derivation;
use triple_stab_core::{Matrix, Operator};

use crate::LabError;

/// Row-major matrix as rows of `[re, im]` pairs.
pub type MatrixRows = Vec<Vec<[f64; 2]>>;

/// How the exact pair `(D, θ) = (θ ∘ d, θ)` is built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// `θ = id`, `d = 0`.
    Identity,
    /// Seeded unitary `u` and skew-adjoint `a` with `‖a‖ = skew_norm`.
    Seeded { skew_norm: f64 },
    /// Explicit unitary `u` and skew-adjoint `a`.
    Explicit { u: MatrixRows, a: MatrixRows },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub scheme: Scheme,
    pub eps: f64,
    pub p: f64,
    pub seed: u64,
    pub probe_count: usize,
    pub tol: f64,
    pub l_max: usize,
    pub generator: GeneratorSpec,
    /// Random samples per axiom check.
    pub samples: usize,
    /// Unimodular scalars for the S¹-homogeneity check.
    pub mu_count: usize,
    /// Probes certifying linearity of each recovered map.
    pub certify_probes: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            scheme: Scheme::Cauchy2,
            eps: 0.1,
            p: 0.5,
            seed: 42,
            probe_count: 100,
            tol: 1e-9,
            l_max: 200,
            generator: GeneratorSpec::Seeded { skew_norm: 1.0 },
            samples: 200,
            mu_count: 16,
            certify_probes: 20,
        }
    }
}

/// Command-line values that replace config fields when present.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub dim: Option<usize>,
    pub scheme: Option<Scheme>,
    pub eps: Option<f64>,
    pub p: Option<f64>,
    pub seed: Option<u64>,
    pub probe_count: Option<usize>,
    pub tol: Option<f64>,
    pub l_max: Option<usize>,
    pub samples: Option<usize>,
    pub mu_count: Option<usize>,
    pub certify_probes: Option<usize>,
}

fn invalid(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        serde_json::from_str(text).map_err(|e| invalid(format!("malformed config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|source| LabError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($($f:ident),*) => {$( if let Some(v) = o.$f.clone() { self.$f = v; } )*};
        }
        set!(dim, scheme, eps, p, seed, probe_count, tol, l_max, samples, mu_count, certify_probes);
    }

    /// Rejects non-finite or out-of-range fields and `(scheme, p)` pairs outside the summability gate.
    pub fn validate(&self) -> Result<(), LabError> {
        if self.dim == 0 || self.dim > 16 {
            return Err(invalid(format!("dim must be in 1..=16, got {}", self.dim)));
        }
        for (name, v) in [("eps", self.eps), ("p", self.p), ("tol", self.tol)] {
            if !v.is_finite() {
                return Err(invalid(format!("{name} must be finite, got {v}")));
            }
        }
        if self.eps < 0.0 || self.p < 0.0 {
            return Err(invalid("eps and p must be nonnegative"));
        }
        if self.tol <= 0.0 {
            return Err(invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if self.probe_count == 0 || self.samples == 0 || self.mu_count == 0 || self.l_max == 0 {
            return Err(invalid("probe_count, samples, mu_count and l_max must be at least 1"));
        }
        if self.certify_probes < 20 {
            return Err(invalid(format!("certify_probes must be at least 20, got {}", self.certify_probes)));
        }
        match &self.generator {
            GeneratorSpec::Seeded { skew_norm } if !(skew_norm.is_finite() && *skew_norm >= 0.0) => {
                return Err(invalid(format!("skew_norm must be finite and nonnegative, got {skew_norm}")));
            }
            GeneratorSpec::Explicit { u, a } => {
                for (name, m) in [("u", u), ("a", a)] {
                    if m.len() != self.dim || m.iter().any(|row| row.len() != self.dim) {
                        return Err(invalid(format!("generator.{name} must be {0}x{0}", self.dim)));
                    }
                }
            }
            _ => {}
        }
        self.scheme.check_power_gate(self.p).map_err(LabError::Gate)
    }

    /// The exact θ-derivation `D = θ ∘ d` and the homomorphism `θ`.
    pub fn exact_pair(&self) -> Result<(Operator, Operator), LabError> {
        let n = self.dim;
        let (u, a) = match &self.generator {
            GeneratorSpec::Identity => (Matrix::identity(n), Matrix::zeros(n)),
            GeneratorSpec::Seeded { skew_norm } => (
                random_unitary(&mut rng_from_seed(derive_seed(self.seed, stream::UNITARY)), n),
                random_skew_adjoint(&mut rng_from_seed(derive_seed(self.seed, stream::SKEW)), n, *skew_norm),
            ),
            GeneratorSpec::Explicit { u, a } => (rows_to_matrix(u)?, rows_to_matrix(a)?),
        };
        let theta = Operator::conjugation(u)?;
        let d = make_theta_derivation(theta.clone(), Operator::commutator(a)?)?;
        Ok((d, theta))
    }
}

fn rows_to_matrix(rows: &MatrixRows) -> Result<Matrix, LabError> {
    let pairs: Vec<Vec<(f64, f64)>> = rows.iter().map(|r| r.iter().map(|&[re, im]| (re, im)).collect()).collect();
    let refs: Vec<&[(f64, f64)]> = pairs.iter().map(Vec::as_slice).collect();
    Ok(Matrix::from_rows(&refs)?)
}
