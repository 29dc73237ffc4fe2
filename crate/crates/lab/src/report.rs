//! Report types and their deterministic JSON / CSV renderings.
//!
//! JSON goes through `serde_json::Value`, whose map is ordered, so keys come
//! out sorted; every float is printed with 17 significant digits.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use triple_stab_core::stability::{BoundReport, HypothesisReport, ProbeRow};
use triple_stab_core::Check;

use crate::config::ExperimentConfig;
use crate::LabError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl CheckEntry {
    pub fn new(name: impl Into<String>, check: Check<f64>) -> Self {
        Self {
            name: name.into(),
            residual: check.residual,
            threshold: check.threshold,
            passed: check.passed(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomSection {
    pub dim: usize,
    pub samples: usize,
    pub commutativity: Check<f64>,
    pub jordan_identity: Check<f64>,
    pub l_self_adjoint: Check<f64>,
    pub l_positivity: Check<f64>,
    pub norm_identity: Check<f64>,
    pub product_agreement: Check<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSection {
    pub probe_norm: f64,
    pub expected_rate: f64,
    pub ratios: Vec<f64>,
    pub differences: Vec<f64>,
    pub levels_used: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivationLimitSection {
    pub first_level: usize,
    pub residuals: Vec<f64>,
    pub ratios: Vec<f64>,
    pub expected_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityEntry {
    pub lambda: [f64; 2],
    pub check: Check<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoverySection {
    pub hypotheses: Option<HypothesisReport<f64>>,
    pub recovery_error_d: Option<f64>,
    pub recovery_error_theta: Option<f64>,
    pub basis_levels_d: Vec<usize>,
    pub basis_levels_theta: Vec<usize>,
    pub corollary_constant: f64,
    pub bound: Option<BoundReport<f64>>,
    pub convergence: Option<ConvergenceSection>,
    pub s1_homogeneity: Option<Check<f64>>,
    pub complex_homogeneity: Vec<HomogeneityEntry>,
    pub theta_derivation: Option<Check<f64>>,
    pub derivation_limit: Option<DerivationLimitSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub command: String,
    pub config: ExperimentConfig,
    pub axioms: Option<AxiomSection>,
    pub recovery: Option<RecoverySection>,
    pub checks: Vec<CheckEntry>,
    pub errors: Vec<String>,
    /// Wall-clock seconds per stage; omitted unless requested, since they break byte-determinism.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
}

impl StabilityReport {
    pub fn new(command: &str, config: ExperimentConfig) -> Self {
        Self {
            command: command.to_string(),
            config,
            axioms: None,
            recovery: None,
            checks: Vec::new(),
            errors: Vec::new(),
            timings: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.errors.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&CheckEntry> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Per-probe bound table, empty when no bound check ran.
    pub fn probe_rows(&self) -> &[ProbeRow<f64>] {
        self.recovery
            .as_ref()
            .and_then(|r| r.bound.as_ref())
            .map_or(&[], |b| b.rows.as_slice())
    }

    pub fn from_json(text: &str) -> Result<Self, LabError> {
        serde_json::from_str(text).map_err(|e| LabError::Report(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(LabError::Config(format!("unknown format `{other}` (json or csv)"))),
        }
    }
}

/// Pretty JSON with floats at 17 significant digits.
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{:.16e}", f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Sorted-key JSON of any serializable value; non-finite floats become `null`.
pub fn render_json<S: Serialize>(value: &S) -> Result<String, LabError> {
    let tree = serde_json::to_value(value).map_err(|e| LabError::Report(e.to_string()))?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17(PrettyFormatter::with_indent(b"  ")));
    tree.serialize(&mut ser).map_err(|e| LabError::Report(e.to_string()))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

pub fn render_csv(rows: &[ProbeRow<f64>]) -> String {
    let mut out = String::from("norm_x,bound,error,ratio\n");
    for r in rows {
        out.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", r.norm_x, r.bound, r.error, r.ratio));
    }
    out
}

pub fn render(report: &StabilityReport, format: Format) -> Result<String, LabError> {
    match format {
        Format::Json => render_json(report),
        Format::Csv => Ok(render_csv(report.probe_rows())),
    }
}

/// Writes the rendered report to `path`.
pub fn emit_report(report: &StabilityReport, format: Format, path: &Path) -> Result<(), LabError> {
    let text = render(report, format)?;
    std::fs::write(path, text).map_err(|source| LabError::Io {
        path: path.display().to_string(),
        source,
    })
}
