use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use triple_stab::report::CheckEntry;
use triple_stab::runner::{render_bounds_csv, run_bounds};
use triple_stab::{
    render, render_json, run_axioms, run_recovery, threads_from_env, ExperimentConfig, Format, LabError, Overrides,
    StabilityReport,
};
use triple_stab_core::stability::Scheme;

#[derive(Parser)]
#[command(name = "triple-stab", version, about = "Seeded stability experiments for θ-derivations on matrix triples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the triple-product axioms on seeded random matrices.
    Axioms(RunArgs),
    /// Perturb an exact θ-derivation, recover it and certify the bounds.
    Recover(RunArgs),
    /// Tabulate the corollary constants against their series.
    Bounds {
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Re-render a saved JSON report.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct OutputArgs {
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    probe_count: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    l_max: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    mu_count: Option<usize>,
    #[arg(long)]
    certify_probes: Option<usize>,
    /// Record per-stage wall-clock times (the report is then no longer byte-reproducible).
    #[arg(long)]
    timings: bool,
    #[command(flatten)]
    output: OutputArgs,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig, LabError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.apply(&Overrides {
            dim: self.dim,
            scheme: self.scheme,
            eps: self.eps,
            p: self.p,
            seed: self.seed,
            probe_count: self.probe_count,
            tol: self.tol,
            l_max: self.l_max,
            samples: self.samples,
            mu_count: self.mu_count,
            certify_probes: self.certify_probes,
        });
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_output(text: &str, out: Option<&Path>) -> Result<(), LabError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| LabError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report_failures(checks: &[&CheckEntry], errors: &[String]) {
    for c in checks {
        eprintln!("FAILED {}: residual {:e} > threshold {:e}", c.name, c.residual, c.threshold);
    }
    for e in errors {
        eprintln!("ERROR {e}");
    }
}

fn finish(report: &StabilityReport, output: &OutputArgs) -> Result<bool, LabError> {
    write_output(&render(report, output.format)?, output.out.as_deref())?;
    report_failures(&report.failed_checks(), &report.errors);
    Ok(report.passed())
}

/// `Ok(true)` when every check passed.
fn execute(cli: Cli) -> Result<bool, LabError> {
    match cli.command {
        Command::Axioms(args) => finish(&run_axioms(&args.config()?, args.timings), &args.output),
        Command::Recover(args) => finish(&run_recovery(&args.config()?, args.timings), &args.output),
        Command::Bounds { eps, output } => {
            if !(eps.is_finite() && eps >= 0.0) {
                return Err(LabError::Config(format!("eps must be finite and nonnegative, got {eps}")));
            }
            let (rows, checks) = run_bounds(eps).map_err(LabError::Config)?;
            let text = match output.format {
                Format::Json => render_json(&serde_json::json!({ "rows": rows, "checks": checks }))?,
                Format::Csv => render_bounds_csv(&rows),
            };
            write_output(&text, output.out.as_deref())?;
            let failed: Vec<&CheckEntry> = checks.iter().filter(|c| !c.passed).collect();
            report_failures(&failed, &[]);
            Ok(failed.is_empty())
        }
        Command::Report { input, output } => {
            let text = std::fs::read_to_string(&input).map_err(|source| LabError::Io {
                path: input.display().to_string(),
                source,
            })?;
            let report = StabilityReport::from_json(&text)?;
            write_output(&render(&report, output.format)?, output.out.as_deref())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = threads_from_env().and_then(|threads| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        let pool = builder.build().map_err(|e| LabError::Config(e.to_string()))?;
        pool.install(|| execute(cli))
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
