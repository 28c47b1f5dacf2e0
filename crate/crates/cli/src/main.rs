//! `saddlebound`: generate double saddle-point problems, bound and verify
//! their spectra, and run MINRES.
//!
//! Exit codes: 0 when every verdict passes, 1 on runtime errors, 2 when a
//! system fails validation, a containment check fails, or a solve does not
//! converge.

mod problem;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use saddlebound::report::{self, AnalyzeOptions, PlotSeries, Scenario};
use saddlebound::{io, AnalysisReport, SolveReport};
use serde::Serialize;

use problem::{ProblemKind, SweepSpec, ZeroBlocks};

#[derive(Parser)]
#[command(name = "saddlebound", version, about = "Eigenvalue bounds for double saddle-point systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write Matrix Market blocks and a JSON manifest.
    Generate(GenerateArgs),
    /// Compute bounds and verify them against the computed spectrum.
    Analyze(AnalyzeArgs),
    /// Run (preconditioned) MINRES with an all-ones right-hand side.
    Solve(SolveArgs),
    /// Turn analysis reports into plot-ready CSV.
    Plotdata(PlotArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// poisson-dist, poisson-bnd, random, tight-neg, tight-pos or manifest:<path>
    #[arg(long, value_parser = clap::value_parser!(ProblemKind))]
    problem: ProblemKind,
    /// Mesh widths (comma separated) for the Poisson problems.
    #[arg(long, default_value = "0.0625")]
    h: String,
    /// Regularization parameters (comma separated).
    #[arg(long, default_value = "1e-3")]
    beta: String,
    /// n,m,p for random systems.
    #[arg(long)]
    dims: Option<String>,
    /// Seeds (comma separated) for random systems.
    #[arg(long, default_value = "0")]
    seed: String,
    /// Five positive scalars for the tightness fixtures.
    #[arg(long)]
    params: Option<String>,
    /// Blocks left at zero in random systems.
    #[arg(long, value_enum, default_value = "none")]
    zero: ZeroBlocks,
}

impl ProblemArgs {
    fn cases(&self) -> Result<Vec<problem::Case>> {
        let h: Vec<f64> = problem::parse_list(&self.h, "--h")?;
        let beta: Vec<f64> = problem::parse_list(&self.beta, "--beta")?;
        let seeds: Vec<u64> = problem::parse_list(&self.seed, "--seed")?;
        problem::expand(&SweepSpec {
            problem: &self.problem,
            h: &h,
            beta: &beta,
            seeds: &seeds,
            dims: self.dims.as_deref(),
            params: self.params.as_deref(),
            zero: self.zero,
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Output directory; sweeps get one subdirectory per case.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// none, exact, jacobi, pearson-wathen, drop-term or user:<path>
    #[arg(long, default_value = "none")]
    precond: String,
    /// Scenarios (comma separated): unprec, prec-exact, prec-inexact.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// json prints the report; csv prints plot data.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value = "none")]
    precond: String,
    #[arg(long, default_value_t = saddlebound::krylov::DEFAULT_RTOL)]
    rtol: f64,
    #[arg(long)]
    maxit: Option<usize>,
    /// Also write residual histories as CSV to this path.
    #[arg(long)]
    residuals: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// json prints the reports; csv prints one summary row per case.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct PlotArgs {
    /// Analysis reports (JSON object or array of objects).
    reports: Vec<PathBuf>,
    /// Scenario to plot; defaults to the last one in each report.
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// A single item serializes bare, a sweep as an array.
fn to_json<T: Serialize>(items: &[T]) -> Result<String> {
    let text = match items {
        [one] => serde_json::to_string_pretty(one)?,
        many => serde_json::to_string_pretty(many)?,
    };
    Ok(text + "\n")
}

fn generate(args: &GenerateArgs) -> Result<bool> {
    let cases = args.problem.cases()?;
    let single = cases.len() == 1;
    for case in &cases {
        let (system, descriptor) = case.build()?;
        let dir = if single { args.out.clone() } else { args.out.join(case.label()) };
        let description = serde_json::to_string(&descriptor)?;
        let path = io::write_manifest(&dir, &system, Some(description))?;
        println!("{}", path.display());
    }
    Ok(true)
}

fn analyze(args: &AnalyzeArgs) -> Result<bool> {
    let precond = problem::parse_precond(&args.precond)?;
    let scenarios = match &args.scenario {
        Some(text) => problem::parse_list::<Scenario>(text, "--scenario")?,
        None => precond.default_scenarios(),
    };
    if scenarios.contains(&Scenario::PrecInexact) && precond == saddlebound::PrecondChoice::None {
        bail!("scenario prec-inexact needs --precond");
    }
    let opts = AnalyzeOptions {
        scenarios,
        precond,
        ..Default::default()
    };
    let cases = args.problem.cases()?;
    let reports: Vec<AnalysisReport> = cases
        .par_iter()
        .map(|case| {
            let (system, descriptor) = case.build()?;
            Ok(report::analyze(&system, descriptor, &opts)?)
        })
        .collect::<Result<_>>()?;
    for r in &reports {
        if !r.validation.is_valid() {
            eprintln!("{}: system fails validation", r.problem.name);
        }
    }
    let text = match args.format {
        Format::Json => to_json(&reports)?,
        Format::Csv => {
            let series = reports
                .iter()
                .map(|r| Ok(report::plot_series(r, None)?))
                .collect::<Result<Vec<_>>>()?;
            report::plot_csv(&series)
        }
    };
    emit(args.out.as_deref(), &text)?;
    Ok(reports.iter().all(|r| r.pass))
}

fn solve(args: &SolveArgs) -> Result<bool> {
    let precond = problem::parse_precond(&args.precond)?;
    let cases = args.problem.cases()?;
    let reports: Vec<Option<SolveReport>> = cases
        .par_iter()
        .map(|case| {
            let (system, descriptor) = case.build()?;
            let validation = saddlebound::system::validate(&system, &Default::default());
            if !validation.is_valid() {
                eprintln!("{}: system fails validation", descriptor.name);
                return Ok(None);
            }
            Ok(Some(report::solve(&system, descriptor, &precond, args.rtol, args.maxit)?))
        })
        .collect::<Result<_>>()?;
    let valid = reports.iter().all(Option::is_some);
    let reports: Vec<SolveReport> = reports.into_iter().flatten().collect();
    if let Some(path) = &args.residuals {
        let mut csv = String::from("case,iteration,relative_residual\n");
        for (k, r) in reports.iter().enumerate() {
            for line in report::residual_csv(r).lines().skip(1) {
                csv.push_str(&format!("{k},{line}\n"));
            }
        }
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    let text = match args.format {
        Format::Json => to_json(&reports)?,
        Format::Csv => {
            let mut csv = String::from(
                "problem,h,beta,seed,n,m,p,preconditioner,iterations,converged,true_relative_residual\n",
            );
            for r in &reports {
                let opt = |v: Option<String>| v.unwrap_or_default();
                let p = &r.problem;
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{:.16e}\n",
                    p.name,
                    opt(p.h.map(|v| format!("{v:.16e}"))),
                    opt(p.beta.map(|v| format!("{v:.16e}"))),
                    opt(p.seed.map(|v| v.to_string())),
                    p.dims.n,
                    p.dims.m,
                    p.dims.p,
                    r.preconditioner,
                    r.iterations,
                    r.converged,
                    r.true_relative_residual
                ));
            }
            csv
        }
    };
    emit(args.out.as_deref(), &text)?;
    Ok(valid && reports.iter().all(|r| r.converged))
}

fn plotdata(args: &PlotArgs) -> Result<bool> {
    let mut series: Vec<PlotSeries> = Vec::new();
    for path in &args.reports {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let reports: Vec<AnalysisReport> = if value.is_array() {
            serde_json::from_value(value)?
        } else {
            vec![serde_json::from_value(value)?]
        };
        for r in &reports {
            series.push(report::plot_series(r, args.scenario).with_context(|| path.display().to_string())?);
        }
    }
    emit(args.out.as_deref(), &report::plot_csv(&series))?;
    Ok(true)
}

fn main() -> ExitCode {
    // clap would exit with 2 on bad usage, which is reserved for failed checks.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Analyze(a) => analyze(a),
        Command::Solve(a) => solve(a),
        Command::Plotdata(a) => plotdata(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
