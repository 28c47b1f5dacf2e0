//! End-to-end analysis and solve pipelines, their serializable reports and
//! plot data.

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundIntervals, ExactCase, InexactCase};
use crate::containment::{self, ContainmentReport};
use crate::error::{Error, Result};
use crate::krylov::{self, IdentityPreconditioner, Preconditioner};
use crate::precond::{self, BlockEquivalence, BlockStrategy, PreconditionerOperator};
use crate::spectral::{self, BlockExtremes, Inertia, SpectralConfig};
use crate::system::{validate, Dims, DoubleSaddleSystem, Layout, Tolerances, ValidationReport};

pub const SCHEMA_VERSION: u32 = 1;

/// Relative slack used for containment verdicts.
pub const CONTAINMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Unprec,
    PrecExact,
    PrecInexact,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Unprec => "unprec",
            Scenario::PrecExact => "prec-exact",
            Scenario::PrecInexact => "prec-inexact",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unprec" => Ok(Scenario::Unprec),
            "prec-exact" => Ok(Scenario::PrecExact),
            "prec-inexact" => Ok(Scenario::PrecInexact),
            other => Err(Error::Parameter(format!("unknown scenario {other}"))),
        }
    }
}

/// A named preconditioner choice as accepted on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum PrecondChoice {
    None,
    Strategies { name: String, blocks: [BlockStrategy; 3] },
}

impl PrecondChoice {
    pub fn exact() -> Self {
        Self::named(BlockStrategy::Exact, BlockStrategy::Exact, BlockStrategy::Exact, "exact")
    }

    pub fn jacobi() -> Self {
        Self::named(BlockStrategy::Jacobi, BlockStrategy::Jacobi, BlockStrategy::Jacobi, "jacobi")
    }

    pub fn pearson_wathen() -> Self {
        Self::named(BlockStrategy::Exact, BlockStrategy::Exact, BlockStrategy::PearsonWathen, "pearson-wathen")
    }

    pub fn drop_term() -> Self {
        Self::named(BlockStrategy::Exact, BlockStrategy::Exact, BlockStrategy::DropTerm, "drop-term")
    }

    fn named(a: BlockStrategy, s1: BlockStrategy, s2: BlockStrategy, name: &str) -> Self {
        Self::Strategies {
            name: name.into(),
            blocks: [a, s1, s2],
        }
    }

    pub fn name(&self) -> String {
        match self {
            PrecondChoice::None => "none".into(),
            PrecondChoice::Strategies { name, .. } => name.clone(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, PrecondChoice::Strategies { blocks, .. } if blocks.iter().all(|b| *b == BlockStrategy::Exact))
    }

    pub fn build(&self, system: &DoubleSaddleSystem) -> Result<Option<PreconditionerOperator>> {
        match self {
            PrecondChoice::None => Ok(None),
            PrecondChoice::Strategies { blocks, .. } => precond::build_approx(system, blocks.clone()).map(Some),
        }
    }

    /// Scenarios analysed when none are requested explicitly.
    pub fn default_scenarios(&self) -> Vec<Scenario> {
        match self {
            PrecondChoice::None => vec![Scenario::Unprec],
            _ if self.is_exact() => vec![Scenario::Unprec, Scenario::PrecExact],
            _ => vec![Scenario::Unprec, Scenario::PrecInexact],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDescriptor {
    pub name: String,
    pub dims: Dims,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Unverified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub largest_negative: Option<f64>,
    pub smallest_positive: Option<f64>,
    pub inertia: Inertia,
    pub eigenvalues: Vec<f64>,
}

impl SpectrumSummary {
    pub fn from_sorted(eigenvalues: Vec<f64>, inertia: Inertia) -> Self {
        Self {
            count: eigenvalues.len(),
            min: eigenvalues.first().copied().unwrap_or(f64::NAN),
            max: eigenvalues.last().copied().unwrap_or(f64::NAN),
            largest_negative: eigenvalues.iter().copied().filter(|v| *v < 0.0).last(),
            smallest_positive: eigenvalues.iter().copied().find(|v| *v > 0.0),
            inertia,
            eigenvalues,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub preconditioner: String,
    pub bounds: BoundIntervals,
    pub spectrum: Option<SpectrumSummary>,
    pub containment: Option<ContainmentReport>,
    /// Spectral-equivalence measurements, one per diagonal block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<Vec<BlockEquivalence>>,
    /// Violated block inequalities of the split preconditioned matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_bound_violations: Option<Vec<String>>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema: u32,
    pub problem: ProblemDescriptor,
    pub validation: ValidationReport,
    pub block_extremes: BlockExtremes,
    /// `None` when the constant is infinite (rank-deficient coupling).
    pub eta_d: Option<f64>,
    pub eta_e: Option<f64>,
    pub scenarios: Vec<ScenarioReport>,
    pub timings: Vec<Timing>,
    pub pass: bool,
}

impl AnalysisReport {
    pub fn scenario(&self, s: Scenario) -> Option<&ScenarioReport> {
        self.scenarios.iter().find(|r| r.scenario == s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub scenarios: Vec<Scenario>,
    pub precond: PrecondChoice,
    pub spectral: SpectralConfig,
    pub tolerances: Tolerances,
    pub containment_tol: f64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            scenarios: vec![Scenario::Unprec],
            precond: PrecondChoice::None,
            spectral: SpectralConfig::default(),
            tolerances: Tolerances::default(),
            containment_tol: CONTAINMENT_TOL,
        }
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn spectrum_of(matrix: &nalgebra::DMatrix<f64>, cfg: &SpectralConfig) -> Result<Option<SpectrumSummary>> {
    if matrix.nrows() > cfg.oracle_cutoff {
        return Ok(None);
    }
    let ev = spectral::full_spectrum(matrix, cfg)?;
    let inertia = spectral::inertia(matrix, cfg)?;
    Ok(Some(SpectrumSummary::from_sorted(ev, inertia)))
}

fn finish(
    scenario: Scenario,
    preconditioner: String,
    bounds: BoundIntervals,
    spectrum: Option<SpectrumSummary>,
    tol: f64,
) -> ScenarioReport {
    let containment = spectrum
        .as_ref()
        .map(|s| containment::verify_containment(&s.eigenvalues, &bounds, tol));
    let verdict = match &containment {
        None => Verdict::Unverified,
        Some(c) if c.pass => Verdict::Pass,
        Some(_) => Verdict::Fail,
    };
    ScenarioReport {
        scenario,
        preconditioner,
        bounds,
        spectrum,
        containment,
        equivalence: None,
        block_bound_violations: None,
        verdict,
    }
}

/// The exact-preconditioner case for a system, reading the nullity of `C^T`
/// from the validation report.
pub fn exact_case(system: &DoubleSaddleSystem, validation: &ValidationReport) -> ExactCase {
    match (system.d_is_zero(), system.e_is_zero()) {
        (true, true) => ExactCase::D0E0,
        (true, false) => ExactCase::D0E {
            k: validation.c_nullity_k,
        },
        _ => ExactCase::DNonzero,
    }
}

pub fn analyze(system: &DoubleSaddleSystem, problem: ProblemDescriptor, opts: &AnalyzeOptions) -> Result<AnalysisReport> {
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |stage: &str, timings: &mut Vec<Timing>| {
        timings.push(Timing {
            stage: stage.into(),
            seconds: clock.elapsed().as_secs_f64(),
        });
        clock = Instant::now();
    };

    let validation = validate(system, &opts.tolerances);
    let block_extremes = spectral::block_extremes(system)?;
    lap("validate", &mut timings);
    let schur = if validation.is_valid() {
        Some(spectral::schur_complements(system, opts.tolerances.rank_tol)?)
    } else {
        None
    };
    let mut report = AnalysisReport {
        schema: SCHEMA_VERSION,
        problem,
        validation: validation.clone(),
        block_extremes,
        eta_d: schur.as_ref().and_then(|s| finite(s.eta_d)),
        eta_e: schur.as_ref().and_then(|s| finite(s.eta_e)),
        scenarios: Vec::new(),
        timings: Vec::new(),
        pass: false,
    };
    if !validation.is_valid() {
        report.timings = timings;
        return Ok(report);
    }
    let schur = schur.expect("valid system has Schur complements");
    let tol = opts.containment_tol;

    for &scenario in &opts.scenarios {
        let entry = match scenario {
            Scenario::Unprec => {
                let bounds = if system.d_is_zero() && system.e_is_zero() {
                    bounds::bounds_k0(&block_extremes)?
                } else {
                    bounds::bounds_unpreconditioned(&block_extremes)?
                };
                let k = system.assemble(Layout::Standard)?.to_dense();
                finish(scenario, "none".into(), bounds, spectrum_of(&k, &opts.spectral)?, tol)
            }
            Scenario::PrecExact => {
                let bounds = bounds::bounds_precond_exact(exact_case(system, &validation), system.dims())?;
                let op = precond::build_exact(system)?;
                let spectrum = if system.dims().total() <= opts.spectral.oracle_cutoff {
                    let split = precond::split_preconditioned_matrix(system, &op, &opts.spectral)?;
                    spectrum_of(&split.matrix, &opts.spectral)?
                } else {
                    None
                };
                finish(scenario, "exact".into(), bounds, spectrum, tol)
            }
            Scenario::PrecInexact => {
                let op = opts.precond.build(system)?.ok_or_else(|| {
                    Error::Parameter("scenario prec-inexact needs a preconditioner".into())
                })?;
                let consts = op.constants();
                let case = InexactCase {
                    d_zero: system.d_is_zero(),
                    e_zero: system.e_is_zero(),
                };
                let bounds = bounds::bounds_precond_inexact(&consts, schur.eta_d, schur.eta_e, case)?;
                let (spectrum, violations) = if system.dims().total() <= opts.spectral.oracle_cutoff {
                    let split = precond::split_preconditioned_matrix(system, &op, &opts.spectral)?;
                    let measured = spectral::block_extremes(&split.blocks)?;
                    let implied = bounds::implied_block_extremes(&consts, schur.eta_d, schur.eta_e, case);
                    (
                        spectrum_of(&split.matrix, &opts.spectral)?,
                        Some(containment::verify_block_bounds(&measured, &implied, tol)),
                    )
                } else {
                    (None, None)
                };
                let mut entry = finish(scenario, opts.precond.name(), bounds, spectrum, tol);
                entry.equivalence = Some(op.equivalence.to_vec());
                if let Some(v) = &violations {
                    if !v.is_empty() && entry.verdict == Verdict::Pass {
                        entry.verdict = Verdict::Fail;
                    }
                }
                entry.block_bound_violations = violations;
                entry
            }
        };
        lap(scenario.name(), &mut timings);
        report.scenarios.push(entry);
    }
    report.pass = report.scenarios.iter().all(|s| s.verdict != Verdict::Fail);
    report.timings = timings;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema: u32,
    pub problem: ProblemDescriptor,
    pub preconditioner: String,
    pub rtol: f64,
    pub maxit: usize,
    pub iterations: usize,
    pub converged: bool,
    pub breakdown: Option<String>,
    /// `‖b - K x‖₂ / ‖b‖₂` of the returned iterate.
    pub true_relative_residual: f64,
    pub residual_history: Vec<f64>,
}

/// MINRES on `K x = b` with `b` the all-ones vector.
pub fn solve(
    system: &DoubleSaddleSystem,
    problem: ProblemDescriptor,
    precond: &PrecondChoice,
    rtol: f64,
    maxit: Option<usize>,
) -> Result<SolveReport> {
    let k = system.assemble(Layout::Standard)?;
    let dim = k.dim();
    let maxit = maxit.unwrap_or_else(|| krylov::default_maxit(dim));
    let b = DVector::from_element(dim, 1.0);
    let op = precond.build(system)?;
    let m: &dyn Preconditioner = match &op {
        Some(op) => op,
        None => &IdentityPreconditioner,
    };
    let result = krylov::minres(&k.data, m, &b, rtol, maxit)?;
    let residual = &b - crate::linalg::LinearOperator::apply(&k.data, &result.solution);
    Ok(SolveReport {
        schema: SCHEMA_VERSION,
        problem,
        preconditioner: precond.name(),
        rtol,
        maxit,
        iterations: result.iterations,
        converged: result.converged,
        breakdown: result.breakdown.clone(),
        true_relative_residual: residual.norm() / b.norm(),
        residual_history: result.residual_history,
    })
}

/// `iteration,relative_residual` rows.
pub fn residual_csv(report: &SolveReport) -> String {
    let mut out = String::from("iteration,relative_residual\n");
    for (i, r) in report.residual_history.iter().enumerate() {
        let _ = writeln!(out, "{i},{r:.16e}");
    }
    out
}

/// One plotted series: sorted eigenvalues and the bound lines.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub eigenvalues: Vec<f64>,
    pub bounds: BoundIntervals,
}

/// Picks the requested scenario, or the last one analysed.
pub fn plot_series(report: &AnalysisReport, scenario: Option<Scenario>) -> Result<PlotSeries> {
    let entry = match scenario {
        Some(s) => report.scenario(s),
        None => report.scenarios.last(),
    }
    .ok_or_else(|| Error::Parameter("report has no matching scenario".into()))?;
    let spectrum = entry
        .spectrum
        .as_ref()
        .ok_or_else(|| Error::Parameter(format!("scenario {} carries no spectrum", entry.scenario.name())))?;
    Ok(PlotSeries {
        eigenvalues: spectrum.eigenvalues.clone(),
        bounds: entry.bounds.clone(),
    })
}

/// CSV with an `index` column followed, per series, by `eigenvalue`,
/// `bound_neg_lo`, `bound_neg_hi`, `bound_pos_lo`, `bound_pos_hi`. With more
/// than one series every column name gets a `_<k>` suffix (k from 1).
/// Shorter series leave trailing cells empty.
pub fn plot_csv(series: &[PlotSeries]) -> String {
    const COLUMNS: [&str; 5] = ["eigenvalue", "bound_neg_lo", "bound_neg_hi", "bound_pos_lo", "bound_pos_hi"];
    let mut out = String::from("index");
    for k in 0..series.len() {
        for c in COLUMNS {
            if series.len() == 1 {
                let _ = write!(out, ",{c}");
            } else {
                let _ = write!(out, ",{c}_{}", k + 1);
            }
        }
    }
    out.push('\n');
    let rows = series.iter().map(|s| s.eigenvalues.len()).max().unwrap_or(0);
    for i in 0..rows {
        let _ = write!(out, "{i}");
        for s in series {
            match s.eigenvalues.get(i) {
                Some(v) => {
                    let b = &s.bounds;
                    for x in [*v, b.negative.lo, b.negative.hi, b.positive.lo, b.positive.hi] {
                        let _ = write!(out, ",{x:.16e}");
                    }
                }
                None => out.push_str(",,,,,"),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems;

    fn small() -> (DoubleSaddleSystem, ProblemDescriptor) {
        let x = problems::random_extremes(5, false, false);
        let s = problems::random_system(6, 4, 3, 5, &x).unwrap();
        let d = ProblemDescriptor {
            name: "random".into(),
            dims: s.dims(),
            h: None,
            beta: None,
            seed: Some(5),
        };
        (s, d)
    }

    #[test]
    fn analyze_all_scenarios_and_round_trip() {
        let (s, d) = small();
        let opts = AnalyzeOptions {
            scenarios: vec![Scenario::Unprec, Scenario::PrecExact, Scenario::PrecInexact],
            precond: PrecondChoice::jacobi(),
            ..Default::default()
        };
        let r = analyze(&s, d, &opts).unwrap();
        assert!(r.pass, "{:#?}", r.scenarios.iter().map(|s| s.verdict).collect::<Vec<_>>());
        assert_eq!(r.scenarios.len(), 3);
        let json = r.to_json().unwrap();
        let back = AnalysisReport::from_json(&json).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json().unwrap(), json);
    }

    #[test]
    fn invalid_system_reports_without_scenarios() {
        let z = nalgebra::DMatrix::zeros(1, 1);
        let s = DoubleSaddleSystem::new(nalgebra::DMatrix::identity(1, 1), z.clone(), z.clone(), z.clone(), z).unwrap();
        let d = ProblemDescriptor {
            name: "zero".into(),
            dims: s.dims(),
            h: None,
            beta: None,
            seed: None,
        };
        let r = analyze(&s, d, &AnalyzeOptions::default()).unwrap();
        assert!(!r.pass);
        assert!(r.scenarios.is_empty());
    }

    #[test]
    fn plot_csv_layouts() {
        assert_eq!(plot_csv(&[]), "index\n");
        let (s, d) = small();
        let r = analyze(&s, d, &AnalyzeOptions::default()).unwrap();
        let one = plot_series(&r, None).unwrap();
        let csv = plot_csv(std::slice::from_ref(&one));
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "index,eigenvalue,bound_neg_lo,bound_neg_hi,bound_pos_lo,bound_pos_hi"
        );
        assert_eq!(lines.count(), 13);
        let two = plot_csv(&[one.clone(), one]);
        assert!(two.starts_with("index,eigenvalue_1,"));
        assert!(two.lines().next().unwrap().ends_with("bound_pos_hi_2"));
    }

    #[test]
    fn solve_with_and_without_preconditioner() {
        let (s, d) = small();
        let plain = solve(&s, d.clone(), &PrecondChoice::None, 1e-10, None).unwrap();
        assert!(plain.converged);
        assert!(plain.true_relative_residual < 1e-8);
        let exact = solve(&s, d, &PrecondChoice::exact(), 1e-10, None).unwrap();
        assert!(exact.converged && exact.iterations <= plain.iterations);
        let csv = residual_csv(&exact);
        assert_eq!(csv.lines().count(), exact.residual_history.len() + 1);
    }
}
