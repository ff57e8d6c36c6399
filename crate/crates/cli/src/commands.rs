//! The `run`, `sweep`, `verify`, `spectral` and `plot` subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rowstoch_core::analysis::{fit_linear_rate, RateEstimate, StepSizeBound};
use rowstoch_core::objectives::GlobalConstants;
use rowstoch_core::{BoundConstants, ConvergenceTrace, DVector, TraceRecord};
use serde::Serialize;

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::plot::{self, Series};
use crate::problem::{config_step, Problem};
use crate::trace_io::{read_trace, trace_to_string, write_atomic};

/// Caps the number of sweep worker threads.
pub const THREADS_ENV: &str = "ROWSTOCH_THREADS";

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub step: f64,
    pub iterations: usize,
    pub records: usize,
    pub final_record: TraceRecord,
    pub relative_residual: f64,
    pub max_agent_error: Option<f64>,
    pub rate: Option<RateEstimate>,
    pub rate_error: Option<String>,
    pub x_star: Vec<f64>,
    pub global: GlobalConstants,
    pub step_bound: Option<StepSizeBound>,
    pub constants: BoundConstants,
    pub config: ExperimentConfig,
}

pub struct RunOutcome {
    pub trace: ConvergenceTrace,
    pub summary: RunSummary,
}

fn rate_of(records: &[TraceRecord]) -> (Option<RateEstimate>, Option<String>) {
    match fit_linear_rate(records) {
        Ok(rate) => (Some(rate), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

/// Runs the configured experiment without touching the filesystem.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let problem = Problem::build(config)?;
    execute_on(config, &problem)
}

pub fn execute_on(config: &ExperimentConfig, problem: &Problem) -> Result<RunOutcome> {
    config.validate()?;
    let step = config_step(config);
    let (trace, max_agent_error) = if config.algorithm == Algorithm::Proposed {
        let (trace, last) = problem.run_proposed(step, config.max_iters, config.record_every, |_| {})?;
        (trace, Some(max_agent_error(&last.x, &problem.x_star)))
    } else {
        (problem.run(config.algorithm, step, config.max_iters, config.record_every)?, None)
    };
    let final_record = *trace.final_record().expect("traces hold at least the initial record");
    let (rate, rate_error) = rate_of(&trace.records);
    let summary = RunSummary {
        algorithm: config.algorithm,
        step,
        iterations: config.max_iters,
        records: trace.records.len(),
        final_record,
        relative_residual: trace.relative_residual().unwrap_or(f64::NAN),
        max_agent_error,
        rate,
        rate_error,
        x_star: problem.x_star.iter().copied().collect(),
        global: problem.global,
        step_bound: problem.step_bound().ok(),
        constants: problem.constants.clone(),
        config: config.clone(),
    };
    Ok(RunOutcome { trace, summary })
}

/// `run`: writes `trace.csv` and `summary.json` into `config.out`.
pub fn cmd_run(config: &ExperimentConfig) -> Result<RunSummary> {
    let outcome = execute(config)?;
    write_atomic(config.out.join("trace.csv"), trace_to_string(&outcome.trace.records).as_bytes())?;
    write_atomic(config.out.join("summary.json"), serde_json::to_string_pretty(&outcome.summary)?.as_bytes())?;
    Ok(outcome.summary)
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub base: ExperimentConfig,
    pub algorithms: Vec<Algorithm>,
    pub alphas: Vec<f64>,
    /// Diminishing-step constants for Subgradient-Push; defaults to the
    /// config's `push_step`.
    pub push_steps: Vec<f64>,
    pub plot: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesOutcome {
    pub label: String,
    pub algorithm: Algorithm,
    pub step: f64,
    pub ok: bool,
    pub error: Option<String>,
    pub final_residual: Option<f64>,
    pub relative_residual: Option<f64>,
    pub rate: Option<RateEstimate>,
    pub trace_file: Option<PathBuf>,
    #[serde(skip)]
    pub records: Vec<TraceRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub series: Vec<SeriesOutcome>,
    pub comparison: PathBuf,
    pub plot: Option<PathBuf>,
}

impl SweepReport {
    pub fn get(&self, label: &str) -> Option<&SeriesOutcome> {
        self.series.iter().find(|s| s.label == label)
    }
}

pub fn series_label(algorithm: Algorithm, step: f64) -> String {
    format!("{}_{}", algorithm.name(), step)
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

fn run_series(problem: &Problem, base: &ExperimentConfig, algorithm: Algorithm, step: f64, dir: &Path) -> SeriesOutcome {
    let label = series_label(algorithm, step);
    let mut outcome = SeriesOutcome {
        label: label.clone(),
        algorithm,
        step,
        ok: false,
        error: None,
        final_residual: None,
        relative_residual: None,
        rate: None,
        trace_file: None,
        records: Vec::new(),
    };
    let trace = match problem.run(algorithm, step, base.max_iters, base.record_every) {
        Ok(t) => t,
        Err(e) => {
            outcome.error = Some(e.to_string());
            return outcome;
        }
    };
    let path = dir.join(format!("{label}.csv"));
    if let Err(e) = write_atomic(&path, trace_to_string(&trace.records).as_bytes()) {
        outcome.error = Some(e.to_string());
        return outcome;
    }
    let last = trace.final_record().map(|r| r.residual2);
    outcome.ok = last.is_some_and(f64::is_finite);
    if !outcome.ok {
        outcome.error = Some("diverged: non-finite residual".into());
    }
    outcome.final_residual = last;
    outcome.relative_residual = trace.relative_residual();
    outcome.rate = fit_linear_rate(&trace.records).ok();
    outcome.trace_file = Some(path);
    outcome.records = trace.records;
    outcome
}

/// Wide CSV: `k` followed by one `residual2` column per series; blank where a
/// series has no record at that `k`.
pub fn comparison_csv(series: &[SeriesOutcome]) -> Result<String> {
    let mut rows: BTreeMap<usize, Vec<Option<f64>>> = BTreeMap::new();
    for (i, s) in series.iter().enumerate() {
        for r in &s.records {
            rows.entry(r.k).or_insert_with(|| vec![None; series.len()])[i] = Some(r.residual2);
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["k".to_string()];
    header.extend(series.iter().map(|s| s.label.clone()));
    w.write_record(&header)?;
    for (k, values) in rows {
        let mut row = vec![k.to_string()];
        row.extend(values.iter().map(|v| v.map(|x| format!("{x:e}")).unwrap_or_default()));
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `sweep`: one trace per (algorithm, step) computed in parallel, a
/// comparison CSV and optionally an SVG overlay. Failed series are reported,
/// not fatal.
pub fn cmd_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    if spec.alphas.is_empty() {
        return Err(CliError::Usage("sweep needs at least one alpha".into()));
    }
    if spec.algorithms.is_empty() {
        return Err(CliError::Usage("sweep needs at least one algorithm".into()));
    }
    let mut base = spec.base.clone();
    base.alpha = spec.alphas[0];
    base.validate()?;
    let problem = Problem::build(&base)?;
    let push_steps = if spec.push_steps.is_empty() { vec![base.push_step] } else { spec.push_steps.clone() };
    let mut jobs = Vec::new();
    for &algorithm in &spec.algorithms {
        let steps = if algorithm.constant_step() { &spec.alphas } else { &push_steps };
        jobs.extend(steps.iter().map(|&s| (algorithm, s)));
    }
    let dir = base.out.join("series");
    let run_all = || -> Vec<SeriesOutcome> {
        jobs.par_iter().map(|&(a, s)| run_series(&problem, &base, a, s, &dir)).collect()
    };
    let series = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(run_all),
        None => run_all(),
    };

    let comparison = base.out.join("comparison.csv");
    write_atomic(&comparison, comparison_csv(&series)?.as_bytes())?;
    let plot = if spec.plot {
        let path = base.out.join("comparison.svg");
        let drawn: Vec<Series> =
            series.iter().filter(|s| s.ok).map(|s| Series { label: s.label.clone(), records: s.records.clone() }).collect();
        write_atomic(&path, plot::render(&drawn).svg.as_bytes())?;
        Some(path)
    } else {
        None
    };
    let report = SweepReport { series, comparison, plot };
    write_atomic(base.out.join("sweep.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub constants: BoundConstants,
    pub global: GlobalConstants,
    pub step_bound: Option<StepSizeBound>,
    pub step_bound_error: Option<String>,
}

/// `spectral`: network constants and the step-size bound as JSON.
pub fn cmd_spectral(config: &ExperimentConfig) -> Result<SpectralReport> {
    let problem = Problem::build(config)?;
    let (step_bound, step_bound_error) = match problem.step_bound() {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = SpectralReport { constants: problem.constants, global: problem.global, step_bound, step_bound_error };
    write_atomic(config.out.join("spectral.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    Ok(report)
}

/// `plot`: renders traces to `<out>/plot.svg`, labelled by file stem.
pub fn cmd_plot(traces: &[PathBuf], out: &Path) -> Result<PathBuf> {
    if traces.is_empty() {
        return Err(CliError::Usage("plot needs at least one trace".into()));
    }
    let series = traces
        .iter()
        .map(|p| {
            let label = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| p.display().to_string());
            Ok(Series { label, records: read_trace(p)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let path = out.join("plot.svg");
    write_atomic(&path, plot::render(&series).svg.as_bytes())?;
    Ok(path)
}

/// Largest per-agent distance `max_i ||x_i - x*||_2` of a stacked iterate.
pub fn max_agent_error(x: &rowstoch_core::DMatrix<f64>, x_star: &DVector<f64>) -> f64 {
    x.row_iter().map(|r| (r.transpose() - x_star).norm()).fold(0.0, f64::max)
}
