use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{BatchConfig, ExperimentConfig, SolverSpec};
use super::output::{write_summary_json, write_trace_csv};
use super::stats::{estimate_fstar, fit_rate};
use super::HarnessError;
use crate::problems::TestProblem;
use crate::solvers::{LineSearchConfig, Method, SolveError, StopCriteria, Termination, Trace};

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    GradTol,
    LocalGradTol,
    MaxIters,
    MaxSeconds,
    EvaluationFailure,
    /// The run could not start: bad constants, unreadable data.
    ConfigError,
}

impl From<Termination> for RunStatus {
    fn from(t: Termination) -> Self {
        match t {
            Termination::GradTol => RunStatus::GradTol,
            Termination::LocalGradTol => RunStatus::LocalGradTol,
            Termination::MaxIters => RunStatus::MaxIters,
            Termination::MaxSeconds => RunStatus::MaxSeconds,
            Termination::EvaluationFailure => RunStatus::EvaluationFailure,
        }
    }
}

impl RunStatus {
    pub fn converged(self) -> bool {
        matches!(self, RunStatus::GradTol | RunStatus::LocalGradTol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub problem: String,
    pub solver: String,
    pub status: RunStatus,
    pub final_f: Option<f64>,
    pub f_star: Option<f64>,
    /// `final_f − f_star`.
    pub suboptimality: Option<f64>,
    /// Executed steps.
    pub iterations: usize,
    pub total_backtracks: usize,
    pub wall_seconds: f64,
    pub max_hessian_shift: f64,
    /// Slope of `log(f_k − f*)` against `log k`.
    pub rate_slope: Option<f64>,
    pub rate_window: Option<(usize, usize)>,
    /// Whether the harness added this run to estimate `f*`.
    pub reference: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: ExperimentConfig,
    /// Absent when the run could not start.
    pub trace: Option<Trace>,
    pub summary: RunSummary,
}

/// Worker count: `BENCH_THREADS` when set to a positive integer, otherwise
/// one per available core.
pub fn worker_threads() -> usize {
    std::env::var("BENCH_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn reference_config(first: &ExperimentConfig, label: String) -> ExperimentConfig {
    ExperimentConfig {
        label,
        problem: first.problem.clone(),
        solver: SolverSpec::Gn(LineSearchConfig::default()),
        stop: StopCriteria {
            grad_tol: 0.0,
            local_grad_tol: 1e-14,
            max_iters: 1000,
            max_seconds: None,
        },
        output_dir: first.output_dir.clone(),
        record_timing: first.record_timing,
        rate_window: None,
    }
}

fn validate_labels(runs: &[ExperimentConfig]) -> Result<(), HarnessError> {
    let mut seen = HashSet::new();
    for run in runs {
        let ok = !run.label.is_empty()
            && run
                .label
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
        if !ok {
            return Err(HarnessError::InvalidConfig(format!(
                "labels must be nonempty and use only [A-Za-z0-9._-], got {:?}",
                run.label
            )));
        }
        if !seen.insert(run.label.as_str()) {
            return Err(HarnessError::DuplicateLabel(run.label.clone()));
        }
    }
    Ok(())
}

struct Job {
    config: ExperimentConfig,
    reference: bool,
}

struct Finished {
    trace: Result<Trace, SolveError>,
    wall_seconds: f64,
}

fn execute(problem: &dyn TestProblem, config: &ExperimentConfig) -> Finished {
    let start = Instant::now();
    let method = Method::from(config.solver);
    let x0 = problem.default_initial_point();
    let result = method.run(problem, &x0, &config.stop);
    let mut wall_seconds = start.elapsed().as_secs_f64();
    let trace = match result {
        Ok(mut t) => {
            if !config.record_timing {
                wall_seconds = 0.0;
                for r in &mut t.records {
                    r.elapsed_seconds = 0.0;
                }
            }
            Ok(t)
        }
        Err(e) => Err(e),
    };
    Finished {
        trace,
        wall_seconds,
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Runs every configuration, in parallel, and writes `<label>.csv`,
/// `<label>.summary.json` and an `index.json` per output directory.
///
/// Runs that cannot start are reported with status `config_error`; the rest
/// of the batch proceeds. Only invalid or duplicate labels fail the batch.
pub fn run_batch(batch: &BatchConfig, threads: usize) -> Result<Vec<RunOutcome>, HarnessError> {
    validate_labels(&batch.runs)?;

    let mut jobs: Vec<Job> = batch
        .runs
        .iter()
        .map(|c| Job {
            config: c.clone(),
            reference: false,
        })
        .collect();
    let mut problems: HashMap<String, Result<Arc<dyn TestProblem>, String>> = HashMap::new();
    let mut keys_in_order = Vec::new();
    for run in &batch.runs {
        let key = run.problem.key();
        if !problems.contains_key(&key) {
            problems.insert(key.clone(), run.problem.build().map_err(|e| e.to_string()));
            keys_in_order.push((key, run.clone()));
        }
    }
    if batch.reference_runs {
        let taken: HashSet<String> = batch.runs.iter().map(|r| r.label.clone()).collect();
        for (i, (key, first)) in keys_in_order.iter().enumerate() {
            if problems[key].is_err() {
                continue;
            }
            let mut label = format!("reference-{}-{}", first.problem.kind(), i);
            while taken.contains(&label) {
                label.push('_');
            }
            jobs.push(Job {
                config: reference_config(first, label),
                reference: true,
            });
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| HarnessError::InvalidConfig(format!("cannot start workers: {e}")))?;
    let finished: Vec<Option<Finished>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let problem = problems[&job.config.problem.key()].as_ref().ok()?;
                let done = execute(problem.as_ref(), &job.config);
                log::info!(
                    "{}: {}",
                    job.config.label,
                    match &done.trace {
                        Ok(t) => format!("{} after {} steps", t.termination, t.steps()),
                        Err(e) => e.to_string(),
                    }
                );
                Some(done)
            })
            .collect()
    });

    let mut f_stars: HashMap<String, Option<f64>> = HashMap::new();
    for (job, done) in jobs.iter().zip(&finished) {
        if let Some(Finished { trace: Ok(t), .. }) = done {
            let key = job.config.problem.key();
            let prev = f_stars.get(&key).copied().flatten();
            let here = estimate_fstar([t]);
            let merged = match (prev, here) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
            f_stars.insert(key, merged);
        }
    }

    let mut outcomes = Vec::with_capacity(jobs.len());
    for (job, done) in jobs.into_iter().zip(finished) {
        let cfg = job.config;
        let key = cfg.problem.key();
        let f_star = f_stars.get(&key).copied().flatten();
        let mut summary = RunSummary {
            label: cfg.label.clone(),
            problem: cfg.problem.kind().to_string(),
            solver: Method::from(cfg.solver).name().to_string(),
            status: RunStatus::ConfigError,
            final_f: None,
            f_star,
            suboptimality: None,
            iterations: 0,
            total_backtracks: 0,
            wall_seconds: 0.0,
            max_hessian_shift: 0.0,
            rate_slope: None,
            rate_window: None,
            reference: job.reference,
            error: None,
        };
        let mut trace = None;
        match done {
            None => {
                summary.error = problems[&key].as_ref().err().cloned();
            }
            Some(Finished {
                trace: Err(e),
                wall_seconds,
            }) => {
                if !matches!(e, SolveError::InvalidConfig(_)) {
                    summary.status = RunStatus::EvaluationFailure;
                }
                summary.wall_seconds = wall_seconds;
                summary.error = Some(e.to_string());
            }
            Some(Finished {
                trace: Ok(t),
                wall_seconds,
            }) => {
                summary.status = t.termination.into();
                summary.final_f = finite(t.final_value());
                summary.suboptimality = f_star.and_then(|s| finite(t.final_value() - s));
                summary.iterations = t.steps();
                summary.total_backtracks = t.total_backtracks();
                summary.wall_seconds = wall_seconds;
                summary.max_hessian_shift = t.max_hessian_shift();
                summary.error = t.failure.clone();
                let window = cfg.rate_window.unwrap_or((1, t.steps()));
                summary.rate_window = Some(window);
                summary.rate_slope = f_star.and_then(|s| fit_rate(&t, s, window.0, window.1));
                trace = Some(t);
            }
        }
        if let Err(e) = write_run(&cfg, trace.as_ref(), &summary) {
            let msg = format!("writing output failed: {e}");
            log::error!("{}: {msg}", cfg.label);
            summary.error = Some(match summary.error.take() {
                Some(prev) => format!("{prev}; {msg}"),
                None => msg,
            });
        }
        outcomes.push(RunOutcome {
            config: cfg,
            trace,
            summary,
        });
    }

    let mut by_dir: HashMap<PathBuf, Vec<&RunSummary>> = HashMap::new();
    for o in &outcomes {
        by_dir
            .entry(o.config.output_dir.clone())
            .or_default()
            .push(&o.summary);
    }
    for (dir, summaries) in by_dir {
        std::fs::create_dir_all(&dir)?;
        let text = serde_json::to_string_pretty(&summaries)?;
        std::fs::write(dir.join("index.json"), text + "\n")?;
    }
    Ok(outcomes)
}

fn write_run(
    cfg: &ExperimentConfig,
    trace: Option<&Trace>,
    summary: &RunSummary,
) -> Result<(), HarnessError> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    if let Some(t) = trace {
        write_trace_csv(&cfg.output_dir.join(format!("{}.csv", cfg.label)), t)?;
    }
    write_summary_json(
        &cfg.output_dir.join(format!("{}.summary.json", cfg.label)),
        summary,
    )
}
