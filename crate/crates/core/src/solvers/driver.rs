//! Iteration loop shared by every method that steps along the Newton ray.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::trace::{IterationRecord, StopCriteria, Termination, Trace};
use super::SolveError;
use crate::geometry::{factorize_spd, FactorizedHessian, NewtonData};
use crate::oracle::{evaluate, Objective, Point};

/// Everything known at `x^k` before a step is chosen.
pub(crate) struct IterState<'a> {
    pub x: &'a Point,
    pub value: f64,
    pub gradient: &'a DVector<f64>,
    pub hessian: &'a DMatrix<f64>,
    pub fact: &'a FactorizedHessian,
    pub newton: &'a NewtonData,
}

pub(crate) enum StepResult {
    Step {
        next: Point,
        alpha: f64,
        theta: Option<f64>,
        backtracks: usize,
    },
    Failed {
        reason: String,
        backtracks: usize,
    },
}

pub(crate) struct Clock {
    start: Instant,
}

impl Clock {
    pub fn start() -> Self {
        Self {
            start: Instant::now(),
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

/// Checks the stopping rules against the record of the current iterate.
pub(crate) fn stop_reason(
    stop: &StopCriteria,
    rec: &IterationRecord,
    local_checked: bool,
) -> Option<Termination> {
    if local_checked
        && (rec.local_grad_norm <= stop.local_grad_tol || rec.local_grad_norm == 0.0)
    {
        return Some(Termination::LocalGradTol);
    }
    if rec.grad_norm_l2 <= stop.grad_tol {
        return Some(Termination::GradTol);
    }
    if rec.iter >= stop.max_iters {
        return Some(Termination::MaxIters);
    }
    if let Some(limit) = stop.max_seconds {
        if rec.elapsed_seconds >= limit {
            return Some(Termination::MaxSeconds);
        }
    }
    None
}

/// Runs `x^{k+1} = step(x^k)` with a fresh Hessian factorization at every
/// iterate until a stopping rule fires or a step fails.
pub(crate) fn newton_loop<O, F>(
    oracle: &O,
    x0: &Point,
    stop: &StopCriteria,
    mut step: F,
) -> Result<Trace, SolveError>
where
    O: Objective + ?Sized,
    F: FnMut(&IterState<'_>) -> StepResult,
{
    stop.validate().map_err(SolveError::InvalidConfig)?;
    let clock = Clock::start();
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut x = x0.clone();
    let mut last_good = x0.clone();

    for k in 0.. {
        let bundle = match evaluate(oracle, &x, true) {
            Ok(b) => b,
            Err(e) if k == 0 => return Err(SolveError::InitialEvaluation(e)),
            Err(e) => return Ok(failed(records, last_good, format!("evaluation failed: {e}"))),
        };
        let hessian = bundle.hessian.as_ref().expect("requested");
        let fact = match factorize_spd(hessian) {
            Ok(f) => f,
            Err(e) if k == 0 => return Err(SolveError::InitialFactorization(e)),
            Err(e) => {
                return Ok(failed(records, last_good, format!("factorization failed: {e}")))
            }
        };
        let newton = fact.newton_data(&bundle.gradient);
        let mut rec = IterationRecord {
            iter: k,
            f_value: bundle.value,
            grad_norm_l2: bundle.gradient.norm(),
            local_grad_norm: newton.local_grad_norm,
            stepsize: None,
            theta: None,
            backtracks: 0,
            hessian_shift: fact.shift(),
            elapsed_seconds: clock.elapsed(),
        };
        if let Some(termination) = stop_reason(stop, &rec, true) {
            records.push(rec);
            return Ok(Trace {
                records,
                final_point: x,
                termination,
                failure: None,
            });
        }

        let state = IterState {
            x: &x,
            value: bundle.value,
            gradient: &bundle.gradient,
            hessian,
            fact: &fact,
            newton: &newton,
        };
        match step(&state) {
            StepResult::Step {
                next,
                alpha,
                theta,
                backtracks,
            } => {
                rec.stepsize = Some(alpha);
                rec.theta = theta;
                rec.backtracks = backtracks;
                records.push(rec);
                last_good = std::mem::replace(&mut x, next);
            }
            StepResult::Failed { reason, backtracks } => {
                rec.backtracks = backtracks;
                records.push(rec);
                return Ok(Trace {
                    records,
                    final_point: x,
                    termination: Termination::EvaluationFailure,
                    failure: Some(reason),
                });
            }
        }
    }
    unreachable!("the iteration counter is unbounded")
}

/// Ends a run whose latest step led to a point that could not be evaluated
/// or factorized. The trace stops at the last good iterate.
pub(crate) fn failed(records: Vec<IterationRecord>, last_good: Point, reason: String) -> Trace {
    Trace {
        records,
        final_point: last_good,
        termination: Termination::EvaluationFailure,
        failure: Some(reason),
    }
}
