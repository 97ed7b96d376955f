//! Iteration drivers for Newton-type methods and first-order baselines.

mod driver;
mod gradient;
mod linesearch;
mod scheduled;
mod trace;
mod universal;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::oracle::{Objective, OracleError, Point};
use crate::schedules::Schedule;

pub use gradient::{run_gradient_method, GradientStep};
pub use linesearch::{
    minimize_scalar, run_armijo_newton, run_greedy_newton, run_grls, LineSearchConfig,
};
pub use scheduled::{run_grn, run_scheduled_newton};
pub use trace::{IterationRecord, StopCriteria, Termination, Trace};
pub use universal::{run_un, run_un_logged, UnConfig, UnTrial};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot evaluate the initial point: {0}")]
    InitialEvaluation(#[from] OracleError),
    #[error("cannot factorize the Hessian at the initial point: {0}")]
    InitialFactorization(#[from] GeometryError),
}

/// Any of the implemented methods together with its constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Scheduled { schedule: Schedule },
    Universal(UnConfig),
    Grls(LineSearchConfig),
    GreedyNewton(LineSearchConfig),
    ArmijoNewton { c1: f64, shrink: f64 },
    Grn { sigma: f64, beta: f64 },
    Gradient { rule: GradientStep },
}

impl Method {
    /// Short name used in logs and summaries.
    pub fn name(&self) -> &'static str {
        match self {
            Method::Scheduled { schedule } => match schedule {
                Schedule::RootNewton { .. } => "rn",
                Schedule::Aicn { .. } => "aicn",
                Schedule::DampedNewtonB { .. } => "damped_newton_b",
                Schedule::Fixed { .. } => "fixed_newton",
                Schedule::Unbounded { .. } => "unbounded_newton",
            },
            Method::Universal(_) => "un",
            Method::Grls(_) => "grls",
            Method::GreedyNewton(_) => "gn",
            Method::ArmijoNewton { .. } => "armijo_newton",
            Method::Grn { .. } => "grn",
            Method::Gradient { .. } => "gradient",
        }
    }

    pub fn run<O: Objective + ?Sized>(
        &self,
        oracle: &O,
        x0: &Point,
        stop: &StopCriteria,
    ) -> Result<Trace, SolveError> {
        match *self {
            Method::Scheduled { schedule } => run_scheduled_newton(oracle, x0, &schedule, stop),
            Method::Universal(cfg) => run_un(oracle, x0, &cfg, stop),
            Method::Grls(cfg) => run_grls(oracle, x0, &cfg, stop),
            Method::GreedyNewton(cfg) => run_greedy_newton(oracle, x0, &cfg, stop),
            Method::ArmijoNewton { c1, shrink } => run_armijo_newton(oracle, x0, c1, shrink, stop),
            Method::Grn { sigma, beta } => run_grn(oracle, x0, sigma, beta, stop),
            Method::Gradient { rule } => run_gradient_method(oracle, x0, &rule, stop),
        }
    }
}

/// Tolerance for treating two function values as equal: a few ulps of `|f|`.
pub(crate) fn value_noise(f: f64) -> f64 {
    8.0 * f64::EPSILON * f.abs() + f64::MIN_POSITIVE
}

pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), SolveError> {
    if cond {
        Ok(())
    } else {
        Err(SolveError::InvalidConfig(msg()))
    }
}
