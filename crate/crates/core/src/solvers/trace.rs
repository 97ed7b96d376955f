use serde::{Deserialize, Serialize};

use crate::oracle::Point;

/// When to stop a run. A run stops at the first criterion met, checked in the
/// order local gradient, gradient, iteration budget, time budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopCriteria {
    /// Stop when `‖∇f‖₂ ≤ grad_tol`.
    pub grad_tol: f64,
    /// Stop when `g_x = ‖∇f‖_x* ≤ local_grad_tol`.
    pub local_grad_tol: f64,
    pub max_iters: usize,
    /// Wall-clock budget; `None` means unlimited.
    pub max_seconds: Option<f64>,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self {
            grad_tol: 0.0,
            local_grad_tol: 1e-10,
            max_iters: 500,
            max_seconds: None,
        }
    }
}

impl StopCriteria {
    pub fn with_local_tol(mut self, tol: f64) -> Self {
        self.local_grad_tol = tol;
        self
    }

    pub fn with_grad_tol(mut self, tol: f64) -> Self {
        self.grad_tol = tol;
        self
    }

    pub fn with_max_iters(mut self, iters: usize) -> Self {
        self.max_iters = iters;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.grad_tol >= 0.0) || !(self.local_grad_tol >= 0.0) {
            return Err("tolerances must be nonnegative".into());
        }
        if self.max_iters == 0 {
            return Err("max_iters must be at least 1".into());
        }
        if let Some(s) = self.max_seconds {
            if !(s > 0.0) {
                return Err(format!("max_seconds must be positive, got {s}"));
            }
        }
        Ok(())
    }
}

/// State at iterate `x^k` and the step taken from it.
///
/// The final record of a trace describes the point the run stopped at; it has
/// no `stepsize` unless the run ended on a failed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    #[serde(rename = "f")]
    pub f_value: f64,
    pub grad_norm_l2: f64,
    /// `g_x = ‖∇f(x^k)‖_{x^k}*`; NaN for first-order methods, which never
    /// form the Hessian.
    pub local_grad_norm: f64,
    pub stepsize: Option<f64>,
    pub theta: Option<f64>,
    /// Backtracking index `j_k` for the universal method, number of trial
    /// evaluations for linesearches, zero otherwise.
    pub backtracks: usize,
    pub hessian_shift: f64,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradTol,
    LocalGradTol,
    MaxIters,
    MaxSeconds,
    EvaluationFailure,
}

impl Termination {
    /// Whether the run reached a tolerance, as opposed to running out of
    /// budget or failing.
    pub fn converged(self) -> bool {
        matches!(self, Termination::GradTol | Termination::LocalGradTol)
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::GradTol => "grad_tol",
            Termination::LocalGradTol => "local_grad_tol",
            Termination::MaxIters => "max_iters",
            Termination::MaxSeconds => "max_seconds",
            Termination::EvaluationFailure => "evaluation_failure",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<IterationRecord>,
    pub final_point: Point,
    pub termination: Termination,
    /// Human-readable cause when `termination` is `EvaluationFailure`.
    pub failure: Option<String>,
}

impl Trace {
    /// Number of executed steps. Every record but the last is followed by a
    /// step to the next record's point.
    pub fn steps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("traces are nonempty")
    }

    pub fn final_value(&self) -> f64 {
        self.last().f_value
    }

    /// Stepsizes of executed steps, in order.
    pub fn stepsizes(&self) -> Vec<f64> {
        self.records[..self.steps()]
            .iter()
            .map(|r| r.stepsize.unwrap_or(f64::NAN))
            .collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.f_value).collect()
    }

    pub fn local_grad_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.local_grad_norm).collect()
    }

    pub fn total_backtracks(&self) -> usize {
        self.records.iter().map(|r| r.backtracks).sum()
    }

    pub fn max_hessian_shift(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.hessian_shift)
            .fold(0.0, f64::max)
    }
}
