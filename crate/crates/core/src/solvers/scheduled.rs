use super::driver::{newton_loop, StepResult};
use super::{require, SolveError, StopCriteria, Trace};
use crate::geometry::factorize_spd;
use crate::oracle::{Objective, Point};
use crate::schedules::Schedule;

/// Newton's method with the stepsize taken from a closed-form rule:
/// `x^{k+1} = x^k − α_k n^k`, `α_k = schedule(g_k)`.
pub fn run_scheduled_newton<O: Objective + ?Sized>(
    oracle: &O,
    x0: &Point,
    schedule: &Schedule,
    stop: &StopCriteria,
) -> Result<Trace, SolveError> {
    schedule
        .validate()
        .map_err(|e| SolveError::InvalidConfig(e.to_string()))?;
    newton_loop(oracle, x0, stop, |s| {
        match schedule.step(s.newton.local_grad_norm) {
            Ok(step) => StepResult::Step {
                next: s.x - &s.newton.direction * step.alpha,
                alpha: step.alpha,
                theta: step.theta,
                backtracks: 0,
            },
            Err(e) => StepResult::Failed {
                reason: e.to_string(),
                backtracks: 0,
            },
        }
    })
}

/// Gradient-regularized Newton: `x^{k+1} = x^k − (∇²f + σ‖∇f‖₂^β I)⁻¹ ∇f`.
///
/// The recorded `hessian_shift` is that of the unregularized Hessian.
pub fn run_grn<O: Objective + ?Sized>(
    oracle: &O,
    x0: &Point,
    sigma: f64,
    beta: f64,
    stop: &StopCriteria,
) -> Result<Trace, SolveError> {
    require(sigma >= 0.0 && sigma.is_finite(), || {
        format!("sigma must be finite and nonnegative, got {sigma}")
    })?;
    require(beta >= 0.0 && beta.is_finite(), || {
        format!("beta must be finite and nonnegative, got {beta}")
    })?;
    newton_loop(oracle, x0, stop, |s| {
        let reg = sigma * s.gradient.norm().powf(beta);
        let direction = if reg == 0.0 {
            s.newton.direction.clone()
        } else {
            let mut shifted = s.hessian.clone();
            for i in 0..shifted.nrows() {
                shifted[(i, i)] += reg;
            }
            match factorize_spd(&shifted) {
                Ok(f) => f.solve(s.gradient),
                Err(e) => {
                    return StepResult::Failed {
                        reason: format!("regularized factorization failed: {e}"),
                        backtracks: 0,
                    }
                }
            }
        };
        StepResult::Step {
            next: s.x - direction,
            alpha: 1.0,
            theta: None,
            backtracks: 0,
        }
    })
}
