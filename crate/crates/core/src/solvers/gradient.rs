use serde::{Deserialize, Serialize};

use super::driver::{failed, stop_reason, Clock};
use super::{require, value_noise, SolveError, StopCriteria, Termination, Trace};
use super::trace::IterationRecord;
use crate::oracle::{evaluate, evaluate_value, Objective, Point};

/// Stepsize rule of the gradient method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GradientStep {
    /// `η = 1/L`.
    Fixed { lipschitz: f64 },
    /// Backtrack from `initial` by `shrink` until
    /// `f(x − η∇f) ≤ f(x) − c1 η ‖∇f‖²`.
    Armijo { initial: f64, c1: f64, shrink: f64 },
}

impl GradientStep {
    pub fn validate(&self) -> Result<(), SolveError> {
        match *self {
            GradientStep::Fixed { lipschitz } => require(lipschitz > 0.0 && lipschitz.is_finite(), || {
                format!("Lipschitz constant must be positive, got {lipschitz}")
            }),
            GradientStep::Armijo { initial, c1, shrink } => {
                require(initial > 0.0 && initial.is_finite(), || {
                    format!("initial stepsize must be positive, got {initial}")
                })?;
                require(c1 > 0.0 && c1 < 1.0, || format!("c1 must lie in (0, 1), got {c1}"))?;
                require(shrink > 0.0 && shrink < 1.0, || {
                    format!("shrink must lie in (0, 1), got {shrink}")
                })
            }
        }
    }
}

/// `x^{k+1} = x^k − η_k ∇f(x^k)`. Never forms a Hessian, so the local
/// gradient norm is recorded as NaN and only the Euclidean tolerance applies.
pub fn run_gradient_method<O: Objective + ?Sized>(
    oracle: &O,
    x0: &Point,
    rule: &GradientStep,
    stop: &StopCriteria,
) -> Result<Trace, SolveError> {
    rule.validate()?;
    stop.validate().map_err(SolveError::InvalidConfig)?;
    let clock = Clock::start();
    let mut records = Vec::new();
    let mut x = x0.clone();
    let mut last_good = x0.clone();
    for k in 0.. {
        let b = match evaluate(oracle, &x, false) {
            Ok(b) => b,
            Err(e) if k == 0 => return Err(SolveError::InitialEvaluation(e)),
            Err(e) => return Ok(failed(records, last_good, format!("evaluation failed: {e}"))),
        };
        let gnorm = b.gradient.norm();
        let mut rec = IterationRecord {
            iter: k,
            f_value: b.value,
            grad_norm_l2: gnorm,
            local_grad_norm: f64::NAN,
            stepsize: None,
            theta: None,
            backtracks: 0,
            hessian_shift: 0.0,
            elapsed_seconds: clock.elapsed(),
        };
        if let Some(t) = stop_reason(stop, &rec, false) {
            records.push(rec);
            return Ok(Trace { records, final_point: x, termination: t, failure: None });
        }
        let (eta, count) = match *rule {
            GradientStep::Fixed { lipschitz } => (1.0 / lipschitz, 0),
            GradientStep::Armijo { initial, c1, shrink } => {
                let slack = value_noise(b.value);
                let mut eta = initial;
                let mut count = 0;
                loop {
                    count += 1;
                    let ok = evaluate_value(oracle, &(&x - &b.gradient * eta))
                        .map(|v| v <= b.value && v <= b.value - c1 * eta * gnorm * gnorm + slack)
                        .unwrap_or(false);
                    if ok {
                        break (eta, count);
                    }
                    eta *= shrink;
                    if eta < 1e-300 {
                        rec.backtracks = count;
                        records.push(rec);
                        return Ok(Trace {
                            records,
                            final_point: x,
                            termination: Termination::EvaluationFailure,
                            failure: Some("Armijo stepsize underflow".into()),
                        });
                    }
                }
            }
        };
        rec.stepsize = Some(eta);
        rec.backtracks = count;
        let next = &x - &b.gradient * eta;
        records.push(rec);
        last_good = std::mem::replace(&mut x, next);
    }
    unreachable!("the iteration counter is unbounded")
}
