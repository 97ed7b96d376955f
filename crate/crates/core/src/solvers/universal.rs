use serde::{Deserialize, Serialize};

use super::driver::{newton_loop, StepResult};
use super::{require, SolveError, StopCriteria, Trace};
use crate::oracle::{evaluate_gradient, Objective, Point};

/// Constants of the universal backtracking method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnConfig {
    /// Initial regularization estimate `σ₀ > 0`.
    pub sigma0: f64,
    /// Exponent `β ∈ [2/3, 1]` on `g_k`.
    pub beta: f64,
    /// Growth factor `γ > 1` applied on each rejected trial.
    pub gamma: f64,
    pub max_backtracks_per_iter: usize,
}

impl Default for UnConfig {
    fn default() -> Self {
        Self {
            sigma0: 1e-3,
            beta: 1.0,
            gamma: 2.0,
            max_backtracks_per_iter: 60,
        }
    }
}

impl UnConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        require(self.sigma0 > 0.0 && self.sigma0.is_finite(), || {
            format!("sigma0 must be positive and finite, got {}", self.sigma0)
        })?;
        require((2.0 / 3.0..=1.0).contains(&self.beta), || {
            format!("beta must lie in [2/3, 1], got {}", self.beta)
        })?;
        require(self.gamma > 1.0 && self.gamma.is_finite(), || {
            format!("gamma must exceed 1, got {}", self.gamma)
        })
    }
}

/// One trial point of the inner loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnTrial {
    pub iter: usize,
    pub j: usize,
    /// `σ_k` in force at this outer iteration.
    pub sigma: f64,
    pub theta: f64,
    pub alpha: f64,
    /// `⟨∇f(y), n^k⟩`; NaN when the trial point could not be evaluated.
    pub lhs: f64,
    /// `‖∇f(y)‖*²_{x^k} / (2αθ)`.
    pub rhs: f64,
    pub accepted: bool,
}

/// Universal Newton: backtracks on `θ = γ^j σ_k g_k^β` until
/// `⟨∇f(y), n^k⟩ ≥ ‖∇f(y)‖*²_{x^k} / (2αθ)` holds at `y = x^k − α n^k`,
/// then relaxes `σ_{k+1} = γ^{j−1} σ_k`.
pub fn run_un<O: Objective + ?Sized>(
    oracle: &O,
    x0: &Point,
    cfg: &UnConfig,
    stop: &StopCriteria,
) -> Result<Trace, SolveError> {
    run_inner(oracle, x0, cfg, stop, None)
}

/// [`run_un`] that also returns every trial of the inner loop.
pub fn run_un_logged<O: Objective + ?Sized>(
    oracle: &O,
    x0: &Point,
    cfg: &UnConfig,
    stop: &StopCriteria,
) -> Result<(Trace, Vec<UnTrial>), SolveError> {
    let mut log = Vec::new();
    let trace = run_inner(oracle, x0, cfg, stop, Some(&mut log))?;
    Ok((trace, log))
}

fn run_inner<O: Objective + ?Sized>(
    oracle: &O,
    x0: &Point,
    cfg: &UnConfig,
    stop: &StopCriteria,
    mut log: Option<&mut Vec<UnTrial>>,
) -> Result<Trace, SolveError> {
    cfg.validate()?;
    let mut sigma = cfg.sigma0;
    let mut iter = 0usize;
    newton_loop(oracle, x0, stop, |s| {
        let g = s.newton.local_grad_norm;
        let n = &s.newton.direction;
        let base = sigma * g.powf(cfg.beta);
        let k = iter;
        iter += 1;
        for j in 0..=cfg.max_backtracks_per_iter {
            let theta = cfg.gamma.powi(j as i32) * base;
            let alpha = 1.0 / (1.0 + theta);
            let y = s.x - n * alpha;
            let (lhs, rhs) = match evaluate_gradient(oracle, &y) {
                Ok(gy) => {
                    let dual = s.fact.dual_norm(&gy);
                    (gy.dot(n), dual * dual / (2.0 * alpha * theta))
                }
                Err(_) => (f64::NAN, f64::NAN),
            };
            let accepted = lhs >= rhs;
            if let Some(log) = log.as_deref_mut() {
                log.push(UnTrial {
                    iter: k,
                    j,
                    sigma,
                    theta,
                    alpha,
                    lhs,
                    rhs,
                    accepted,
                });
            }
            if accepted {
                sigma *= cfg.gamma.powi(j as i32 - 1);
                return StepResult::Step {
                    next: y,
                    alpha,
                    theta: Some(theta),
                    backtracks: j,
                };
            }
        }
        StepResult::Failed {
            reason: format!(
                "no trial accepted within {} backtracks",
                cfg.max_backtracks_per_iter
            ),
            backtracks: cfg.max_backtracks_per_iter,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::QuadraticProblem;
    use nalgebra::{dvector, DVector};

    #[test]
    fn half_square_accepts_immediately() {
        let p = QuadraticProblem::half_squared_norm(1);
        for sigma0 in [1e-3, 0.7, 42.0] {
            let cfg = UnConfig {
                sigma0,
                ..UnConfig::default()
            };
            let stop = StopCriteria::default().with_max_iters(1);
            let (t, log) = run_un_logged(&p, &dvector![1.0], &cfg, &stop).unwrap();
            assert_eq!(log.len(), 1);
            assert!(log[0].accepted);
            assert!((log[0].lhs / log[0].rhs - 2.0).abs() < 1e-12);
            let theta = sigma0;
            assert!((t.final_point[0] - theta / (1.0 + theta)).abs() < 1e-15);
            assert_eq!(t.records[0].backtracks, 0);
        }
    }

    #[test]
    fn sigma_relaxes_after_immediate_acceptance() {
        let p = QuadraticProblem::random(5, 10.0, 3).unwrap();
        let cfg = UnConfig {
            sigma0: 1e6,
            ..UnConfig::default()
        };
        let stop = StopCriteria::default().with_max_iters(8);
        let (_, log) = run_un_logged(&p, &DVector::from_element(5, 1.0), &cfg, &stop).unwrap();
        let accepted: Vec<_> = log.iter().filter(|t| t.accepted).collect();
        assert_eq!(accepted.len(), 8);
        assert!(accepted[0].alpha < 1e-5);
        for w in accepted.windows(2) {
            assert_eq!(w[0].j, 0);
            assert_eq!(w[1].sigma, w[0].sigma / 2.0);
        }
    }

    #[test]
    fn stationary_start() {
        let p = QuadraticProblem::half_squared_norm(3);
        let t = run_un(&p, &DVector::zeros(3), &UnConfig::default(), &StopCriteria::default())
            .unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.termination, crate::solvers::Termination::LocalGradTol);
    }

    #[test]
    fn config_ranges() {
        let bad = [
            UnConfig { beta: 0.5, ..UnConfig::default() },
            UnConfig { gamma: 1.0, ..UnConfig::default() },
            UnConfig { sigma0: 0.0, ..UnConfig::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
        assert!(UnConfig { beta: 2.0 / 3.0, ..UnConfig::default() }.validate().is_ok());
    }
}
