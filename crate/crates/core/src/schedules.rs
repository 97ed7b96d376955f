//! Closed-form Newton stepsize rules and the regularization-polynomial root
//! that ties each stepsize to a regularized second-order model.
//!
//! A Newton step `x⁺ = x − α n_x` with `α` the positive root of
//! `P[α] = 1 − α − α^{1+β} σ g_x^β` is the exact minimizer of the model
//! `f(x) + ⟨∇f, h⟩ + ½‖h‖²_x + σ/(2+β) ‖h‖_x^{2+β}`. The Root Newton rule picks
//! `θ` so that `α = 1/(1+θ)` is that root without any scalar solve.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Iterations of bisection in [`regularization_root`]; `2⁻⁸⁰` is far below
/// double precision on `[0, 1]`.
const ROOT_BISECTIONS: usize = 80;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    /// `g_x = 0`: the iterate is stationary and no stepsize is defined.
    #[error("local gradient norm is zero; the iterate is stationary")]
    Converged,
    #[error("invalid schedule parameter: {0}")]
    InvalidParameter(String),
}

/// `θ = (9 M_q)^{1/(q−1)} g_x^{(q−2)/(q−1)}`.
///
/// For `q = 2` the exponent on `g_x` is zero and `θ = 9 M_q` regardless of
/// `g_x` (including `g_x = 0`).
pub fn rn_theta(q: f64, m_q: f64, g_x: f64) -> f64 {
    debug_assert!((2.0..=4.0).contains(&q) && m_q >= 0.0 && g_x >= 0.0);
    if m_q == 0.0 {
        return 0.0;
    }
    let grad_exp = (q - 2.0) / (q - 1.0);
    let g_term = if grad_exp == 0.0 { 1.0 } else { g_x.powf(grad_exp) };
    (9.0 * m_q).powf(1.0 / (q - 1.0)) * g_term
}

/// `α = 1/(1+θ)`, the root of `1 − α − αθ`.
pub fn rn_stepsize(theta: f64) -> f64 {
    debug_assert!(theta >= 0.0);
    1.0 / (1.0 + theta)
}

/// Stepsize equivalent to cubic regularization in local norms:
/// `2 / (1 + √(1 + 2σ g_x))`.
pub fn aicn_stepsize(sigma: f64, g_x: f64) -> f64 {
    debug_assert!(sigma >= 0.0 && g_x >= 0.0);
    2.0 / (1.0 + (1.0 + 2.0 * sigma * g_x).sqrt())
}

/// Classical damped Newton for self-concordant functions: `1/(1 + L_sc g_x)`.
pub fn damped_newton_b_stepsize(l_sc: f64, g_x: f64) -> f64 {
    debug_assert!(l_sc >= 0.0 && g_x >= 0.0);
    1.0 / (1.0 + l_sc * g_x)
}

/// `α = ((σ+1) g_x^β)^{−1/(1+β)}`, which grows without bound as `g_x → 0`.
pub fn unbounded_stepsize(sigma: f64, beta: f64, g_x: f64) -> Result<f64, ScheduleError> {
    if !(sigma >= 0.0) || !(beta > 0.0) {
        return Err(ScheduleError::InvalidParameter(format!(
            "unbounded stepsize needs sigma >= 0 and beta > 0, got sigma={sigma}, beta={beta}"
        )));
    }
    if g_x <= 0.0 {
        return Err(ScheduleError::Converged);
    }
    Ok((1.0 / ((sigma + 1.0) * g_x.powf(beta))).powf(1.0 / (1.0 + beta)))
}

/// Evaluates `P[α] = 1 − α − α^{1+β} σ g_x^β`.
pub fn regularization_polynomial(alpha: f64, sigma: f64, beta: f64, g_x: f64) -> f64 {
    1.0 - alpha - alpha.powf(1.0 + beta) * sigma * g_x.powf(beta)
}

/// The unique root in `(0, 1]` of [`regularization_polynomial`], by bisection.
///
/// `P[0] = 1 > 0`, `P[1] = −σ g_x^β ≤ 0` and `P` is strictly decreasing on
/// `ℝ₊`, so the bracket never breaks.
pub fn regularization_root(sigma: f64, beta: f64, g_x: f64) -> f64 {
    debug_assert!(sigma >= 0.0 && beta >= 0.0 && g_x >= 0.0);
    let coef = sigma * if beta == 0.0 { 1.0 } else { g_x.powf(beta) };
    if coef == 0.0 {
        return 1.0;
    }
    let p = |a: f64| 1.0 - a - a.powf(1.0 + beta) * coef;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..ROOT_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if p(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    if p(mid).abs() <= p(hi).abs() {
        mid
    } else {
        hi
    }
}

/// Constants `(A₁, A₂)` of the weighted AM–GM bound
/// `Σ a_k x^{b_k} ≤ A₁ + A₂ x^p` for `x ≥ 0`, valid whenever `p ≥ max b_k`.
pub fn polynomial_ag_bound(
    coefficients: &[f64],
    exponents: &[f64],
    p: f64,
) -> Result<(f64, f64), ScheduleError> {
    if coefficients.len() != exponents.len() {
        return Err(ScheduleError::InvalidParameter(format!(
            "{} coefficients but {} exponents",
            coefficients.len(),
            exponents.len()
        )));
    }
    if !(p > 0.0) {
        return Err(ScheduleError::InvalidParameter(format!(
            "degree p must be positive, got {p}"
        )));
    }
    let mut a1 = 0.0;
    let mut a2 = 0.0;
    for (&a, &b) in coefficients.iter().zip(exponents) {
        if !(a >= 0.0) || !(b >= 0.0) {
            return Err(ScheduleError::InvalidParameter(format!(
                "terms need a >= 0 and b >= 0, got a={a}, b={b}"
            )));
        }
        if b > p {
            return Err(ScheduleError::InvalidParameter(format!(
                "degree p={p} is below exponent {b}"
            )));
        }
        a1 += a * (p - b);
        a2 += a * b;
    }
    Ok((a1 / p, a2 / p))
}

/// A closed-form stepsize rule and the constants it reads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// Root Newton with Hölder exponent `q ∈ [2,4]` and constant `M_q`.
    RootNewton { q: f64, m_q: f64 },
    Aicn { sigma: f64 },
    DampedNewtonB { l_sc: f64 },
    Fixed { alpha: f64 },
    Unbounded { sigma: f64, beta: f64 },
}

/// Output of a schedule at one iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledStep {
    pub alpha: f64,
    /// Regularization `θ` with `α = 1/(1+θ)`, for rules that define one.
    pub theta: Option<f64>,
}

fn nonneg_finite(name: &str, v: f64) -> Result<(), ScheduleError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ScheduleError::InvalidParameter(format!(
            "{name} must be finite and nonnegative, got {v}"
        )))
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        match *self {
            Schedule::RootNewton { q, m_q } => {
                if !(2.0..=4.0).contains(&q) {
                    return Err(ScheduleError::InvalidParameter(format!(
                        "q must lie in [2, 4], got {q}"
                    )));
                }
                nonneg_finite("M_q", m_q)
            }
            Schedule::Aicn { sigma } => nonneg_finite("sigma", sigma),
            Schedule::DampedNewtonB { l_sc } => nonneg_finite("L_sc", l_sc),
            Schedule::Fixed { alpha } => {
                if alpha > 0.0 && alpha <= 1.0 {
                    Ok(())
                } else {
                    Err(ScheduleError::InvalidParameter(format!(
                        "fixed stepsize must lie in (0, 1], got {alpha}"
                    )))
                }
            }
            Schedule::Unbounded { sigma, beta } => {
                nonneg_finite("sigma", sigma)?;
                nonneg_finite("beta", beta)?;
                if beta == 0.0 {
                    return Err(ScheduleError::InvalidParameter(
                        "unbounded rule needs beta > 0".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Stepsize at an iterate with local gradient norm `g_x`.
    ///
    /// `g_x = 0` always yields [`ScheduleError::Converged`].
    pub fn step(&self, g_x: f64) -> Result<ScheduledStep, ScheduleError> {
        if !(g_x > 0.0) {
            return Err(ScheduleError::Converged);
        }
        Ok(match *self {
            Schedule::RootNewton { q, m_q } => {
                let theta = rn_theta(q, m_q, g_x);
                ScheduledStep {
                    alpha: rn_stepsize(theta),
                    theta: Some(theta),
                }
            }
            Schedule::Aicn { sigma } => ScheduledStep {
                alpha: aicn_stepsize(sigma, g_x),
                theta: None,
            },
            Schedule::DampedNewtonB { l_sc } => {
                let theta = l_sc * g_x;
                ScheduledStep {
                    alpha: damped_newton_b_stepsize(l_sc, g_x),
                    theta: Some(theta),
                }
            }
            Schedule::Fixed { alpha } => ScheduledStep { alpha, theta: None },
            Schedule::Unbounded { sigma, beta } => ScheduledStep {
                alpha: unbounded_stepsize(sigma, beta, g_x)?,
                theta: None,
            },
        })
    }
}
