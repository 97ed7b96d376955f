use std::cell::Cell;

use serde::{Deserialize, Serialize};

use super::driver::{newton_loop, StepResult};
use super::{require, value_noise, SolveError, StopCriteria, Trace};
use crate::oracle::{evaluate, evaluate_gradient, evaluate_value, Objective, Point};

const GRID_POINTS: usize = 32;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Dual norms below this count as an exact stationary point.
const STATIONARY_DUAL: f64 = 1e-14;

/// Search range and budget for the exact linesearches along the Newton ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineSearchConfig {
    /// Upper end of the stepsize range `(0, alpha_max]`.
    pub alpha_max: f64,
    /// Function evaluations per linesearch.
    pub evals: usize,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            alpha_max: 8.0,
            evals: 64,
        }
    }
}

impl LineSearchConfig {
    /// Restricts the search to `(0, 1]`.
    pub fn unit_interval() -> Self {
        Self {
            alpha_max: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        require(self.alpha_max >= 1.0 && self.alpha_max.is_finite(), || {
            format!("alpha_max must be finite and >= 1, got {}", self.alpha_max)
        })?;
        // Two evaluations go to the unit step and a final check.
        require(self.evals >= MIN_EVALS, || {
            format!("a linesearch needs at least {MIN_EVALS} evaluations, got {}", self.evals)
        })
    }
}

/// Minimizes `phi` over `[lo, hi]` with at most `evals` evaluations.
///
/// A uniform grid (32 points, fewer when `evals < 48`) locates the best cell,
/// which golden-section search then refines. Non-finite values count as `+∞`.
/// Returns the best point sampled, so the result is never worse than the grid.
pub fn minimize_scalar<F: FnMut(f64) -> f64>(
    mut phi: F,
    lo: f64,
    hi: f64,
    evals: usize,
) -> (f64, f64) {
    assert!(lo < hi, "empty interval [{lo}, {hi}]");
    assert!(evals >= 16, "need at least 16 evaluations");
    let mut eval = |t: f64| {
        let v = phi(t);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let n = if evals < 48 { evals / 2 } else { GRID_POINTS };
    let node = |i: usize| {
        if i + 1 == n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    };
    let mut best = (lo, f64::INFINITY);
    let mut best_i = 0;
    for i in 0..n {
        let t = node(i);
        let v = eval(t);
        if v < best.1 {
            best = (t, v);
            best_i = i;
        }
    }
    let mut budget = evals - n;
    let mut a = node(best_i.saturating_sub(1));
    let mut b = node((best_i + 1).min(n - 1));
    if budget < 2 || a == b {
        return best;
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c);
    let mut fd = eval(d);
    budget -= 2;
    for (t, v) in [(c, fc), (d, fd)] {
        if v < best.1 {
            best = (t, v);
        }
    }
    while budget > 0 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c);
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d);
            if fd < best.1 {
                best = (d, fd);
            }
        }
        budget -= 1;
    }
    best
}

/// Fallback for a search whose samples all lost to `α = 0`: along a descent
/// direction `phi` is negative close to 0, so halve from `start` until it is,
/// then refine on `(0, 2α)`.
fn search_near_zero<F: FnMut(f64) -> f64>(mut phi: F, start: f64) -> Option<(f64, f64)> {
    let mut a = start;
    for _ in 0..MAX_HALVINGS {
        a *= 0.5;
        let v = phi(a);
        if v < 0.0 {
            let (b, vb) = minimize_scalar(&mut phi, 0.0, 2.0 * a, 16);
            return Some(if vb < v { (b, vb) } else { (a, v) });
        }
    }
    None
}

const MAX_HALVINGS: usize = 60;

/// Greedy Newton: `α_k` minimizes `f(x^k − α n^k)` over `(0, alpha_max]`.
///
/// The unit step wins ties within rounding of `f`, which makes the method
/// exact on quadratics and stable once `f` stops changing.
pub fn run_greedy_newton<O: Objective + ?Sized>(
    oracle: &O,
    x0: &Point,
    cfg: &LineSearchConfig,
    stop: &StopCriteria,
) -> Result<Trace, SolveError> {
    cfg.validate()?;
    newton_loop(oracle, x0, stop, |s| {
        let n = &s.newton.direction;
        let noise = value_noise(s.value);
        let mut count = 0usize;
        let mut decrease = |alpha: f64| {
            count += 1;
            match evaluate_value(oracle, &(s.x - n * alpha)) {
                Ok(v) => v - s.value,
                Err(_) => f64::INFINITY,
            }
        };
        let unit = decrease(1.0);
        let (mut alpha, mut best) = minimize_scalar(&mut decrease, 0.0, cfg.alpha_max, cfg.evals - 2 - POLISH_EVALS);
        if unit <= best + noise {
            alpha = 1.0;
            best = unit;
        } else if alpha == 0.0 {
            let spacing = cfg.alpha_max / (GRID_POINTS - 1) as f64;
            if let Some((a, v)) = search_near_zero(&mut decrease, spacing) {
                (alpha, best) = (a, v);
            }
        }
        if !(alpha > 0.0) || !best.is_finite() {
            return StepResult::Failed {
                reason: "linesearch found no point with finite value".into(),
                backtracks: count,
            };
        }
        let (polished, extra) =
            polish_stationary(oracle, s.x, n, s.newton.local_grad_norm, alpha, cfg.alpha_max);
        count += extra;
        if let Some(a) = polished {
            count += 1;
            if let Ok(v) = evaluate_value(oracle, &(s.x - n * a)) {
                if v - s.value <= best + noise {
                    alpha = a;
                }
            }
        }
        StepResult::Step {
            next: s.x - n * alpha,
            alpha,
            theta: None,
            backtracks: count,
        }
    })
}

/// Refines a line minimizer by secant steps on `φ'(α) = −⟨∇f(x − αn), n⟩`.
///
/// Values of `f` stop resolving the minimizer once the decrease along the ray
/// falls below rounding, while the slope keeps full relative accuracy. The
/// first step uses the curvature at `α = 0`, which is `g_x²`.
/// Returns the refined stepsize, if it moved, and the gradient evaluations spent.
fn polish_stationary<O: Objective + ?Sized>(
    oracle: &O,
    x: &Point,
    n: &Point,
    g_x: f64,
    alpha: f64,
    alpha_max: f64,
) -> (Option<f64>, usize) {
    let scale = g_x * g_x;
    let slope = |a: f64| evaluate_gradient(oracle, &(x - n * a)).map(|g| -g.dot(n));
    let mut evals = 1;
    let Ok(mut d) = slope(alpha) else {
        return (None, evals);
    };
    if !(scale > 0.0) || !d.is_finite() || d.abs() <= POLISH_TOL * scale {
        return (None, evals);
    }
    let (mut a, mut curvature) = (alpha, scale);
    while evals < POLISH_EVALS {
        let next = (a - d / curvature).clamp(0.5 * a, alpha_max.min(2.0 * a));
        if next == a {
            break;
        }
        evals += 1;
        let Ok(dn) = slope(next) else { break };
        if !dn.is_finite() {
            break;
        }
        let secant = (dn - d) / (next - a);
        a = next;
        d = dn;
        if d.abs() <= POLISH_TOL * scale {
            break;
        }
        if !(secant > 0.0) {
            break;
        }
        curvature = secant;
    }
    ((a != alpha).then_some(a), evals)
}

/// Gradient evaluations one polish may spend.
const POLISH_EVALS: usize = 6;

/// Smallest budget leaving the scalar search of Greedy Newton 16 evaluations.
const MIN_EVALS: usize = 24;

/// Relative slope, against `g_x²`, below which a stepsize counts as stationary.
const POLISH_TOL: f64 = 1e-10;

/// Gradient-regulated linesearch: `α_k` minimizes
/// `(f(y) − f(x^k)) / ‖∇f(y)‖*²_{x^k}` over `y = x^k − α n^k`, `α ∈ (0, alpha_max]`.
///
/// A trial point whose dual gradient norm vanishes is stationary and is taken
/// as the step.
pub fn run_grls<O: Objective + ?Sized>(
    oracle: &O,
    x0: &Point,
    cfg: &LineSearchConfig,
    stop: &StopCriteria,
) -> Result<Trace, SolveError> {
    cfg.validate()?;
    newton_loop(oracle, x0, stop, |s| {
        let n = &s.newton.direction;
        let noise = value_noise(s.value);
        let count = Cell::new(0usize);
        let stationary: Cell<Option<f64>> = Cell::new(None);
        // (ratio, f(y) − f(x)) at a trial stepsize.
        let probe = |alpha: f64| -> (f64, f64) {
            count.set(count.get() + 1);
            if alpha == 0.0 {
                return (0.0, 0.0);
            }
            let Ok(b) = evaluate(oracle, &(s.x - n * alpha), false) else {
                return (f64::INFINITY, f64::INFINITY);
            };
            let df = b.value - s.value;
            let dual = s.fact.dual_norm(&b.gradient);
            if dual < STATIONARY_DUAL && df <= noise {
                if stationary.get().is_none() {
                    stationary.set(Some(alpha));
                }
                return (f64::MIN, df);
            }
            (df / (dual * dual), df)
        };
        let (unit_ratio, unit_df) = probe(1.0);
        let mut alpha = 1.0;
        if stationary.get().is_none() {
            let (a_star, r_star) =
                minimize_scalar(|a| probe(a).0, 0.0, cfg.alpha_max, cfg.evals - 2);
            alpha = a_star;
            if let Some(a) = stationary.get() {
                alpha = a;
            } else if unit_ratio <= r_star {
                alpha = 1.0;
            } else {
                // Near the solution f(y) − f(x) drowns in rounding and the
                // ratio carries no information.
                let df_star = if a_star == 0.0 { 0.0 } else { probe(a_star).1 };
                if df_star >= -noise && unit_df <= noise {
                    alpha = 1.0;
                } else if a_star == 0.0 {
                    let spacing = cfg.alpha_max / (GRID_POINTS - 1) as f64;
                    if let Some((a, _)) = search_near_zero(|a| probe(a).0, spacing) {
                        alpha = a;
                    }
                }
            }
        }
        if !(alpha > 0.0) {
            return StepResult::Failed {
                reason: "linesearch found no stepsize with a negative ratio".into(),
                backtracks: count.get(),
            };
        }
        StepResult::Step {
            next: s.x - n * alpha,
            alpha,
            theta: None,
            backtracks: count.get(),
        }
    })
}

/// Newton's direction with Armijo backtracking from `α = 1`:
/// accept the first `α` with `f(x − αn) ≤ f(x) − c1 α g_x²`.
///
/// The sufficient-decrease test allows a few ulps of `|f(x)|` so that steps
/// whose decrease is below rounding are not rejected. `f` never increases,
/// except by rounding once the Newton decrement drops below it.
pub fn run_armijo_newton<O: Objective + ?Sized>(
    oracle: &O,
    x0: &Point,
    c1: f64,
    shrink: f64,
    stop: &StopCriteria,
) -> Result<Trace, SolveError> {
    require(c1 > 0.0 && c1 < 1.0, || format!("c1 must lie in (0, 1), got {c1}"))?;
    require(shrink > 0.0 && shrink < 1.0, || {
        format!("shrink must lie in (0, 1), got {shrink}")
    })?;
    newton_loop(oracle, x0, stop, |s| {
        let n = &s.newton.direction;
        let g2 = s.newton.local_grad_norm.powi(2);
        let slack = value_noise(s.value);
        // Once the whole predicted decrease `g_x²/2` is below the rounding of
        // `f`, values cannot rank trial points and the unit step is kept.
        let unresolved = 0.5 * g2 <= slack;
        let mut alpha = 1.0;
        let mut count = 0;
        loop {
            count += 1;
            let y = s.x - n * alpha;
            if let Ok(v) = evaluate_value(oracle, &y) {
                let accept = if unresolved && alpha == 1.0 {
                    v <= s.value + slack
                } else {
                    v <= s.value && v <= s.value - c1 * alpha * g2 + slack
                };
                if accept {
                    return StepResult::Step {
                        next: y,
                        alpha,
                        theta: None,
                        backtracks: count,
                    };
                }
            }
            alpha *= shrink;
            if alpha < 1e-16 {
                return StepResult::Failed {
                    reason: "Armijo stepsize underflow".into(),
                    backtracks: count,
                };
            }
        }
    })
}
