//! Objective-oracle contract consumed by every solver, plus finite-difference
//! derivative verification.
//!
//! Problems implement [`Objective`] with plain analytic formulas. Solvers never
//! call those methods directly; they go through [`evaluate`] and
//! [`evaluate_gradient`], which check dimensions and reject non-finite inputs
//! and outputs so that a domain violation surfaces as an [`OracleError`]
//! instead of a NaN propagating through a run.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Iterate of an optimization method. Entries must be finite.
pub type Point = DVector<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("dimension mismatch: oracle expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point has a non-finite entry at index {index}")]
    NonFinitePoint { index: usize },
    #[error("non-finite {what} returned by the oracle")]
    NonFiniteOutput { what: &'static str },
}

/// Twice differentiable objective with analytic derivatives.
///
/// Implementations must be immutable after construction: `evaluate` may be
/// called concurrently from several threads.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &Point) -> f64;

    fn gradient(&self, x: &Point) -> DVector<f64>;

    /// Dense symmetric Hessian.
    fn hessian(&self, x: &Point) -> DMatrix<f64>;

    /// Value and gradient together. Override when the two share work.
    fn value_gradient(&self, x: &Point) -> (f64, DVector<f64>) {
        (self.value(x), self.gradient(x))
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &Point) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &Point) -> DVector<f64> {
        (**self).gradient(x)
    }
    fn hessian(&self, x: &Point) -> DMatrix<f64> {
        (**self).hessian(x)
    }
    fn value_gradient(&self, x: &Point) -> (f64, DVector<f64>) {
        (**self).value_gradient(x)
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &Point) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &Point) -> DVector<f64> {
        (**self).gradient(x)
    }
    fn hessian(&self, x: &Point) -> DMatrix<f64> {
        (**self).hessian(x)
    }
    fn value_gradient(&self, x: &Point) -> (f64, DVector<f64>) {
        (**self).value_gradient(x)
    }
}

/// Value, gradient and (optionally) Hessian at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalBundle {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: Option<DMatrix<f64>>,
}

fn check_point(dim: usize, x: &Point) -> Result<(), OracleError> {
    if x.len() != dim {
        return Err(OracleError::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    if let Some(index) = x.iter().position(|v| !v.is_finite()) {
        return Err(OracleError::NonFinitePoint { index });
    }
    Ok(())
}

fn all_finite<'a>(mut it: impl Iterator<Item = &'a f64>) -> bool {
    it.all(|v| v.is_finite())
}

/// Evaluates `f(x)`, `∇f(x)` and, when requested, `∇²f(x)`.
pub fn evaluate<O: Objective + ?Sized>(
    oracle: &O,
    x: &Point,
    want_hessian: bool,
) -> Result<EvalBundle, OracleError> {
    check_point(oracle.dim(), x)?;
    let (value, gradient) = oracle.value_gradient(x);
    if !value.is_finite() {
        return Err(OracleError::NonFiniteOutput { what: "value" });
    }
    if !all_finite(gradient.iter()) {
        return Err(OracleError::NonFiniteOutput { what: "gradient" });
    }
    let hessian = if want_hessian {
        let h = oracle.hessian(x);
        if !all_finite(h.iter()) {
            return Err(OracleError::NonFiniteOutput { what: "hessian" });
        }
        Some(h)
    } else {
        None
    };
    Ok(EvalBundle {
        value,
        gradient,
        hessian,
    })
}

/// Gradient-only evaluation, used by backtracking trials that never look at `f`.
pub fn evaluate_gradient<O: Objective + ?Sized>(
    oracle: &O,
    x: &Point,
) -> Result<DVector<f64>, OracleError> {
    check_point(oracle.dim(), x)?;
    let g = oracle.gradient(x);
    if !all_finite(g.iter()) {
        return Err(OracleError::NonFiniteOutput { what: "gradient" });
    }
    Ok(g)
}

/// Value-only evaluation for linesearch trials.
pub fn evaluate_value<O: Objective + ?Sized>(oracle: &O, x: &Point) -> Result<f64, OracleError> {
    check_point(oracle.dim(), x)?;
    let v = oracle.value(x);
    if !v.is_finite() {
        return Err(OracleError::NonFiniteOutput { what: "value" });
    }
    Ok(v)
}

/// Maximum relative discrepancies between analytic and central-difference
/// derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeReport {
    pub gradient_rel_err: f64,
    pub hessian_rel_err: f64,
}

impl DerivativeReport {
    pub fn max(&self) -> f64 {
        self.gradient_rel_err.max(self.hessian_rel_err)
    }
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

/// Compares analytic derivatives against central differences of `f` (for the
/// gradient) and of `∇f` (for the Hessian).
///
/// The step along coordinate `i` is `max(1, |x_i|) * step`. Each error is
/// `|a - n| / max(1, |a|, |n|)`, maximized over entries.
pub fn check_derivatives<O: Objective + ?Sized>(
    oracle: &O,
    x: &Point,
    step: f64,
) -> DerivativeReport {
    assert!(step > 0.0, "finite-difference step must be positive");
    let d = x.len();
    let grad = oracle.gradient(x);
    let hess = oracle.hessian(x);

    let mut gradient_rel_err = 0f64;
    let mut hessian_rel_err = 0f64;
    let mut probe = x.clone();
    for i in 0..d {
        let h = 1f64.max(x[i].abs()) * step;
        probe[i] = x[i] + h;
        let f_plus = oracle.value(&probe);
        let g_plus = oracle.gradient(&probe);
        probe[i] = x[i] - h;
        let f_minus = oracle.value(&probe);
        let g_minus = oracle.gradient(&probe);
        probe[i] = x[i];

        let fd = (f_plus - f_minus) / (2.0 * h);
        gradient_rel_err = gradient_rel_err.max(rel_err(grad[i], fd));
        for j in 0..d {
            let fd = (g_plus[j] - g_minus[j]) / (2.0 * h);
            hessian_rel_err = hessian_rel_err.max(rel_err(hess[(j, i)], fd));
        }
    }
    DerivativeReport {
        gradient_rel_err,
        hessian_rel_err,
    }
}

/// The composition `y ↦ f(A y)` of an objective with a nonsingular linear map.
///
/// Affine-invariant methods produce identical stepsizes on `f` from `x0` and on
/// the composition from `A⁻¹ x0`.
#[derive(Debug, Clone)]
pub struct LinearlyTransformed<O> {
    inner: O,
    map: DMatrix<f64>,
}

impl<O: Objective> LinearlyTransformed<O> {
    pub fn new(inner: O, map: DMatrix<f64>) -> Self {
        assert!(map.is_square() && map.nrows() == inner.dim());
        Self { inner, map }
    }

    pub fn map(&self) -> &DMatrix<f64> {
        &self.map
    }

    fn forward(&self, y: &Point) -> Point {
        &self.map * y
    }
}

impl<O: Objective> Objective for LinearlyTransformed<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, y: &Point) -> f64 {
        self.inner.value(&self.forward(y))
    }

    fn gradient(&self, y: &Point) -> DVector<f64> {
        self.map.tr_mul(&self.inner.gradient(&self.forward(y)))
    }

    fn hessian(&self, y: &Point) -> DMatrix<f64> {
        let h = self.inner.hessian(&self.forward(y));
        let ah = self.map.tr_mul(&h);
        let mut out = &ah * &self.map;
        symmetrize(&mut out);
        out
    }

    fn value_gradient(&self, y: &Point) -> (f64, DVector<f64>) {
        let (v, g) = self.inner.value_gradient(&self.forward(y));
        (v, self.map.tr_mul(&g))
    }
}

/// Replaces `m` by `(m + mᵀ) / 2`.
pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct HalfSquaredNorm(usize);

    impl Objective for HalfSquaredNorm {
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, x: &Point) -> f64 {
            0.5 * x.norm_squared()
        }
        fn gradient(&self, x: &Point) -> DVector<f64> {
            x.clone()
        }
        fn hessian(&self, _x: &Point) -> DMatrix<f64> {
            DMatrix::identity(self.0, self.0)
        }
    }

    struct Broken;

    impl Objective for Broken {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &Point) -> f64 {
            x[0].ln()
        }
        fn gradient(&self, x: &Point) -> DVector<f64> {
            DVector::from_element(1, 1.0 / x[0])
        }
        fn hessian(&self, x: &Point) -> DMatrix<f64> {
            DMatrix::from_element(1, 1, -1.0 / (x[0] * x[0]))
        }
    }

    #[test]
    fn quadratic_bundle() {
        let x = DVector::from_vec(vec![3.0, 4.0]);
        let b = evaluate(&HalfSquaredNorm(2), &x, true).unwrap();
        assert_eq!(b.value, 12.5);
        assert_eq!(b.gradient, x);
        assert_eq!(b.hessian.unwrap(), DMatrix::identity(2, 2));
    }

    #[test]
    fn hessian_only_when_requested() {
        let x = DVector::from_vec(vec![1.0, 2.0]);
        assert!(evaluate(&HalfSquaredNorm(2), &x, false)
            .unwrap()
            .hessian
            .is_none());
    }

    #[test]
    fn rejects_bad_points() {
        let err = evaluate(&HalfSquaredNorm(2), &DVector::zeros(3), false).unwrap_err();
        assert_eq!(
            err,
            OracleError::DimensionMismatch {
                expected: 2,
                got: 3
            }
        );
        let x = DVector::from_vec(vec![1.0, f64::NAN]);
        assert_eq!(
            evaluate(&HalfSquaredNorm(2), &x, false).unwrap_err(),
            OracleError::NonFinitePoint { index: 1 }
        );
    }

    #[test]
    fn domain_violation_is_an_evaluation_failure() {
        let x = DVector::from_vec(vec![-1.0]);
        assert!(matches!(
            evaluate(&Broken, &x, false),
            Err(OracleError::NonFiniteOutput { what: "value" })
        ));
        let x = DVector::from_vec(vec![0.0]);
        assert!(evaluate_gradient(&Broken, &x).is_err());
    }

    #[test]
    fn fd_check_on_quadratic() {
        let x = DVector::from_vec(vec![0.3, -1.7, 2.2]);
        let r = check_derivatives(&HalfSquaredNorm(3), &x, 1e-5);
        assert!(r.gradient_rel_err < 1e-8, "{r:?}");
        assert!(r.hessian_rel_err < 1e-8, "{r:?}");
    }

    #[test]
    fn transformed_derivatives_are_consistent() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.5, 3.0]);
        let t = LinearlyTransformed::new(HalfSquaredNorm(2), a.clone());
        let y = DVector::from_vec(vec![0.7, -0.2]);
        let r = check_derivatives(&t, &y, 1e-5);
        assert!(r.max() < 1e-8, "{r:?}");
        assert_eq!(t.hessian(&y), a.transpose() * &a);
    }
}
