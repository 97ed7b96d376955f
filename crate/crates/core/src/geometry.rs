//! Local Hessian geometry: shifted Cholesky factorization, Newton direction,
//! and the primal/dual local norms `‖h‖_x` and `‖g‖_x*`.
//!
//! Every quantity is computed through the factor `L` of `H + τI`, so norms,
//! directions and step lengths stay mutually consistent within an iteration
//! even when a shift `τ > 0` was needed.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Pivots below this fraction of the largest diagonal entry count as breakdown.
const PIVOT_REL_TOL: f64 = 1e-13;
/// First nonzero ladder rung, relative to `max(1, trace(H)/d)`. This is the
/// customary `β = 1e-3` of Cholesky with an added multiple of the identity;
/// much smaller rungs leave singular Hessians nearly singular, and dual norms
/// of gradients outside their range then blow up.
const SHIFT_START_REL: f64 = 1e-3;
/// Give up once the shift exceeds this multiple of `max(1, ‖H‖_F)`.
const SHIFT_LIMIT_REL: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("no diagonal shift up to {limit:e} made the matrix positive definite")]
    ShiftLimitExceeded { limit: f64 },
}

/// Lower-triangular Cholesky factor of `H + τI`.
#[derive(Debug, Clone)]
pub struct FactorizedHessian {
    lower: DMatrix<f64>,
    shift: f64,
}

/// Newton direction `n = (H + τI)⁻¹ g` together with `g_x = ⟨g, n⟩^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonData {
    pub direction: DVector<f64>,
    pub local_grad_norm: f64,
    pub shift: f64,
}

/// Plain `LLᵀ` with a relative pivot threshold; `None` on breakdown.
fn cholesky(a: &DMatrix<f64>, shift: f64) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let scale = (0..n)
        .map(|i| (a[(i, i)] + shift).abs())
        .fold(0f64, f64::max);
    let floor = PIVOT_REL_TOL * scale;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)] + shift;
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > floor) || !diag.is_finite() {
            return None;
        }
        let pivot = diag.sqrt();
        l[(j, j)] = pivot;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / pivot;
        }
    }
    Some(l)
}

/// Factorizes `H + τI` with the smallest `τ` on the ladder
/// `0, τ₀, 2τ₀, 4τ₀, …` where `τ₀ = 1e-3 · max(1, trace(H)/d)`.
pub fn factorize_spd(h: &DMatrix<f64>) -> Result<FactorizedHessian, GeometryError> {
    if !h.is_square() {
        return Err(GeometryError::NotSquare {
            rows: h.nrows(),
            cols: h.ncols(),
        });
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let d = h.nrows();
    if let Some(lower) = cholesky(h, 0.0) {
        return Ok(FactorizedHessian { lower, shift: 0.0 });
    }
    let tau0 = SHIFT_START_REL * 1f64.max(h.trace() / d.max(1) as f64);
    let limit = SHIFT_LIMIT_REL * 1f64.max(h.norm());
    let mut tau = tau0;
    while tau <= limit {
        if let Some(lower) = cholesky(h, tau) {
            return Ok(FactorizedHessian { lower, shift: tau });
        }
        tau *= 2.0;
    }
    Err(GeometryError::ShiftLimitExceeded { limit })
}

impl FactorizedHessian {
    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Diagonal shift `τ` that was added to make the factorization succeed.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// Solves `(H + τI) x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let y = self.forward(b);
        self.lower
            .tr_solve_lower_triangular(&y)
            .expect("factor has a positive diagonal")
    }

    /// `L⁻¹ b`; its squared norm is `bᵀ(H + τI)⁻¹b`.
    fn forward(&self, b: &DVector<f64>) -> DVector<f64> {
        assert_eq!(b.len(), self.dim(), "dimension mismatch");
        self.lower
            .solve_lower_triangular(b)
            .expect("factor has a positive diagonal")
    }

    /// `‖v‖_x = (vᵀ(H + τI)v)^{1/2}`.
    pub fn local_norm(&self, v: &DVector<f64>) -> f64 {
        assert_eq!(v.len(), self.dim(), "dimension mismatch");
        self.lower.tr_mul(v).norm()
    }

    /// `‖g‖_x* = (gᵀ(H + τI)⁻¹g)^{1/2}`, one triangular solve.
    pub fn dual_norm(&self, g: &DVector<f64>) -> f64 {
        self.forward(g).norm()
    }

    pub fn newton_data(&self, g: &DVector<f64>) -> NewtonData {
        let direction = self.solve(g);
        let local_grad_norm = g.dot(&direction).max(0.0).sqrt();
        NewtonData {
            direction,
            local_grad_norm,
            shift: self.shift,
        }
    }
}

/// Free-function form of [`FactorizedHessian::newton_data`].
pub fn newton_data(fact: &FactorizedHessian, g: &DVector<f64>) -> NewtonData {
    fact.newton_data(g)
}

/// Free-function form of [`FactorizedHessian::local_norm`].
pub fn local_norm(fact: &FactorizedHessian, v: &DVector<f64>) -> f64 {
    fact.local_norm(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    #[test]
    fn pd_matrix_needs_no_shift() {
        let f = factorize_spd(&diag(&[2.0, 8.0])).unwrap();
        assert_eq!(f.shift(), 0.0);
    }

    #[test]
    fn indefinite_matrix_gets_first_rung_above_one() {
        let f = factorize_spd(&diag(&[1.0, -1.0])).unwrap();
        // trace/d = 0, so τ₀ = 1e-3 and the ladder is 1e-3·2^k.
        let expected = 1e-3 * 2f64.powi(10);
        assert!(expected > 1.0 && expected / 2.0 < 1.0);
        assert_eq!(f.shift(), expected);
    }

    #[test]
    fn zero_matrix_gets_first_rung() {
        let f = factorize_spd(&DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(f.shift(), 1e-3);
    }

    #[test]
    fn bad_input() {
        // Any shift beyond ‖H‖₂ ≤ ‖H‖_F succeeds, so only garbage input fails.
        let f = factorize_spd(&diag(&[1.0, -1e12])).unwrap();
        assert!(f.shift() > 1e12 && f.shift() < 2e12);
        assert_eq!(
            factorize_spd(&DMatrix::from_element(2, 2, f64::NAN)).unwrap_err(),
            GeometryError::NonFinite
        );
        assert!(factorize_spd(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn newton_data_identity() {
        let f = factorize_spd(&DMatrix::identity(2, 2)).unwrap();
        let nd = f.newton_data(&dvector![3.0, 4.0]);
        assert_eq!(nd.direction, dvector![3.0, 4.0]);
        assert!((nd.local_grad_norm - 5.0).abs() < 1e-15);
    }

    #[test]
    fn newton_data_diagonal() {
        let f = factorize_spd(&diag(&[2.0, 8.0])).unwrap();
        let nd = f.newton_data(&dvector![4.0, 8.0]);
        assert!((nd.direction - dvector![2.0, 1.0]).norm() < 1e-15);
        assert!((nd.local_grad_norm - 4.0).abs() < 1e-15);
    }

    #[test]
    fn newton_data_zero_gradient() {
        let f = factorize_spd(&diag(&[2.0, 8.0])).unwrap();
        let nd = f.newton_data(&dvector![0.0, 0.0]);
        assert_eq!(nd.direction, dvector![0.0, 0.0]);
        assert_eq!(nd.local_grad_norm, 0.0);
    }

    #[test]
    fn local_norm_examples() {
        let id = factorize_spd(&DMatrix::identity(2, 2)).unwrap();
        assert!((id.local_norm(&dvector![3.0, 4.0]) - 5.0).abs() < 1e-15);
        let f = factorize_spd(&diag(&[2.0, 8.0])).unwrap();
        assert!((f.local_norm(&dvector![1.0, 1.0]) - 10f64.sqrt()).abs() < 1e-15);
        assert_eq!(f.local_norm(&dvector![0.0, 0.0]), 0.0);
    }

    #[test]
    fn shifted_norms_use_the_shifted_matrix() {
        let f = factorize_spd(&diag(&[1.0, -1.0])).unwrap();
        let t = f.shift();
        let v = dvector![1.0, 1.0];
        let expected = ((1.0 + t) + (-1.0 + t)).sqrt();
        assert!((f.local_norm(&v) - expected).abs() < 1e-12);
    }
}
