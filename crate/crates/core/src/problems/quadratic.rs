use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{normal_matrix, normal_vector, ProblemError, TestProblem};
use crate::oracle::{symmetrize, Objective, Point};

/// `f(x) = ½ xᵀA x + bᵀx` with symmetric `A`.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl QuadraticProblem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self, ProblemError> {
        if !a.is_square() || a.nrows() != b.len() || b.is_empty() {
            return Err(ProblemError::InvalidParameter(format!(
                "quadratic needs a square matrix matching the linear term, got {:?} and {}",
                a.shape(),
                b.len()
            )));
        }
        let mut a = a;
        symmetrize(&mut a);
        Ok(Self { a, b })
    }

    /// `½‖x‖²`.
    pub fn half_squared_norm(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim), DVector::zeros(dim)).expect("valid")
    }

    /// Random positive definite instance: `A = Q diag(λ) Qᵀ` with `λ`
    /// log-spaced on `[1, condition]`, `Q` orthogonal, `b ~ N(0, I)`.
    pub fn random(dim: usize, condition: f64, seed: u64) -> Result<Self, ProblemError> {
        if dim == 0 || !(condition >= 1.0) || !condition.is_finite() {
            return Err(ProblemError::InvalidParameter(format!(
                "random quadratic needs dim >= 1 and condition >= 1, got {dim}, {condition}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = normal_matrix(&mut rng, dim, dim).qr().q();
        let eig = DVector::from_iterator(
            dim,
            (0..dim).map(|i| {
                let t = if dim == 1 { 0.0 } else { i as f64 / (dim - 1) as f64 };
                condition.powf(t)
            }),
        );
        let a = &q * DMatrix::from_diagonal(&eig) * q.transpose();
        let b = normal_vector(&mut rng, dim);
        Self::new(a, b)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.b
    }

    /// `−½ bᵀA⁻¹b` when `A` is positive definite.
    pub fn minimum_value(&self) -> Option<f64> {
        let chol = self.a.clone().cholesky()?;
        Some(-0.5 * self.b.dot(&chol.solve(&self.b)))
    }
}

impl Objective for QuadraticProblem {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &Point) -> f64 {
        0.5 * x.dot(&(&self.a * x)) + self.b.dot(x)
    }

    fn gradient(&self, x: &Point) -> DVector<f64> {
        &self.a * x + &self.b
    }

    fn value_gradient(&self, x: &Point) -> (f64, DVector<f64>) {
        let ax = &self.a * x;
        (0.5 * x.dot(&ax) + self.b.dot(x), ax + &self.b)
    }

    fn hessian(&self, _x: &Point) -> DMatrix<f64> {
        self.a.clone()
    }
}

impl TestProblem for QuadraticProblem {
    /// `(1, …, 1)`.
    fn default_initial_point(&self) -> Point {
        DVector::from_element(self.dim(), 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn half_squared_norm_example() {
        let p = QuadraticProblem::half_squared_norm(2);
        assert_eq!(p.value(&dvector![3.0, 4.0]), 12.5);
        assert_eq!(p.minimum_value(), Some(0.0));
    }

    #[test]
    fn random_spectrum() {
        let p = QuadraticProblem::random(8, 100.0, 1).unwrap();
        let eig = p.matrix().clone().symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        assert!((lo - 1.0).abs() < 1e-10 && (hi - 100.0).abs() < 1e-8);
        let x_star = -p.matrix().clone().cholesky().unwrap().solve(p.linear());
        assert!((p.value(&x_star) - p.minimum_value().unwrap()).abs() < 1e-12);
    }
}
