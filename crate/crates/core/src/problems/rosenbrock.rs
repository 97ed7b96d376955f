use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{normal_vector, ProblemError, TestProblem};
use crate::oracle::{Objective, Point};

/// `f(x) = Σ_{i<d−1} 100 (x_{i+1} − x_i²)² + (1 − x_i)²`, minimized at `(1, …, 1)`.
///
/// Nonconvex; its Hessian is indefinite over much of the space.
#[derive(Debug, Clone)]
pub struct RosenbrockProblem {
    dim: usize,
    init_seed: u64,
}

impl RosenbrockProblem {
    /// `init_seed` drives [`TestProblem::default_initial_point`].
    pub fn new(dim: usize, init_seed: u64) -> Result<Self, ProblemError> {
        if dim < 2 {
            return Err(ProblemError::InvalidParameter(format!(
                "Rosenbrock needs dimension >= 2, got {dim}"
            )));
        }
        Ok(Self { dim, init_seed })
    }

    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }
}

impl Objective for RosenbrockProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Point) -> f64 {
        x.as_slice()
            .windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }

    fn gradient(&self, x: &Point) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim);
        for i in 0..self.dim - 1 {
            let r = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * x[i] * r - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * r;
        }
        g
    }

    fn hessian(&self, x: &Point) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim - 1 {
            h[(i, i)] += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
            h[(i, i + 1)] -= 400.0 * x[i];
            h[(i + 1, i)] -= 400.0 * x[i];
            h[(i + 1, i + 1)] += 200.0;
        }
        h
    }
}

impl TestProblem for RosenbrockProblem {
    /// `20 · N(0, I_d)` drawn from `init_seed`.
    fn default_initial_point(&self) -> Point {
        let mut rng = ChaCha8Rng::seed_from_u64(self.init_seed);
        normal_vector(&mut rng, self.dim) * 20.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{check_derivatives, evaluate};
    use nalgebra::dvector;

    #[test]
    fn minimizer() {
        let p = RosenbrockProblem::new(6, 0).unwrap();
        let b = evaluate(&p, &DVector::from_element(6, 1.0), false).unwrap();
        assert_eq!(b.value, 0.0);
        assert!(b.gradient.iter().all(|&g| g == 0.0));
        let p2 = RosenbrockProblem::new(2, 0).unwrap();
        assert_eq!(evaluate(&p2, &dvector![1.0, 1.0], false).unwrap().value, 0.0);
    }

    #[test]
    fn origin_value() {
        let p = RosenbrockProblem::new(2, 0).unwrap();
        assert_eq!(p.value(&dvector![0.0, 0.0]), 1.0);
    }

    #[test]
    fn classic_start_derivatives() {
        let p = RosenbrockProblem::new(2, 0).unwrap();
        let r = check_derivatives(&p, &dvector![-1.2, 1.0], 1e-5);
        assert!(r.max() < 1e-4, "{r:?}");
    }

    #[test]
    fn initial_point_is_seeded() {
        let p = RosenbrockProblem::new(10, 5).unwrap();
        let a = p.default_initial_point();
        assert_eq!(a, p.default_initial_point());
        assert_ne!(a, RosenbrockProblem::new(10, 6).unwrap().default_initial_point());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(a, normal_vector(&mut rng, 10) * 20.0);
    }

    #[test]
    fn dimension_check() {
        assert!(RosenbrockProblem::new(1, 0).is_err());
    }
}
