//! Benchmark objectives: regularized logistic regression, polytope
//! feasibility, the Rosenbrock function and a dense quadratic, together with
//! LIBSVM ingestion and seeded synthetic data.

mod libsvm;
mod logistic;
mod polytope;
mod quadratic;
mod rosenbrock;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::oracle::{Objective, Point};

pub use libsvm::{parse_libsvm, ParseError};
pub use logistic::LogisticProblem;
pub use polytope::PolytopeProblem;
pub use quadratic::QuadraticProblem;
pub use rosenbrock::RosenbrockProblem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("dataset must have at least one sample and one feature, got {n}x{d}")]
    EmptyDataset { n: usize, d: usize },
    #[error("{features} feature rows but {labels} labels")]
    LabelCount { features: usize, labels: usize },
    #[error("logistic labels must be -1 or +1, found {0}")]
    BadLabel(f64),
    #[error("invalid problem parameter: {0}")]
    InvalidParameter(String),
}

/// Rows `a_i` of `features` paired with `labels[i] = b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    pub labels: DVector<f64>,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, labels: DVector<f64>) -> Result<Self, ProblemError> {
        let (n, d) = features.shape();
        if n == 0 || d == 0 {
            return Err(ProblemError::EmptyDataset { n, d });
        }
        if labels.len() != n {
            return Err(ProblemError::LabelCount {
                features: n,
                labels: labels.len(),
            });
        }
        Ok(Self { features, labels })
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }
}

/// An objective that knows how benchmark runs are initialized on it.
pub trait TestProblem: Objective {
    fn default_initial_point(&self) -> Point;
}

pub fn default_initial_point<P: TestProblem + ?Sized>(problem: &P) -> Point {
    problem.default_initial_point()
}

pub(crate) fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // Row-major draw order so that a dataset's first rows do not depend on `n`.
    DMatrix::from_row_iterator(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)),
    )
}

pub(crate) fn normal_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_iterator(len, (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Polytope data with a known feasible point: `a_i, x* ~ N(0, 1)` and
/// `b_i = ⟨a_i, x*⟩`, so every constraint is tight at `x*`.
pub fn generate_polytope(n: usize, d: usize, seed: u64) -> (Dataset, Point) {
    assert!(n >= 1 && d >= 1, "need n, d >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_star = normal_vector(&mut rng, d);
    let features = normal_matrix(&mut rng, n, d);
    // Same product routine as the objective's margins, so f(x*) is exactly 0.
    let labels = &features * &x_star;
    (
        Dataset::new(features, labels).expect("nonempty by construction"),
        x_star,
    )
}

/// Binary classification data: `a_i ~ N(0, I)`, a hidden weight vector
/// `w ~ N(0, I/d)`, and `b_i = +1` with probability `1/(1 + e^{-⟨a_i, w⟩})`.
pub fn generate_logistic(n: usize, d: usize, seed: u64) -> Dataset {
    assert!(n >= 1 && d >= 1, "need n, d >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = normal_vector(&mut rng, d) / (d as f64).sqrt();
    let features = normal_matrix(&mut rng, n, d);
    let margins = &features * &w;
    let labels = margins.map(|m| {
        let p = 1.0 / (1.0 + (-m).exp());
        if rng.random::<f64>() < p {
            1.0
        } else {
            -1.0
        }
    });
    Dataset::new(features, labels).expect("nonempty by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polytope_generation_is_deterministic() {
        let (a, xa) = generate_polytope(30, 7, 11);
        let (b, xb) = generate_polytope(30, 7, 11);
        assert_eq!(a, b);
        assert_eq!(xa, xb);
        let (c, _) = generate_polytope(30, 7, 12);
        assert_ne!(a, c);
    }

    #[test]
    fn logistic_generation() {
        let ds = generate_logistic(200, 20, 3);
        assert_eq!(ds, generate_logistic(200, 20, 3));
        assert!(ds.labels.iter().all(|&b| b == 1.0 || b == -1.0));
        let positives = ds.labels.iter().filter(|&&b| b > 0.0).count();
        assert!(positives > 40 && positives < 160, "{positives}");
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(DMatrix::zeros(0, 3), DVector::zeros(0)).is_err());
        assert!(Dataset::new(DMatrix::zeros(2, 3), DVector::zeros(3)).is_err());
    }
}
