use nalgebra::{DMatrix, DVector};

use super::{Dataset, ProblemError, TestProblem};
use crate::oracle::{symmetrize, Objective, Point};

/// `f(x) = (1/n) Σ log(1 + exp(−b_i ⟨a_i, x⟩)) + (μ/2)‖x‖²`.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    data: Dataset,
    mu: f64,
}

/// `log(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// `1 / (1 + e^{−t})` without overflow.
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl LogisticProblem {
    pub fn new(data: Dataset, mu: f64) -> Result<Self, ProblemError> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(ProblemError::InvalidParameter(format!(
                "regularizer mu must be finite and >= 0, got {mu}"
            )));
        }
        if let Some(&b) = data.labels.iter().find(|&&b| b != 1.0 && b != -1.0) {
            return Err(ProblemError::BadLabel(b));
        }
        Ok(Self { data, mu })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Label-signed margins `b_i ⟨a_i, x⟩`.
    fn margins(&self, x: &Point) -> DVector<f64> {
        (&self.data.features * x).component_mul(&self.data.labels)
    }

    fn n(&self) -> f64 {
        self.data.n_samples() as f64
    }
}

impl Objective for LogisticProblem {
    fn dim(&self) -> usize {
        self.data.n_features()
    }

    fn value(&self, x: &Point) -> f64 {
        let loss: f64 = self.margins(x).iter().map(|&m| softplus(-m)).sum();
        loss / self.n() + 0.5 * self.mu * x.norm_squared()
    }

    fn gradient(&self, x: &Point) -> DVector<f64> {
        self.value_gradient(x).1
    }

    fn value_gradient(&self, x: &Point) -> (f64, DVector<f64>) {
        let m = self.margins(x);
        let loss: f64 = m.iter().map(|&m| softplus(-m)).sum();
        let n = self.n();
        // ∂/∂z_i of the loss term is −b_i σ(−m_i).
        let coef = DVector::from_iterator(
            m.len(),
            m.iter()
                .zip(self.data.labels.iter())
                .map(|(&m, &b)| -b * sigmoid(-m) / n),
        );
        let grad = self.data.features.tr_mul(&coef) + x * self.mu;
        (loss / n + 0.5 * self.mu * x.norm_squared(), grad)
    }

    fn hessian(&self, x: &Point) -> DMatrix<f64> {
        let m = self.margins(x);
        let n = self.n();
        let mut weighted = self.data.features.clone();
        for (i, &mi) in m.iter().enumerate() {
            let w = sigmoid(mi) * sigmoid(-mi) / n;
            weighted.row_mut(i).scale_mut(w);
        }
        let mut h = self.data.features.tr_mul(&weighted);
        for i in 0..h.nrows() {
            h[(i, i)] += self.mu;
        }
        symmetrize(&mut h);
        h
    }
}

impl TestProblem for LogisticProblem {
    /// `10 · (1, …, 1)`.
    fn default_initial_point(&self) -> Point {
        DVector::from_element(self.dim(), 10.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{check_derivatives, evaluate};
    use crate::problems::generate_logistic;

    #[test]
    fn value_at_origin_is_log2() {
        let p = LogisticProblem::new(generate_logistic(37, 5, 1), 1e-3).unwrap();
        let x = DVector::zeros(5);
        let b = evaluate(&p, &x, true).unwrap();
        assert!((b.value - std::f64::consts::LN_2).abs() < 1e-15);
        let d = p.data();
        let expected = -d.features.tr_mul(&d.labels) / (2.0 * 37.0);
        assert!((b.gradient - expected).norm() < 1e-15);
    }

    #[test]
    fn no_overflow_far_from_origin() {
        let p = LogisticProblem::new(generate_logistic(20, 3, 2), 0.0).unwrap();
        let x = DVector::from_element(3, 1e4);
        let b = evaluate(&p, &x, true).unwrap();
        assert!(b.value.is_finite() && b.value > 0.0);
    }

    #[test]
    fn derivatives_at_origin() {
        let p = LogisticProblem::new(generate_logistic(50, 6, 4), 1e-3).unwrap();
        let r = check_derivatives(&p, &DVector::zeros(6), 1e-5);
        assert!(r.max() < 1e-5, "{r:?}");
    }

    #[test]
    fn rejects_bad_labels_and_mu() {
        let mut ds = generate_logistic(5, 2, 0);
        assert!(LogisticProblem::new(ds.clone(), -1.0).is_err());
        ds.labels[0] = 0.0;
        assert_eq!(
            LogisticProblem::new(ds, 1.0).unwrap_err(),
            ProblemError::BadLabel(0.0)
        );
    }

    #[test]
    fn initial_point() {
        let p = LogisticProblem::new(generate_logistic(5, 3, 0), 1e-3).unwrap();
        assert_eq!(p.default_initial_point().as_slice(), &[10.0, 10.0, 10.0]);
    }
}
