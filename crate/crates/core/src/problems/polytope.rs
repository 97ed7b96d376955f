use nalgebra::{DMatrix, DVector};

use super::{Dataset, ProblemError, TestProblem};
use crate::oracle::{symmetrize, Objective, Point};

/// `f(x) = Σ (⟨a_i, x⟩ − b_i)₊^p`, zero exactly on `{x : ⟨a_i, x⟩ ≤ b_i ∀i}`.
///
/// Only strictly positive residuals contribute. For `p = 2` the Hessian takes
/// the one-sided value `2·[t > 0]` at the kink.
#[derive(Debug, Clone)]
pub struct PolytopeProblem {
    data: Dataset,
    power: f64,
}

impl PolytopeProblem {
    pub fn new(data: Dataset, power: f64) -> Result<Self, ProblemError> {
        if !(power >= 2.0) || !power.is_finite() {
            return Err(ProblemError::InvalidParameter(format!(
                "hinge power must be finite and >= 2, got {power}"
            )));
        }
        Ok(Self { data, power })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    fn residuals(&self, x: &Point) -> DVector<f64> {
        &self.data.features * x - &self.data.labels
    }

    fn hinge(&self, t: f64) -> f64 {
        if t > 0.0 {
            t.powf(self.power)
        } else {
            0.0
        }
    }

    fn hinge_d1(&self, t: f64) -> f64 {
        if t > 0.0 {
            self.power * t.powf(self.power - 1.0)
        } else {
            0.0
        }
    }

    fn hinge_d2(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            0.0
        } else if self.power == 2.0 {
            2.0
        } else {
            self.power * (self.power - 1.0) * t.powf(self.power - 2.0)
        }
    }
}

impl Objective for PolytopeProblem {
    fn dim(&self) -> usize {
        self.data.n_features()
    }

    fn value(&self, x: &Point) -> f64 {
        self.residuals(x).iter().map(|&t| self.hinge(t)).sum()
    }

    fn gradient(&self, x: &Point) -> DVector<f64> {
        let coef = self.residuals(x).map(|t| self.hinge_d1(t));
        self.data.features.tr_mul(&coef)
    }

    fn value_gradient(&self, x: &Point) -> (f64, DVector<f64>) {
        let r = self.residuals(x);
        let value = r.iter().map(|&t| self.hinge(t)).sum();
        let coef = r.map(|t| self.hinge_d1(t));
        (value, self.data.features.tr_mul(&coef))
    }

    fn hessian(&self, x: &Point) -> DMatrix<f64> {
        let r = self.residuals(x);
        let mut weighted = self.data.features.clone();
        for (i, &t) in r.iter().enumerate() {
            weighted.row_mut(i).scale_mut(self.hinge_d2(t));
        }
        let mut h = self.data.features.tr_mul(&weighted);
        symmetrize(&mut h);
        h
    }
}

impl TestProblem for PolytopeProblem {
    /// `(1, …, 1)`.
    fn default_initial_point(&self) -> Point {
        DVector::from_element(self.dim(), 1.0)
    }
}
