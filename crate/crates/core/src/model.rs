use crate::error::{Error, Result};
use crate::factor::Factor;

const WEIGHT_SUM_TOL: f64 = 1e-12;
const MIN_WEIGHT: f64 = 1e-12;

/// Factors V_1..V_r and the mixing weights alpha_i of the walk
/// P = sum_i alpha_i * P_i lifted to the free product.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    factors: Vec<Factor>,
    weights: Vec<f64>,
}

impl ModelSpec {
    pub fn new(factors: Vec<Factor>, weights: Vec<f64>) -> Result<Self> {
        let r = factors.len();
        if r < 2 {
            return Err(Error::InvalidModel(format!(
                "a free product needs at least 2 factors, got {r}"
            )));
        }
        if weights.len() != r {
            return Err(Error::InvalidModel(format!(
                "{} weights given for {r} factors",
                weights.len()
            )));
        }
        for (i, &a) in weights.iter().enumerate() {
            if !a.is_finite() || a < MIN_WEIGHT {
                return Err(Error::InvalidModel(format!(
                    "weight {i} = {a} must be positive"
                )));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidModel(format!("weights sum to {sum}, not 1")));
        }
        if r == 2 && factors.iter().all(|f| f.state_count() == Some(2)) {
            return Err(Error::InvalidModel(
                "two two-element factors give a recurrent walk".into(),
            ));
        }
        Ok(ModelSpec { factors, weights })
    }

    /// Equal weights 1/r.
    pub fn uniform(factors: Vec<Factor>) -> Result<Self> {
        let r = factors.len();
        ModelSpec::new(factors, vec![1.0 / r as f64; r])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> &Factor {
        &self.factors[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.factors.iter().all(|f| f.as_finite().is_some())
    }

    pub fn all_transitive(&self) -> bool {
        self.factors.iter().all(Factor::is_transitive)
    }

    /// The same model with factors reordered: factor `i` of the result is
    /// factor `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        ModelSpec::new(
            order.iter().map(|&i| self.factors[i].clone()).collect(),
            order.iter().map(|&i| self.weights[i]).collect(),
        )
    }
}
