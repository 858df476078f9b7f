use serde::{Deserialize, Serialize};

use super::mnl::check_len;
use crate::choice::{gated_softmax, Assortment, ChoiceModel, ProbVector};
use crate::error::{ChoiceError, Result};

/// Finite mixture of MNL segments: `P(i|S) = sum_c alpha_c P_c(i|S)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmnlModel {
    pub alpha: Vec<f64>,
    pub u: Vec<Vec<f64>>,
}

impl MmnlModel {
    pub fn new(alpha: Vec<f64>, u: Vec<Vec<f64>>) -> Result<Self> {
        if alpha.is_empty() || alpha.len() != u.len() {
            return Err(ChoiceError::Model(format!(
                "{} segment weights for {} utility rows",
                alpha.len(),
                u.len()
            )));
        }
        if alpha.iter().any(|&a| !(a >= 0.0) || !a.is_finite()) {
            return Err(ChoiceError::Model("segment weights must be >= 0".into()));
        }
        let total: f64 = alpha.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ChoiceError::Model(format!(
                "segment weights sum to {total}"
            )));
        }
        let n = u[0].len();
        if n < 2
            || u.iter()
                .any(|row| row.len() != n || row.iter().any(|x| !x.is_finite()))
        {
            return Err(ChoiceError::Model(
                "utility rows must be finite and equally long".into(),
            ));
        }
        Ok(Self { alpha, u })
    }
}

impl ChoiceModel for MmnlModel {
    fn n(&self) -> usize {
        self.u[0].len()
    }

    fn probabilities(&self, assortment: &Assortment) -> Result<ProbVector> {
        check_len(self.n(), assortment)?;
        let mut p = vec![0.0; self.n()];
        for (a, row) in self.alpha.iter().zip(&self.u) {
            if *a == 0.0 {
                continue;
            }
            for (pi, qi) in p.iter_mut().zip(gated_softmax(row, assortment).0) {
                *pi += a * qi;
            }
        }
        Ok(ProbVector(p))
    }
}
