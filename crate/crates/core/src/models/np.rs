use serde::{Deserialize, Serialize};

use super::mnl::check_len;
use crate::choice::{Assortment, ChoiceModel, ProbVector};
use crate::error::{ChoiceError, Result};

/// Ranking-list (non-parametric) model: customer type `k` has preference
/// order `perms[k]` and buys its first offered item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpModel {
    pub perms: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
}

impl NpModel {
    pub fn new(perms: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self> {
        if perms.is_empty() || perms.len() != weights.len() {
            return Err(ChoiceError::Model(format!(
                "{} permutations with {} weights",
                perms.len(),
                weights.len()
            )));
        }
        let n = perms[0].len();
        for (k, p) in perms.iter().enumerate() {
            let mut seen = vec![false; n];
            if p.len() != n
                || p.iter()
                    .any(|&i| i >= n || std::mem::replace(&mut seen[i], true))
            {
                return Err(ChoiceError::Model(format!(
                    "permutation {k} is not a bijection"
                )));
            }
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(ChoiceError::Model("weights must be >= 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ChoiceError::Model(format!("weights sum to {total}")));
        }
        Ok(Self { perms, weights })
    }

    /// First offered item of permutation `k`.
    pub fn first_offered(&self, k: usize, assortment: &Assortment) -> Option<usize> {
        self.perms[k]
            .iter()
            .copied()
            .find(|&i| assortment.contains(i))
    }
}

impl ChoiceModel for NpModel {
    fn n(&self) -> usize {
        self.perms[0].len()
    }

    fn probabilities(&self, assortment: &Assortment) -> Result<ProbVector> {
        check_len(self.n(), assortment)?;
        let mut p = vec![0.0; self.n()];
        for (k, &w) in self.weights.iter().enumerate() {
            if let Some(i) = self.first_offered(k, assortment) {
                p[i] += w;
            }
        }
        Ok(ProbVector(p))
    }
}
