use serde::{Deserialize, Serialize};

use super::mnl::check_len;
use crate::choice::{Assortment, ChoiceModel, ProbVector};
use crate::error::{ChoiceError, Result};

/// Explicit lookup table `S -> P(.|S)` over a finite list of assortments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularModel {
    pub n: usize,
    pub entries: Vec<(Assortment, ProbVector)>,
}

impl TabularModel {
    pub fn new(n: usize, entries: Vec<(Assortment, ProbVector)>) -> Result<Self> {
        for (a, p) in &entries {
            check_len(n, a)?;
            p.check(a, 1e-9)?;
        }
        Ok(Self { n, entries })
    }
}

impl ChoiceModel for TabularModel {
    fn n(&self) -> usize {
        self.n
    }

    fn probabilities(&self, assortment: &Assortment) -> Result<ProbVector> {
        self.entries
            .iter()
            .find(|(a, _)| a == assortment)
            .map(|(_, p)| p.clone())
            .ok_or_else(|| ChoiceError::Unsupported(format!("no table entry for {assortment}")))
    }
}
