use serde::{Deserialize, Serialize};

use crate::choice::{gated_softmax, Assortment, ChoiceModel, ProbVector};
use crate::error::{ChoiceError, Result};

/// Multinomial logit: `P(i|S) = exp(u_i) / sum_{j in S} exp(u_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnlModel {
    pub u: Vec<f64>,
}

impl MnlModel {
    /// Utilities may be `-inf` (never chosen) but not NaN or `+inf`.
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if u.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
            return Err(ChoiceError::Model("MNL utilities must be finite".into()));
        }
        if u.len() < 2 {
            return Err(ChoiceError::Model("MNL needs at least 2 items".into()));
        }
        Ok(Self { u })
    }
}

impl ChoiceModel for MnlModel {
    fn n(&self) -> usize {
        self.u.len()
    }

    fn probabilities(&self, assortment: &Assortment) -> Result<ProbVector> {
        check_len(self.u.len(), assortment)?;
        if assortment.members().all(|i| self.u[i] == f64::NEG_INFINITY) {
            // every offered item is unidentified; fall back to uniform
            let k = assortment.len() as f64;
            return Ok(ProbVector(
                assortment
                    .mask()
                    .iter()
                    .map(|&s| if s { 1.0 / k } else { 0.0 })
                    .collect(),
            ));
        }
        Ok(gated_softmax(&self.u, assortment))
    }
}

/// Plain softmax with max-subtraction.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = x.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    out
}

pub(crate) fn check_len(n: usize, assortment: &Assortment) -> Result<()> {
    if assortment.n() != n {
        return Err(ChoiceError::Dimension {
            expected: n,
            got: assortment.n(),
            context: "assortment",
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::Universe;

    #[test]
    fn equal_utilities_are_uniform() {
        let u = Universe::with_no_purchase(3).unwrap();
        let p = MnlModel::new(vec![0.0; 3])
            .unwrap()
            .probabilities(&Assortment::full(&u))
            .unwrap();
        for x in p.as_slice() {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_item_logit() {
        let u = Universe::with_no_purchase(2).unwrap();
        let p = MnlModel::new(vec![1.0, 0.0])
            .unwrap()
            .probabilities(&Assortment::full(&u))
            .unwrap();
        let e = 1f64.exp();
        assert!((p.get(0) - e / (1.0 + e)).abs() < 1e-15);
        assert!((p.get(0) - 0.7311).abs() < 1e-4);
        assert!((p.get(1) - 0.2689).abs() < 1e-4);
    }

    #[test]
    fn extreme_utilities_do_not_overflow() {
        let u = Universe::with_no_purchase(3).unwrap();
        let m = MnlModel::new(vec![800.0, 790.0, 0.0]).unwrap();
        let p = m.probabilities(&Assortment::full(&u)).unwrap();
        p.check(&Assortment::full(&u), 1e-12).unwrap();
        let m = MnlModel::new(vec![-800.0, -790.0, -50.0]).unwrap();
        let p = m.probabilities(&Assortment::full(&u)).unwrap();
        assert!((p.get(2) - 1.0).abs() < 1e-12);
    }
}
