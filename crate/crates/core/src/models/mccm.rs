use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::mnl::check_len;
use crate::choice::{Assortment, ChoiceModel, ProbVector};
use crate::error::{ChoiceError, Result};

const STOCHASTIC_TOL: f64 = 1e-9;
const ITERATIVE_TOL: f64 = 1e-10;
const ITERATIVE_MAX: usize = 1_000_000;

/// Markov chain choice model: arrival distribution `lambda` and row-stochastic
/// transition matrix `rho`. A customer walks until hitting an offered item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MccmModel {
    pub lambda: Vec<f64>,
    pub rho: Vec<Vec<f64>>,
}

impl MccmModel {
    pub fn new(lambda: Vec<f64>, rho: Vec<Vec<f64>>) -> Result<Self> {
        let n = lambda.len();
        if n < 2 {
            return Err(ChoiceError::Model("MCCM needs at least 2 items".into()));
        }
        if lambda.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(ChoiceError::Model(
                "arrival probabilities must be >= 0".into(),
            ));
        }
        let total: f64 = lambda.iter().sum();
        if (total - 1.0).abs() > STOCHASTIC_TOL {
            return Err(ChoiceError::Model(format!(
                "arrival probabilities sum to {total}"
            )));
        }
        if rho.len() != n {
            return Err(ChoiceError::Dimension {
                expected: n,
                got: rho.len(),
                context: "transition matrix rows",
            });
        }
        for (i, row) in rho.iter().enumerate() {
            if row.len() != n {
                return Err(ChoiceError::Dimension {
                    expected: n,
                    got: row.len(),
                    context: "transition matrix columns",
                });
            }
            if row.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(ChoiceError::Model(format!("row {i} has a negative entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(ChoiceError::Model(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self { lambda, rho })
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    /// Expected visits to each non-offered item before absorption, indexed
    /// like `transient`.
    fn expected_visits(&self, transient: &[usize]) -> Vec<f64> {
        if transient.is_empty() {
            return Vec::new();
        }
        let k = transient.len();
        let lam: Vec<f64> = transient.iter().map(|&j| self.lambda[j]).collect();
        // (I - Q)^T v = lambda_T
        let m = DMatrix::from_fn(k, k, |r, c| {
            let q = self.rho[transient[c]][transient[r]];
            if r == c {
                1.0 - q
            } else {
                -q
            }
        });
        let rhs = nalgebra::DVector::from_vec(lam.clone());
        if let Some(v) = m.lu().solve(&rhs) {
            if v.iter().all(|x| x.is_finite() && *x >= -1e-9) {
                return v.iter().map(|x| x.max(0.0)).collect();
            }
        }
        self.expected_visits_iterative(transient, &lam)
    }

    /// Fixed-point iteration `v <- lambda_T + Q^T v`; used when the dense
    /// solve is singular.
    fn expected_visits_iterative(&self, transient: &[usize], lam: &[f64]) -> Vec<f64> {
        let k = transient.len();
        let mut v = lam.to_vec();
        for _ in 0..ITERATIVE_MAX {
            let mut next = lam.to_vec();
            for (a, &ja) in transient.iter().enumerate() {
                if v[a] == 0.0 {
                    continue;
                }
                for (b, &jb) in transient.iter().enumerate() {
                    next[b] += v[a] * self.rho[ja][jb];
                }
            }
            let delta = (0..k).map(|i| (next[i] - v[i]).abs()).fold(0.0, f64::max);
            v = next;
            if delta < ITERATIVE_TOL {
                break;
            }
        }
        v
    }
}

impl ChoiceModel for MccmModel {
    fn n(&self) -> usize {
        self.lambda.len()
    }

    /// Absorption probabilities. Mass that never reaches an offered item
    /// (a closed class of non-offered items) is credited to the last item
    /// when it is offered (the no-purchase convention), otherwise spread
    /// proportionally over the offered set.
    fn probabilities(&self, assortment: &Assortment) -> Result<ProbVector> {
        check_len(self.n(), assortment)?;
        let n = self.n();
        let transient: Vec<usize> = (0..n).filter(|&j| !assortment.contains(j)).collect();
        let v = self.expected_visits(&transient);
        let mut p = vec![0.0; n];
        for i in assortment.members() {
            p[i] = self.lambda[i];
        }
        for (a, &j) in transient.iter().enumerate() {
            if v[a] == 0.0 {
                continue;
            }
            for i in assortment.members() {
                p[i] += v[a] * self.rho[j][i];
            }
        }
        let total: f64 = p.iter().sum();
        let residual = 1.0 - total;
        if residual > 1e-12 {
            if assortment.contains(n - 1) {
                p[n - 1] += residual;
            } else {
                p.iter_mut().for_each(|x| *x /= total);
            }
        } else {
            p.iter_mut().for_each(|x| *x /= total);
        }
        Ok(ProbVector(p))
    }
}

/// `(I - Q)^{-1}` for the transient block `transient` of `rho`.
pub fn fundamental_matrix(rho: &[Vec<f64>], transient: &[usize]) -> DMatrix<f64> {
    let k = transient.len();
    let m = DMatrix::from_fn(k, k, |r, c| {
        let q = rho[transient[r]][transient[c]];
        if r == c {
            1.0 - q
        } else {
            -q
        }
    });
    if let Some(inv) = m.clone().try_inverse() {
        if inv.iter().all(|x| x.is_finite() && *x >= -1e-9) {
            return inv;
        }
    }
    // Damped inverse: always defined, equals the true inverse when it exists.
    let damp = 1.0 - 1e-10;
    let m = DMatrix::from_fn(k, k, |r, c| {
        let q = damp * rho[transient[r]][transient[c]];
        if r == c {
            1.0 - q
        } else {
            -q
        }
    });
    m.try_inverse().unwrap_or_else(|| DMatrix::identity(k, k))
}
