use serde::{Deserialize, Serialize};

use super::mccm::MccmModel;
use super::mnl::{check_len, softmax};
use crate::choice::{gated_softmax, Assortment, ChoiceModel, ProbVector};
use crate::error::{ChoiceError, Result};

/// Item feature vectors `z_i`: the customer features (if any) followed by the
/// product's static features.
fn item_features(
    product_features: &[Vec<f64>],
    customer: Option<&[f64]>,
    want: usize,
) -> Result<Vec<Vec<f64>>> {
    let d = product_features[0].len();
    let c = customer.unwrap_or(&[]);
    let c = if c.len() + d == want {
        c
    } else if d == want {
        &[]
    } else {
        return Err(ChoiceError::Dimension {
            expected: want,
            got: c.len() + d,
            context: "feature vector",
        });
    };
    Ok(product_features
        .iter()
        .map(|p| c.iter().chain(p).copied().collect())
        .collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_table(rows: &[Vec<f64>]) -> Result<()> {
    let d = rows.first().map(Vec::len).unwrap_or(0);
    if rows.len() < 2 || d == 0 {
        return Err(ChoiceError::Model(
            "feature table needs >= 2 rows and >= 1 column".into(),
        ));
    }
    if rows
        .iter()
        .any(|r| r.len() != d || r.iter().any(|x| !x.is_finite()))
    {
        return Err(ChoiceError::Model(
            "feature rows must be finite and equally long".into(),
        ));
    }
    Ok(())
}

/// Linear-in-attributes MNL: `u_i = beta . z_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMnlModel {
    pub beta: Vec<f64>,
    pub product_features: Vec<Vec<f64>>,
}

impl FeatureMnlModel {
    pub fn new(beta: Vec<f64>, product_features: Vec<Vec<f64>>) -> Result<Self> {
        check_table(&product_features)?;
        if beta.iter().any(|x| !x.is_finite()) {
            return Err(ChoiceError::Model("coefficients must be finite".into()));
        }
        Ok(Self {
            beta,
            product_features,
        })
    }

    pub fn utilities(&self, customer: Option<&[f64]>) -> Result<Vec<f64>> {
        let z = item_features(&self.product_features, customer, self.beta.len())?;
        Ok(z.iter().map(|zi| dot(zi, &self.beta)).collect())
    }
}

impl ChoiceModel for FeatureMnlModel {
    fn n(&self) -> usize {
        self.product_features.len()
    }

    fn probabilities(&self, assortment: &Assortment) -> Result<ProbVector> {
        self.probabilities_for(assortment, None)
    }

    fn probabilities_for(
        &self,
        assortment: &Assortment,
        customer: Option<&[f64]>,
    ) -> Result<ProbVector> {
        check_len(self.n(), assortment)?;
        Ok(gated_softmax(&self.utilities(customer)?, assortment))
    }
}

/// Markov chain model whose arrivals and transition rows are softmaxes of
/// linear scores: `lambda = softmax(Z beta)`, `rho_i = softmax_j(A_j . z_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMccmModel {
    pub beta: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub product_features: Vec<Vec<f64>>,
}

impl FeatureMccmModel {
    pub fn new(beta: Vec<f64>, a: Vec<Vec<f64>>, product_features: Vec<Vec<f64>>) -> Result<Self> {
        check_table(&product_features)?;
        if a.len() != product_features.len() {
            return Err(ChoiceError::Dimension {
                expected: product_features.len(),
                got: a.len(),
                context: "transition coefficient rows",
            });
        }
        if a.iter().any(|r| r.len() != beta.len()) {
            return Err(ChoiceError::Model(
                "transition rows must match beta length".into(),
            ));
        }
        if beta
            .iter()
            .chain(a.iter().flatten())
            .any(|x| !x.is_finite())
        {
            return Err(ChoiceError::Model("coefficients must be finite".into()));
        }
        Ok(Self {
            beta,
            a,
            product_features,
        })
    }

    /// The induced Markov chain for one customer context.
    pub fn chain(&self, customer: Option<&[f64]>) -> Result<MccmModel> {
        let z = item_features(&self.product_features, customer, self.beta.len())?;
        let lambda = softmax(&z.iter().map(|zi| dot(zi, &self.beta)).collect::<Vec<_>>());
        let rho = z
            .iter()
            .map(|zi| softmax(&self.a.iter().map(|aj| dot(aj, zi)).collect::<Vec<_>>()))
            .collect();
        MccmModel::new(lambda, rho)
    }
}

impl ChoiceModel for FeatureMccmModel {
    fn n(&self) -> usize {
        self.product_features.len()
    }

    fn probabilities(&self, assortment: &Assortment) -> Result<ProbVector> {
        self.probabilities_for(assortment, None)
    }

    fn probabilities_for(
        &self,
        assortment: &Assortment,
        customer: Option<&[f64]>,
    ) -> Result<ProbVector> {
        self.chain(customer)?.probabilities(assortment)
    }
}
