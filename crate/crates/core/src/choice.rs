//! Universe, assortments, datasets and the choice-model interface.

use std::fmt;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{ChoiceError, Result};

/// Lower clamp applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Tolerance used when checking that a model output is normalised.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// The fixed product universe `{0, .., n-1}`.
///
/// When `no_purchase` is set, index `n - 1` is the outside option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Universe {
    n: usize,
    no_purchase: bool,
}

impl Universe {
    pub fn new(n: usize, no_purchase: bool) -> Result<Self> {
        if n < 2 {
            return Err(ChoiceError::Universe(format!(
                "need at least 2 items, got {n}"
            )));
        }
        Ok(Self { n, no_purchase })
    }

    /// `n` items of which the last is the no-purchase option.
    pub fn with_no_purchase(n: usize) -> Result<Self> {
        Self::new(n, true)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_no_purchase(&self) -> bool {
        self.no_purchase
    }

    pub fn no_purchase_index(&self) -> Option<usize> {
        self.no_purchase.then(|| self.n - 1)
    }

    /// Number of real products (items other than the no-purchase option).
    pub fn product_count(&self) -> usize {
        if self.no_purchase {
            self.n - 1
        } else {
            self.n
        }
    }

    pub fn products(&self) -> std::ops::Range<usize> {
        0..self.product_count()
    }
}

/// Binary encoding of an offered set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assortment {
    mask: Vec<bool>,
}

impl Assortment {
    /// Validating constructor: at least one bit set and the no-purchase bit
    /// set whenever the universe declares one.
    pub fn new(universe: &Universe, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != universe.n() {
            return Err(ChoiceError::Dimension {
                expected: universe.n(),
                got: mask.len(),
                context: "assortment mask",
            });
        }
        if !mask.iter().any(|&b| b) {
            return Err(ChoiceError::Assortment("empty assortment".into()));
        }
        if let Some(np) = universe.no_purchase_index() {
            if !mask[np] {
                return Err(ChoiceError::Assortment(
                    "no-purchase option must be offered".into(),
                ));
            }
        }
        Ok(Self { mask })
    }

    /// Builds from a mask without checking universe rules.
    pub fn from_mask(mask: Vec<bool>) -> Self {
        Self { mask }
    }

    /// Offered products `items`; the no-purchase option is added when declared.
    pub fn from_products(universe: &Universe, items: &[usize]) -> Result<Self> {
        let mut mask = vec![false; universe.n()];
        for &i in items {
            if i >= universe.n() {
                return Err(ChoiceError::Assortment(format!(
                    "product {i} outside universe of {}",
                    universe.n()
                )));
            }
            mask[i] = true;
        }
        if let Some(np) = universe.no_purchase_index() {
            mask[np] = true;
        }
        Self::new(universe, mask)
    }

    pub fn full(universe: &Universe) -> Self {
        Self {
            mask: vec![true; universe.n()],
        }
    }

    /// The assortment containing only the no-purchase option.
    pub fn no_purchase_only(universe: &Universe) -> Result<Self> {
        let np = universe
            .no_purchase_index()
            .ok_or_else(|| ChoiceError::Assortment("universe has no no-purchase option".into()))?;
        let mut mask = vec![false; universe.n()];
        mask[np] = true;
        Ok(Self { mask })
    }

    /// Decodes the low `n` bits of `bits` (bit `i` = item `i`).
    pub fn from_bits(n: usize, bits: u64) -> Self {
        Self {
            mask: (0..n).map(|i| bits >> i & 1 == 1).collect(),
        }
    }

    pub fn to_bits(&self) -> u64 {
        self.mask
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| if b { acc | 1 << i } else { acc })
    }

    pub fn n(&self) -> usize {
        self.mask.len()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask.get(i).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn with(&self, i: usize, offered: bool) -> Self {
        let mut mask = self.mask.clone();
        mask[i] = offered;
        Self { mask }
    }

    /// `'0'/'1'` string, character `i` = item `i`.
    pub fn to_mask_string(&self) -> String {
        self.mask
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }

    pub fn parse_mask(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(ChoiceError::Assortment(format!(
                    "invalid mask character {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_mask)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.mask
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect()
    }
}

impl fmt::Display for Assortment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_mask_string())
    }
}

/// Dense choice-probability vector over the whole universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbVector(pub Vec<f64>);

impl ProbVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks support and normalisation against `assortment`.
    pub fn check(&self, assortment: &Assortment, tol: f64) -> Result<()> {
        if self.0.len() != assortment.n() {
            return Err(ChoiceError::Invariant(format!(
                "probability vector has length {} for universe of {}",
                self.0.len(),
                assortment.n()
            )));
        }
        let mut total = 0.0;
        for (i, &p) in self.0.iter().enumerate() {
            if !p.is_finite() || !(-tol..=1.0 + tol).contains(&p) {
                return Err(ChoiceError::Invariant(format!(
                    "P({i}) = {p} outside [0,1]"
                )));
            }
            if assortment.contains(i) {
                total += p;
            } else if p != 0.0 {
                return Err(ChoiceError::Invariant(format!(
                    "P({i}) = {p} for an item outside the assortment"
                )));
            }
        }
        if (total - 1.0).abs() > tol {
            return Err(ChoiceError::Invariant(format!(
                "in-assortment probabilities sum to {total}"
            )));
        }
        Ok(())
    }

    /// Shannon entropy (nats).
    pub fn entropy(&self) -> f64 {
        self.0
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum()
    }
}

/// Softmax over the offered items, exact zero elsewhere. Uses max-subtraction.
pub fn gated_softmax(logits: &[f64], assortment: &Assortment) -> ProbVector {
    let max = logits
        .iter()
        .zip(assortment.mask())
        .filter(|(_, &s)| s)
        .map(|(&z, _)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logits
        .iter()
        .zip(assortment.mask())
        .map(|(&z, &s)| if s { (z - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    ProbVector(p)
}

/// Per-unit revenues; the no-purchase entry is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevenueSpec {
    pub mu: Vec<f64>,
}

impl RevenueSpec {
    pub fn new(universe: &Universe, mu: Vec<f64>) -> Result<Self> {
        if mu.len() != universe.n() {
            return Err(ChoiceError::Dimension {
                expected: universe.n(),
                got: mu.len(),
                context: "revenue vector",
            });
        }
        if mu.iter().any(|x| !x.is_finite()) {
            return Err(ChoiceError::Model("revenues must be finite".into()));
        }
        if let Some(np) = universe.no_purchase_index() {
            if mu[np] != 0.0 {
                return Err(ChoiceError::Model("no-purchase revenue must be 0".into()));
            }
        }
        Ok(Self { mu })
    }

    pub fn max(&self) -> f64 {
        self.mu.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Knapsack-style row `a . z <= c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityConstraint {
    pub a: Vec<f64>,
    pub c: f64,
}

impl CapacityConstraint {
    pub fn new(universe: &Universe, a: Vec<f64>, c: f64) -> Result<Self> {
        if a.len() != universe.n() {
            return Err(ChoiceError::Dimension {
                expected: universe.n(),
                got: a.len(),
                context: "capacity coefficients",
            });
        }
        if a.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(ChoiceError::Model(
                "capacity coefficients must be >= 0".into(),
            ));
        }
        if !(c > 0.0) {
            return Err(ChoiceError::Model("capacity budget must be > 0".into()));
        }
        if let Some(np) = universe.no_purchase_index() {
            if a[np] != 0.0 {
                return Err(ChoiceError::Model(
                    "no-purchase coefficient must be 0".into(),
                ));
            }
        }
        Ok(Self { a, c })
    }

    pub fn usage(&self, assortment: &Assortment) -> f64 {
        assortment.members().map(|i| self.a[i]).sum()
    }

    pub fn admits(&self, assortment: &Assortment) -> bool {
        self.usage(assortment) <= self.c + 1e-9
    }
}

/// One transaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceSample {
    pub chosen: usize,
    pub assortment: Assortment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub customer_features: Option<Vec<f64>>,
}

impl ChoiceSample {
    pub fn new(chosen: usize, assortment: Assortment) -> Self {
        Self {
            chosen,
            assortment,
            customer_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceDataset {
    pub universe: Universe,
    pub samples: Vec<ChoiceSample>,
    /// Static product features, one row per item.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product_features: Option<Vec<Vec<f64>>>,
}

impl ChoiceDataset {
    pub fn new(universe: Universe, samples: Vec<ChoiceSample>) -> Self {
        Self {
            universe,
            samples,
            product_features: None,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Dimension of the customer features, if any sample carries them.
    pub fn customer_dim(&self) -> Option<usize> {
        self.samples
            .iter()
            .find_map(|s| s.customer_features.as_ref().map(Vec::len))
    }

    pub fn product_dim(&self) -> Option<usize> {
        self.product_features
            .as_ref()
            .and_then(|rows| rows.first().map(Vec::len))
    }

    /// Concatenation; both sides must share a universe.
    pub fn extend_from(&mut self, other: &ChoiceDataset) -> Result<()> {
        if self.universe != other.universe {
            return Err(ChoiceError::Dataset("universe mismatch".into()));
        }
        self.samples.extend(other.samples.iter().cloned());
        Ok(())
    }

    /// Splits off a contiguous block `[start, start+len)` as a new dataset.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        Self {
            universe: self.universe,
            samples: self.samples[start..start + len].to_vec(),
            product_features: self.product_features.clone(),
        }
    }
}

/// A single broken dataset rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Offending sample, `None` for dataset-level rules.
    pub sample: Option<usize>,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sample {
            Some(k) => write!(f, "sample {k}: {}", self.rule),
            None => write!(f, "dataset: {}", self.rule),
        }
    }
}

/// Lists every broken invariant; never fails.
pub fn validate_dataset(data: &ChoiceDataset) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = data.universe.n();
    let np = data.universe.no_purchase_index();
    let cdim = data.customer_dim();
    if let Some(rows) = &data.product_features {
        if rows.len() != n {
            out.push(Violation {
                sample: None,
                rule: format!(
                    "product feature table has {} rows, universe has {n}",
                    rows.len()
                ),
            });
        }
        if let Some(d) = data.product_dim() {
            for (i, row) in rows.iter().enumerate() {
                if row.len() != d {
                    out.push(Violation {
                        sample: None,
                        rule: format!("product {i} has {} features, expected {d}", row.len()),
                    });
                }
            }
        }
    }
    for (k, s) in data.samples.iter().enumerate() {
        let a = &s.assortment;
        if a.n() != n {
            out.push(Violation {
                sample: Some(k),
                rule: format!("assortment length {} differs from universe size {n}", a.n()),
            });
            continue;
        }
        if a.is_empty() {
            out.push(Violation {
                sample: Some(k),
                rule: "empty assortment".into(),
            });
        }
        if let Some(np) = np {
            if !a.contains(np) {
                out.push(Violation {
                    sample: Some(k),
                    rule: "no-purchase option not offered".into(),
                });
            }
        }
        if s.chosen >= n || !a.contains(s.chosen) {
            out.push(Violation {
                sample: Some(k),
                rule: format!("chosen product {} is not in the assortment", s.chosen),
            });
        }
        match (&s.customer_features, cdim) {
            (Some(f), Some(d)) if f.len() != d => out.push(Violation {
                sample: Some(k),
                rule: format!("customer feature dimension {} differs from {d}", f.len()),
            }),
            (None, Some(_)) => out.push(Violation {
                sample: Some(k),
                rule: "missing customer features".into(),
            }),
            _ => {}
        }
    }
    out
}

/// Probability oracle `P(i | S)`.
pub trait ChoiceModel {
    /// Universe size the model is defined on.
    fn n(&self) -> usize;

    fn probabilities(&self, assortment: &Assortment) -> Result<ProbVector>;

    /// Context-dependent probabilities; feature-free models ignore `customer`.
    fn probabilities_for(
        &self,
        assortment: &Assortment,
        customer: Option<&[f64]>,
    ) -> Result<ProbVector> {
        let _ = customer;
        self.probabilities(assortment)
    }
}

impl<T: ChoiceModel + ?Sized> ChoiceModel for &T {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn probabilities(&self, assortment: &Assortment) -> Result<ProbVector> {
        (**self).probabilities(assortment)
    }
    fn probabilities_for(&self, a: &Assortment, c: Option<&[f64]>) -> Result<ProbVector> {
        (**self).probabilities_for(a, c)
    }
}

impl<T: ChoiceModel + ?Sized> ChoiceModel for Box<T> {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn probabilities(&self, assortment: &Assortment) -> Result<ProbVector> {
        (**self).probabilities(assortment)
    }
    fn probabilities_for(&self, a: &Assortment, c: Option<&[f64]>) -> Result<ProbVector> {
        (**self).probabilities_for(a, c)
    }
}

/// Uniform over the offered set.
#[derive(Debug, Clone, Copy)]
pub struct UniformModel {
    pub n: usize,
}

impl ChoiceModel for UniformModel {
    fn n(&self) -> usize {
        self.n
    }
    fn probabilities(&self, assortment: &Assortment) -> Result<ProbVector> {
        let k = assortment.len() as f64;
        Ok(ProbVector(
            assortment
                .mask()
                .iter()
                .map(|&s| if s { 1.0 / k } else { 0.0 })
                .collect(),
        ))
    }
}

fn check_dataset(data: &ChoiceDataset) -> Result<()> {
    let violations = validate_dataset(data);
    if let Some(v) = violations.first() {
        return Err(ChoiceError::Dataset(format!(
            "{v} ({} violation(s) in total)",
            violations.len()
        )));
    }
    Ok(())
}

/// Mean negative log-likelihood of the observed choices.
pub fn ce_loss<M: ChoiceModel + ?Sized>(model: &M, data: &ChoiceDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(ChoiceError::Dataset("empty dataset".into()));
    }
    if model.n() != data.universe.n() {
        return Err(ChoiceError::Dimension {
            expected: data.universe.n(),
            got: model.n(),
            context: "model universe",
        });
    }
    check_dataset(data)?;
    let mut total = 0.0;
    for s in &data.samples {
        let p = model.probabilities_for(&s.assortment, s.customer_features.as_deref())?;
        p.check(&s.assortment, NORMALIZATION_TOL)?;
        total -= p.get(s.chosen).max(PROB_FLOOR).ln();
    }
    Ok(total / data.len() as f64)
}

/// Mean entropy of the model's choice distribution over the given contexts;
/// equals the expected CE of the model against itself.
pub fn mean_entropy<M: ChoiceModel + ?Sized>(model: &M, data: &ChoiceDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(ChoiceError::Dataset("empty dataset".into()));
    }
    let mut total = 0.0;
    for s in &data.samples {
        total += model
            .probabilities_for(&s.assortment, s.customer_features.as_deref())?
            .entropy();
    }
    Ok(total / data.len() as f64)
}

/// `sum_i mu_i P(i | S)`.
pub fn expected_revenue<M: ChoiceModel + ?Sized>(
    model: &M,
    assortment: &Assortment,
    rev: &RevenueSpec,
) -> Result<f64> {
    let p = model.probabilities(assortment)?;
    Ok(assortment.members().map(|i| rev.mu[i] * p.get(i)).sum())
}

/// Inverse-CDF draw from a probability vector.
pub fn draw_index(p: &[f64], rng: &mut crate::rng::Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &pi) in p.iter().enumerate() {
        if pi > 0.0 {
            acc += pi;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Draws one choice from `P(. | S)`.
pub fn sample_choice<M: ChoiceModel + ?Sized>(
    model: &M,
    assortment: &Assortment,
    rng: &mut crate::rng::Rng,
) -> Result<usize> {
    let p = model.probabilities(assortment)?;
    Ok(draw_index(p.as_slice(), rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::MnlModel;
    use crate::rng;

    fn uni(n: usize) -> Universe {
        Universe::with_no_purchase(n).unwrap()
    }

    #[test]
    fn universe_rules() {
        assert!(Universe::new(1, true).is_err());
        let u = uni(4);
        assert_eq!(u.no_purchase_index(), Some(3));
        assert_eq!(u.product_count(), 3);
        assert_eq!(Universe::new(3, false).unwrap().no_purchase_index(), None);
    }

    #[test]
    fn assortment_requires_no_purchase_bit() {
        let u = uni(3);
        assert!(Assortment::new(&u, vec![true, false, false]).is_err());
        assert!(Assortment::new(&u, vec![false, false, false]).is_err());
        assert!(Assortment::new(&u, vec![true, false, true]).is_ok());
        let a = Assortment::from_products(&u, &[1]).unwrap();
        assert_eq!(a.to_mask_string(), "011");
        assert_eq!(Assortment::parse_mask("011").unwrap(), a);
        assert_eq!(Assortment::from_bits(3, a.to_bits()), a);
    }

    #[test]
    fn perfect_prediction_has_zero_loss() {
        struct Oracle;
        impl ChoiceModel for Oracle {
            fn n(&self) -> usize {
                3
            }
            fn probabilities(&self, a: &Assortment) -> Result<ProbVector> {
                // everything on product 0 when offered, else no-purchase
                let mut p = vec![0.0; 3];
                if a.contains(0) {
                    p[0] = 1.0;
                } else {
                    p[2] = 1.0;
                }
                Ok(ProbVector(p))
            }
        }
        let u = uni(3);
        let data = ChoiceDataset::new(
            u,
            vec![
                ChoiceSample::new(0, Assortment::full(&u)),
                ChoiceSample::new(2, Assortment::from_products(&u, &[1]).unwrap()),
            ],
        );
        assert_eq!(ce_loss(&Oracle, &data).unwrap(), 0.0);
    }

    #[test]
    fn uniform_loss_is_log_size() {
        let u = uni(6);
        let s = Assortment::from_products(&u, &[0, 2, 4]).unwrap();
        let data = ChoiceDataset::new(u, vec![ChoiceSample::new(2, s.clone()); 5]);
        let loss = ce_loss(&UniformModel { n: 6 }, &data).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_utility_mnl_loss_is_log4() {
        let u = uni(4);
        let m = MnlModel::new(vec![0.0; 4]).unwrap();
        let data = ChoiceDataset::new(
            u,
            vec![
                ChoiceSample::new(0, Assortment::full(&u)),
                ChoiceSample::new(3, Assortment::full(&u)),
            ],
        );
        assert!((ce_loss(&m, &data).unwrap() - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn loss_rejects_chosen_outside_assortment() {
        let u = uni(3);
        let s = Assortment::from_products(&u, &[0]).unwrap();
        let data = ChoiceDataset::new(u, vec![ChoiceSample::new(1, s)]);
        let err = ce_loss(&UniformModel { n: 3 }, &data).unwrap_err();
        assert!(matches!(err, ChoiceError::Dataset(_)));
    }

    #[test]
    fn loss_rejects_unnormalised_model() {
        struct Bad;
        impl ChoiceModel for Bad {
            fn n(&self) -> usize {
                2
            }
            fn probabilities(&self, _: &Assortment) -> Result<ProbVector> {
                Ok(ProbVector(vec![0.7, 0.7]))
            }
        }
        let u = uni(2);
        let data = ChoiceDataset::new(u, vec![ChoiceSample::new(0, Assortment::full(&u))]);
        assert!(matches!(
            ce_loss(&Bad, &data),
            Err(ChoiceError::Invariant(_))
        ));
    }

    #[test]
    fn revenue_examples() {
        let u = uni(2);
        let m = MnlModel::new(vec![0.0, 0.0]).unwrap();
        let rev = RevenueSpec::new(&u, vec![10.0, 0.0]).unwrap();
        let r = expected_revenue(&m, &Assortment::full(&u), &rev).unwrap();
        assert!((r - 5.0).abs() < 1e-12);
        let r0 = expected_revenue(&m, &Assortment::no_purchase_only(&u).unwrap(), &rev).unwrap();
        assert_eq!(r0, 0.0);

        let u3 = uni(3);
        let m3 = MnlModel::new(vec![1.0, 0.0, 0.0]).unwrap();
        let rev3 = RevenueSpec::new(&u3, vec![10.0, 20.0, 0.0]).unwrap();
        let e = 1f64.exp();
        let want = 10.0 * e / (e + 2.0) + 20.0 / (e + 2.0);
        let got = expected_revenue(&m3, &Assortment::full(&u3), &rev3).unwrap();
        assert!((got - want).abs() < 1e-12);
        assert!((got - 10.0).abs() < 0.05);
    }

    #[test]
    fn revenue_spec_rules() {
        let u = uni(3);
        assert!(RevenueSpec::new(&u, vec![1.0, 2.0, 0.5]).is_err());
        assert!(RevenueSpec::new(&u, vec![1.0, f64::NAN, 0.0]).is_err());
        assert!(CapacityConstraint::new(&u, vec![1.0, 1.0, 1.0], 1.0).is_err());
        assert!(CapacityConstraint::new(&u, vec![1.0, 1.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn singleton_sampling_is_certain() {
        let u = uni(4);
        let m = MnlModel::new(vec![0.3, -1.0, 2.0, 0.0]).unwrap();
        let s = Assortment::no_purchase_only(&u).unwrap();
        let mut r = rng::seeded(1);
        for _ in 0..100 {
            assert_eq!(sample_choice(&m, &s, &mut r).unwrap(), 3);
        }
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let u = uni(4);
        let s = Assortment::full(&u);
        let mut r = rng::seeded(11);
        let mut counts = [0usize; 4];
        let draws = 100_000;
        for _ in 0..draws {
            counts[sample_choice(&UniformModel { n: 4 }, &s, &mut r).unwrap()] += 1;
        }
        for c in counts {
            let f = c as f64 / draws as f64;
            assert!((0.24..=0.26).contains(&f), "frequency {f}");
        }
    }

    #[test]
    fn sampling_is_deterministic_under_seed() {
        let u = uni(5);
        let m = MnlModel::new(vec![0.1, 0.4, -0.2, 1.0, 0.0]).unwrap();
        let s = Assortment::full(&u);
        let run = |seed| {
            let mut r = rng::seeded(seed);
            (0..50)
                .map(|_| sample_choice(&m, &s, &mut r).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
    }

    #[test]
    fn validation_reports_each_rule() {
        let u = uni(4);
        let good = ChoiceDataset::new(
            u,
            vec![
                ChoiceSample::new(0, Assortment::full(&u)),
                ChoiceSample::new(3, Assortment::from_products(&u, &[1]).unwrap()),
                ChoiceSample::new(1, Assortment::from_products(&u, &[1, 2]).unwrap()),
            ],
        );
        assert!(validate_dataset(&good).is_empty());

        let mut bad = good.clone();
        bad.samples[1].chosen = 2;
        let v = validate_dataset(&bad);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].sample, Some(1));

        let mut feat = good.clone();
        for s in &mut feat.samples {
            s.customer_features = Some(vec![0.0; 3]);
        }
        feat.samples[2].customer_features = Some(vec![0.0; 5]);
        let v = validate_dataset(&feat);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].sample, Some(2));
        assert!(v[0].rule.contains("dimension"));
    }
}
