use serde::{Deserialize, Serialize};

use super::report::ReportTable;
use super::spec::{streams, Estimator, FitConfig};
use super::ORACLE_ROW;
use crate::choice::{ce_loss, ChoiceDataset, Universe};
use crate::error::{ChoiceError, Result};
use crate::models::{gen_dataset, AssortmentSampler, MccmModel, MccmRecipe, SamplerKind};
use crate::rng::{self, child_seed};

pub const MIX_ROW: &str = "Mix";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShiftSpec {
    /// Universe size, no-purchase option included; the product count must
    /// be divisible by 6 for the half-blocked and third-size samplers.
    pub n: usize,
    pub m_train: usize,
    pub m_val: usize,
    pub m_test: usize,
    pub trials: usize,
    pub seed: u64,
    pub estimator: Estimator,
    pub fit: FitConfig,
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for ShiftSpec {
    fn default() -> Self {
        Self {
            n: 31,
            m_train: 100_000,
            m_val: 5_000,
            m_test: 10_000,
            trials: 1,
            seed: 0,
            estimator: Estimator::gasn(1),
            fit: FitConfig::default(),
            jobs: 1,
        }
    }
}

impl ShiftSpec {
    pub fn trial_seeds(&self) -> Vec<u64> {
        (0..self.trials)
            .map(|t| child_seed(self.seed, t as u64))
            .collect()
    }
}

/// The four training/testing assortment distributions D-1..D-4.
pub fn shift_samplers(universe: Universe) -> Result<Vec<AssortmentSampler>> {
    [
        SamplerKind::UniformSize,
        SamplerKind::BernoulliHalf,
        SamplerKind::HalfBlocked,
        SamplerKind::WindowThird,
    ]
    .into_iter()
    .map(|k| AssortmentSampler::new(k, universe))
    .collect()
}

/// Test cross-entropy of a network trained under each assortment
/// distribution (rows) and tested under each (columns). The `Mix` row trains
/// on equal shares of all four; the oracle row is the true model. The truth
/// is a plain Markov chain drawn per trial.
pub fn distribution_shift_experiment(spec: &ShiftSpec) -> Result<ReportTable> {
    if spec.m_train < 4 || spec.m_test == 0 || spec.trials == 0 {
        return Err(ChoiceError::Config(
            "m_train >= 4, m_test and trials must be positive".into(),
        ));
    }
    let universe = Universe::with_no_purchase(spec.n)?;
    let samplers = shift_samplers(universe)?;
    let labels: Vec<String> = samplers.iter().map(|s| s.kind.label()).collect();
    let mut rows = labels.clone();
    rows.push(MIX_ROW.to_string());
    rows.push(ORACLE_ROW.to_string());
    let mut table = ReportTable::new(
        "out-of-domain test cross-entropy",
        "ce",
        rows.clone(),
        labels.clone(),
    );
    let per_trial = super::par_map(
        spec.trials,
        spec.jobs,
        |t| -> Result<Vec<(String, String, Result<f64>)>> {
            let seed = child_seed(spec.seed, t as u64);
            let truth = MccmRecipe::plain()
                .generate(spec.n, &mut rng::seeded(child_seed(seed, streams::TRUTH)))?;
            shift_trial(&truth, &samplers, spec, seed)
        },
    );
    for result in per_trial {
        for (row, col, value) in result? {
            match value {
                Ok(v) => table.push(&row, &col, v),
                Err(e) => table.fail(&row, &col, e.to_string()),
            }
        }
    }
    Ok(table)
}

fn shift_trial(
    truth: &MccmModel,
    samplers: &[AssortmentSampler],
    spec: &ShiftSpec,
    seed: u64,
) -> Result<Vec<(String, String, Result<f64>)>> {
    let draw =
        |s: &AssortmentSampler, m: usize, id: u64| gen_dataset(truth, s, m, child_seed(seed, id));
    let tests: Vec<ChoiceDataset> = samplers
        .iter()
        .enumerate()
        .map(|(j, s)| draw(s, spec.m_test, 10 + j as u64))
        .collect::<Result<_>>()?;
    let mut sets = Vec::new();
    for (j, s) in samplers.iter().enumerate() {
        let train = draw(s, spec.m_train, 20 + j as u64)?;
        let val = draw(s, spec.m_val.max(1), 30 + j as u64)?;
        sets.push((s.kind.label(), train, val));
    }
    let share = spec.m_train / samplers.len();
    let vshare = (spec.m_val / samplers.len()).max(1);
    let mut mix_train = ChoiceDataset::new(samplers[0].universe, Vec::new());
    let mut mix_val = mix_train.clone();
    for (_, train, val) in &sets {
        mix_train.extend_from(&train.slice(0, share))?;
        mix_val.extend_from(&val.slice(0, vshare.min(val.len())))?;
    }
    sets.push((MIX_ROW.to_string(), mix_train, mix_val));
    let mut out = Vec::new();
    for (r, (row, train, val)) in sets.iter().enumerate() {
        let fitted = spec.estimator.fit(
            train,
            Some(val),
            &spec.fit,
            child_seed(seed, streams::FIT + r as u64),
        );
        for (j, test) in tests.iter().enumerate() {
            let col = samplers[j].kind.label();
            let v = match &fitted {
                Ok(m) => ce_loss(m, test),
                Err(e) => Err(ChoiceError::Config(format!("fit failed: {e}"))),
            };
            out.push((row.clone(), col, v));
        }
    }
    for (j, test) in tests.iter().enumerate() {
        out.push((
            ORACLE_ROW.to_string(),
            samplers[j].kind.label(),
            ce_loss(truth, test),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::TrainConfig;

    #[test]
    fn grid_shape_and_oracle_bound() {
        let spec = ShiftSpec {
            n: 7,
            m_train: 2000,
            m_val: 400,
            m_test: 3000,
            trials: 1,
            seed: 3,
            fit: FitConfig {
                train: TrainConfig {
                    epochs: 20,
                    lr: 0.01,
                    ..TrainConfig::default()
                },
                ..FitConfig::default()
            },
            ..ShiftSpec::default()
        };
        let t = distribution_shift_experiment(&spec).unwrap();
        assert_eq!(t.rows, vec!["D-1", "D-2", "D-3", "D-4", "Mix", "oracle"]);
        assert_eq!(t.cols, vec!["D-1", "D-2", "D-3", "D-4"]);
        for col in &t.cols {
            let oracle = t.mean(ORACLE_ROW, col).unwrap();
            // same test set, so a fitted model can only beat the oracle by noise
            assert!(t.mean(col, col).unwrap() > oracle - 0.03);
        }
    }
}
