use serde::{Deserialize, Serialize};

use super::spec::{Estimator, FitConfig};
use crate::choice::{ce_loss, ChoiceDataset};
use crate::error::{ChoiceError, Result};
use crate::models::{gen_dataset, AnyModel, AssortmentSampler, SamplerKind};
use crate::neural::{train, TrainConfig};
use crate::rng::child_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetaConfig {
    /// Size of the synthetic set drawn from the best classical candidate.
    pub m_prime: usize,
    pub fit: FitConfig,
    /// Schedule for the fine-tuning pass on the real training data.
    pub finetune: TrainConfig,
    pub seed: u64,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self {
            m_prime: 100_000,
            fit: FitConfig::default(),
            finetune: TrainConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaOutcome {
    pub model: AnyModel,
    /// Validation loss of every candidate, in input order.
    pub candidate_val: Vec<(String, f64)>,
    pub k_star: usize,
    /// Validation loss of the re-trained and fine-tuned network, when that
    /// branch ran.
    pub retrained_val: Option<f64>,
    pub synthetic_samples: usize,
    pub final_val: f64,
    /// `"candidate"` or `"fine-tuned"`.
    pub source: String,
}

/// Fits every candidate, keeps the one with the lowest validation loss and,
/// when that is not the network, distils it into a network through `m'`
/// synthetic samples followed by fine-tuning on the real data. The better
/// of the distilled network and the best candidate is returned.
pub fn meta_learn(
    train_set: &ChoiceDataset,
    val: &ChoiceDataset,
    candidates: &[Estimator],
    cfg: &MetaConfig,
) -> Result<MetaOutcome> {
    let net = match candidates.first() {
        Some(e @ Estimator::Net { .. }) => *e,
        _ => {
            return Err(ChoiceError::Config(
                "the first candidate must be a network".into(),
            ))
        }
    };
    let mut fitted = Vec::new();
    let mut candidate_val = Vec::new();
    for (k, est) in candidates.iter().enumerate() {
        let loss = match est.fit(
            train_set,
            Some(val),
            &cfg.fit,
            child_seed(cfg.seed, k as u64),
        ) {
            Ok(m) => {
                let l = ce_loss(&m, val)?;
                fitted.push(Some(m));
                l
            }
            Err(_) => {
                fitted.push(None);
                f64::INFINITY
            }
        };
        candidate_val.push((est.to_string(), loss));
    }
    let k_star = (0..candidates.len())
        .min_by(|&a, &b| candidate_val[a].1.total_cmp(&candidate_val[b].1))
        .expect("candidates are non-empty");
    let best_val = candidate_val[k_star].1;
    if !best_val.is_finite() {
        return Err(ChoiceError::Config("every candidate failed to fit".into()));
    }
    let best = fitted[k_star]
        .take()
        .expect("finite loss implies a fitted model");
    if k_star == 0 {
        return Ok(MetaOutcome {
            model: best,
            candidate_val,
            k_star,
            retrained_val: None,
            synthetic_samples: 0,
            final_val: best_val,
            source: "candidate".into(),
        });
    }
    let sampler = AssortmentSampler::new(SamplerKind::UniformSize, train_set.universe)?;
    let synthetic = gen_dataset(&best, &sampler, cfg.m_prime, child_seed(cfg.seed, 1000))?;
    let tmp = net.fit(&synthetic, Some(val), &cfg.fit, child_seed(cfg.seed, 1001))?;
    let AnyModel::Network(tmp) = tmp else {
        return Err(ChoiceError::Invariant(
            "network candidate produced another model".into(),
        ));
    };
    let tc = TrainConfig {
        seed: child_seed(cfg.seed, 1002),
        ..cfg.finetune.clone()
    };
    let (tuned, _) = train(tmp, train_set, Some(val), &tc)?;
    let tuned = AnyModel::Network(tuned);
    let tuned_val = ce_loss(&tuned, val)?;
    let (model, final_val, source) = if tuned_val < best_val {
        (tuned, tuned_val, "fine-tuned")
    } else {
        (best, best_val, "candidate")
    };
    Ok(MetaOutcome {
        model,
        candidate_val,
        k_star,
        retrained_val: Some(tuned_val),
        synthetic_samples: synthetic.len(),
        final_val,
        source: source.into(),
    })
}
