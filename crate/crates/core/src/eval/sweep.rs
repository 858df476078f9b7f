use serde::{Deserialize, Serialize};

use super::prediction::run_prediction_experiment;
use super::report::ReportTable;
use super::spec::{streams, Estimator, ExperimentSpec};
use crate::choice::Universe;
use crate::error::{ChoiceError, Result};
use crate::models::{gen_dataset, mccm_recipe, AssortmentSampler, MccmModel, SamplerKind};
use crate::neural::{train, warm_start_augment, Arch, NetworkParams, TrainConfig, WarmInit};
use crate::rng::{self, child_seed};

/// Test cross-entropy for networks of depth `depths` (width 1) and for
/// two-layer networks whose hidden width is `widths * n`, all on the
/// spec's truth and data. Residual networks of the same depths are added.
pub fn depth_width_sweep(
    spec: &ExperimentSpec,
    depths: &[usize],
    widths: &[usize],
) -> Result<ReportTable> {
    let mut estimators = Vec::new();
    for &d in depths {
        estimators.push(Estimator::gasn(d));
    }
    for &w in widths {
        let e = Estimator::Net {
            arch: Arch::Gasn,
            depth: 2,
            width: w,
        };
        if !estimators.contains(&e) && !(w == 1 && estimators.contains(&Estimator::gasn(2))) {
            estimators.push(e);
        }
    }
    for &d in depths {
        estimators.push(Estimator::rasn(d));
    }
    let spec = ExperimentSpec {
        estimators,
        ..spec.clone()
    };
    let mut table = run_prediction_experiment(&spec)?;
    table.title = "network size sweep, test cross-entropy".into();
    Ok(table)
}

/// Folds the products with index `>= keep` into the no-purchase option:
/// their arrival mass and every transition into them go to no-purchase.
pub fn shrink_mccm(model: &MccmModel, keep: usize) -> Result<MccmModel> {
    let n = model.n();
    if keep == 0 || keep >= n - 1 {
        return Err(ChoiceError::Config(format!(
            "cannot keep {keep} of {} products",
            n - 1
        )));
    }
    let np = n - 1;
    let fold = |row: &[f64]| -> Vec<f64> {
        let mut out: Vec<f64> = row[..keep].to_vec();
        out.push(row[keep..].iter().sum());
        out
    };
    let lambda = fold(&model.lambda);
    let mut rho: Vec<Vec<f64>> = (0..keep).map(|i| fold(&model.rho[i])).collect();
    rho.push(fold(&model.rho[np]));
    MccmModel::new(lambda, rho)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WarmSpec {
    pub old_products: usize,
    pub new_products: usize,
    pub m_pretrain: usize,
    pub m_retrain: usize,
    pub m_val: usize,
    pub hidden: usize,
    pub arch: Arch,
    pub trials: usize,
    pub seed: u64,
    pub pretrain: TrainConfig,
    pub retrain: TrainConfig,
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for WarmSpec {
    fn default() -> Self {
        Self {
            old_products: 20,
            new_products: 5,
            m_pretrain: 100_000,
            m_retrain: 2_000,
            m_val: 5_000,
            hidden: 50,
            arch: Arch::Gasn,
            trials: 10,
            seed: 0,
            pretrain: TrainConfig::default(),
            retrain: TrainConfig::default(),
            jobs: 1,
        }
    }
}

impl WarmSpec {
    pub fn trial_seeds(&self) -> Vec<u64> {
        (0..self.trials)
            .map(|t| child_seed(self.seed, t as u64))
            .collect()
    }
}

/// Validation loss per retraining epoch for a network grown from one
/// trained on the reduced product set (`warm`) and for a fresh network
/// (`cold`). Both are trained on the same data with the same batch order.
pub fn warm_start_experiment(spec: &WarmSpec) -> Result<ReportTable> {
    if spec.old_products == 0 || spec.new_products == 0 || spec.trials == 0 || spec.m_val == 0 {
        return Err(ChoiceError::Config(
            "product counts, trials and m_val must be positive".into(),
        ));
    }
    let n_new = spec.old_products + spec.new_products + 1;
    let n_old = spec.old_products + 1;
    let cols: Vec<String> = (1..=spec.retrain.epochs)
        .map(|e| format!("epoch {e}"))
        .collect();
    let mut table = ReportTable::new(
        "validation loss while retraining on the enlarged product set",
        "val ce",
        vec!["cold".into(), "warm".into()],
        cols.clone(),
    );
    let per_trial = super::par_map(spec.trials, spec.jobs, |t| -> Result<[Vec<f64>; 2]> {
        let seed = child_seed(spec.seed, t as u64);
        let truth = mccm_recipe(n_new)
            .generate(n_new, &mut rng::seeded(child_seed(seed, streams::TRUTH)))?;
        let small = shrink_mccm(&truth, spec.old_products)?;
        let uniform = |n: usize| {
            AssortmentSampler::new(SamplerKind::UniformSize, Universe::with_no_purchase(n)?)
        };
        let (s_old, s_new) = (uniform(n_old)?, uniform(n_new)?);
        let pre = gen_dataset(
            &small,
            &s_old,
            spec.m_pretrain,
            child_seed(seed, streams::TRAIN),
        )?;
        let pre_val = gen_dataset(&small, &s_old, spec.m_val, child_seed(seed, streams::VAL))?;
        let re = gen_dataset(
            &truth,
            &s_new,
            spec.m_retrain,
            child_seed(seed, 10 + streams::TRAIN),
        )?;
        let val = gen_dataset(
            &truth,
            &s_new,
            spec.m_val,
            child_seed(seed, 10 + streams::VAL),
        )?;
        let dims = |n: usize| vec![n, spec.hidden, n];
        let init = NetworkParams::glorot(spec.arch, &dims(n_old), child_seed(seed, streams::FIT))?;
        let pcfg = TrainConfig {
            seed: child_seed(seed, streams::FIT + 1),
            ..spec.pretrain.clone()
        };
        let (old, _) = train(init, &pre, Some(&pre_val), &pcfg)?;
        let warm = warm_start_augment(
            &old,
            n_new,
            WarmInit::Standard,
            child_seed(seed, streams::FIT + 2),
        )?;
        let cold =
            NetworkParams::glorot(spec.arch, &dims(n_new), child_seed(seed, streams::FIT + 3))?;
        let rcfg = TrainConfig {
            seed: child_seed(seed, streams::FIT + 4),
            ..spec.retrain.clone()
        };
        let (_, cold_log) = train(cold, &re, Some(&val), &rcfg)?;
        let (_, warm_log) = train(warm, &re, Some(&val), &rcfg)?;
        Ok([cold_log.val_curve(), warm_log.val_curve()])
    });
    for result in per_trial {
        let [cold, warm] = result?;
        for (col, (c, w)) in cols.iter().zip(cold.iter().zip(&warm)) {
            table.push("cold", col, *c);
            table.push("warm", col, *w);
        }
    }
    Ok(table)
}
