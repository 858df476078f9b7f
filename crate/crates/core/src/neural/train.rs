use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::feature::FeatureNet;
use super::params::NetworkParams;
use crate::choice::{ce_loss, validate_dataset, ChoiceDataset, ChoiceModel, ChoiceSample};
use crate::error::{ChoiceError, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    /// `(W_bar, b_bar)`; parameters are projected after every step when set.
    pub bounds: Option<(f64, f64)>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 100,
            lr: 5e-4,
            epochs: 100,
            seed: 0,
            bounds: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 || !(self.lr > 0.0) {
            return Err(ChoiceError::Config(
                "batch size, epochs and learning rate must be positive".into(),
            ));
        }
        if let Some((w, b)) = self.bounds {
            if !(w > 0.0 && b >= 0.0) {
                return Err(ChoiceError::Config("norm bounds must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_ce: f64,
    pub val_ce: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    /// Epoch (1-based) whose parameters were returned.
    pub best_epoch: usize,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_ce,val_ce\n");
        for e in &self.epochs {
            let val = e.val_ce.map(|v| format!("{v:?}")).unwrap_or_default();
            out.push_str(&format!("{},{:?},{}\n", e.epoch, e.train_ce, val));
        }
        out
    }

    pub fn val_curve(&self) -> Vec<f64> {
        self.epochs.iter().filter_map(|e| e.val_ce).collect()
    }
}

/// A model trainable by [`train`].
pub trait Trainable: ChoiceModel + Clone {
    fn zero_grad(&self) -> Vec<Vec<f64>>;
    /// Adds the gradient of the sample's negative log-likelihood; returns it.
    fn accumulate(&self, sample: &ChoiceSample, grad: &mut [Vec<f64>]) -> Result<f64>;
    fn params_mut(&mut self) -> Vec<&mut [f64]>;
    fn project(&mut self, w_bar: f64, b_bar: f64);
}

impl Trainable for NetworkParams {
    fn zero_grad(&self) -> Vec<Vec<f64>> {
        NetworkParams::zero_grad(self)
    }

    fn accumulate(&self, s: &ChoiceSample, grad: &mut [Vec<f64>]) -> Result<f64> {
        Ok(self
            .backward_input(&s.assortment.as_f64(), &s.assortment, s.chosen, grad)?
            .0)
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.param_slices_mut()
    }

    fn project(&mut self, w_bar: f64, b_bar: f64) {
        NetworkParams::project(self, w_bar, b_bar)
    }
}

impl Trainable for FeatureNet {
    fn zero_grad(&self) -> Vec<Vec<f64>> {
        FeatureNet::zero_grad(self)
    }

    fn accumulate(&self, s: &ChoiceSample, grad: &mut [Vec<f64>]) -> Result<f64> {
        self.backward(
            &s.assortment,
            s.customer_features.as_deref(),
            s.chosen,
            grad,
        )
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.param_slices_mut()
    }

    fn project(&mut self, w_bar: f64, b_bar: f64) {
        self.net.project(w_bar, b_bar);
        for l in self
            .product_encoder
            .layers
            .iter_mut()
            .chain(self.customer_encoder.layers.iter_mut())
        {
            l.project(w_bar, b_bar);
        }
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64, shape: &[Vec<f64>]) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: shape.iter().map(|g| vec![0.0; g.len()]).collect(),
            v: shape.iter().map(|g| vec![0.0; g.len()]).collect(),
        }
    }

    pub fn step(&mut self, params: Vec<&mut [f64]>, grad: &[Vec<f64>]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (k, p) in params.into_iter().enumerate() {
            let (m, v, g) = (&mut self.m[k], &mut self.v[k], &grad[k]);
            for j in 0..p.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                p[j] -= self.lr * (m[j] / c1) / ((v[j] / c2).sqrt() + self.eps);
            }
        }
    }
}

/// Mini-batch Adam on the mean negative log-likelihood. Returns the
/// parameters of the epoch with the lowest validation loss (the last epoch
/// when no validation set is given).
pub fn train<M: Trainable>(
    init: M,
    data: &ChoiceDataset,
    val: Option<&ChoiceDataset>,
    cfg: &TrainConfig,
) -> Result<(M, TrainLog)> {
    train_with(init, data, val, cfg, |_, _| {})
}

/// [`train`] with a per-epoch callback `(epoch, model)`.
pub fn train_with<M: Trainable>(
    init: M,
    data: &ChoiceDataset,
    val: Option<&ChoiceDataset>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog, &M),
) -> Result<(M, TrainLog)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(ChoiceError::Dataset("empty training set".into()));
    }
    if let Some(v) = validate_dataset(data).first() {
        return Err(ChoiceError::Dataset(v.to_string()));
    }
    let mut model = init;
    let mut rng = rng::seeded(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = model.zero_grad();
    let mut adam = Adam::new(cfg.lr, &grad);
    let mut log = TrainLog::default();
    let mut best: Option<(f64, M)> = None;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut()
                .for_each(|g| g.iter_mut().for_each(|x| *x = 0.0));
            for &k in batch {
                total += model.accumulate(&data.samples[k], &mut grad)?;
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut()
                .for_each(|g| g.iter_mut().for_each(|x| *x *= scale));
            if grad.iter().flatten().any(|x| !x.is_finite()) {
                return Err(ChoiceError::Diverged {
                    epoch,
                    reason: "non-finite gradient".into(),
                });
            }
            adam.step(model.params_mut(), &grad);
            if let Some((w, b)) = cfg.bounds {
                model.project(w, b);
            }
        }
        let train_ce = total / data.len() as f64;
        if !train_ce.is_finite() {
            return Err(ChoiceError::Diverged {
                epoch,
                reason: "non-finite training loss".into(),
            });
        }
        let val_ce = val.map(|v| ce_loss(&model, v)).transpose()?;
        let entry = EpochLog {
            epoch,
            train_ce,
            val_ce,
        };
        on_epoch(&entry, &model);
        log.epochs.push(entry);
        let score = val_ce.unwrap_or(f64::NEG_INFINITY);
        if best.as_ref().is_none_or(|(b, _)| score < *b) || val.is_none() {
            best = Some((score, model.clone()));
            log.best_epoch = epoch;
        }
    }
    Ok((best.expect("at least one epoch").1, log))
}
