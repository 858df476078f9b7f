use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::choice::ChoiceDataset;
use crate::error::{ChoiceError, Result};
use crate::estimate::{fit_mccm_em, fit_mnl_mle, EmConfig, MleConfig};
use crate::models::{AnyModel, ModelKind, SamplerKind};
use crate::neural::{train, Arch, NetworkParams, TrainConfig};
use crate::rng;

/// A fitting procedure that turns a training set into a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Estimator {
    MnlMle,
    MccmEm,
    /// Feature-free network with `depth` layers whose hidden widths are
    /// `width * n`.
    Net {
        arch: Arch,
        depth: usize,
        width: usize,
    },
}

impl Estimator {
    pub fn gasn(depth: usize) -> Self {
        Estimator::Net {
            arch: Arch::Gasn,
            depth,
            width: 1,
        }
    }

    pub fn rasn(depth: usize) -> Self {
        Estimator::Net {
            arch: Arch::Rasn,
            depth,
            width: 1,
        }
    }

    /// Fits on `train_set`; networks keep the epoch with the best loss on
    /// `val`.
    pub fn fit(
        &self,
        train_set: &ChoiceDataset,
        val: Option<&ChoiceDataset>,
        cfg: &FitConfig,
        seed: u64,
    ) -> Result<AnyModel> {
        match *self {
            Estimator::MnlMle => Ok(AnyModel::Mnl(fit_mnl_mle(train_set, &cfg.mle)?.model)),
            Estimator::MccmEm => {
                let em = EmConfig {
                    seed,
                    ..cfg.em.clone()
                };
                Ok(AnyModel::Mccm(fit_mccm_em(train_set, &em)?.model))
            }
            Estimator::Net { arch, depth, width } => {
                let n = train_set.universe.n();
                let init = NetworkParams::glorot(arch, &net_dims(arch, n, depth, width), seed)?;
                let tc = TrainConfig {
                    seed: rng::child_seed(seed, 1),
                    ..cfg.train.clone()
                };
                Ok(AnyModel::Network(train(init, train_set, val, &tc)?.0))
            }
        }
    }
}

/// Layer widths for a feature-free network. A residual network of depth
/// `L` has `L` square blocks; wider residual hidden layers are not square
/// and therefore carry no skip connection.
pub fn net_dims(arch: Arch, n: usize, depth: usize, width: usize) -> Vec<usize> {
    match arch {
        Arch::Gasn => NetworkParams::standard_dims(n, depth.max(1), width),
        Arch::Rasn => vec![n; depth.max(1) + 1],
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimator::MnlMle => f.write_str("mnl-mle"),
            Estimator::MccmEm => f.write_str("mccm-em"),
            Estimator::Net { arch, depth, width } if *width <= 1 => write!(f, "{arch}-{depth}"),
            Estimator::Net { arch, depth, width } => write!(f, "{arch}-{depth}x{width}"),
        }
    }
}

impl FromStr for Estimator {
    type Err = ChoiceError;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "mnl-mle" | "mnl" => return Ok(Estimator::MnlMle),
            "mccm-em" | "mccm" | "em" => return Ok(Estimator::MccmEm),
            _ => {}
        }
        let bad = || {
            ChoiceError::Config(format!(
                "unknown estimator {s:?} (mnl-mle|mccm-em|gasn-L|rasn-L|gasn-LxW)"
            ))
        };
        let (arch, rest) = s.split_once('-').ok_or_else(bad)?;
        let arch: Arch = arch.parse().map_err(|_| bad())?;
        let (depth, width) = match rest.split_once('x') {
            Some((d, w)) => (d.parse().map_err(|_| bad())?, w.parse().map_err(|_| bad())?),
            None => (rest.parse().map_err(|_| bad())?, 1),
        };
        if depth == 0 || width == 0 {
            return Err(bad());
        }
        Ok(Estimator::Net { arch, depth, width })
    }
}

impl From<Estimator> for String {
    fn from(e: Estimator) -> String {
        e.to_string()
    }
}

impl TryFrom<String> for Estimator {
    type Error = ChoiceError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Settings shared by every fitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct FitConfig {
    pub train: TrainConfig,
    pub mle: MleConfig,
    pub em: EmConfig,
}

/// Optimization pipeline settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptSettings {
    /// Revenue vectors (and capacity rows) drawn per truth instance.
    pub revenue_draws: usize,
    pub constrained: bool,
    /// Per-instance limit for the network MIP.
    pub time_limit_s: f64,
    pub removal_limit: usize,
}

impl Default for OptSettings {
    fn default() -> Self {
        Self {
            revenue_draws: 20,
            constrained: false,
            time_limit_s: 60.0,
            removal_limit: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub truth: ModelKind,
    /// Universe size, no-purchase option included.
    pub n: usize,
    pub sampler: SamplerKind,
    pub m_train: usize,
    pub m_val: usize,
    pub m_test: usize,
    pub estimators: Vec<Estimator>,
    pub trials: usize,
    pub seed: u64,
    pub fit: FitConfig,
    pub opt: OptSettings,
    /// Worker threads across trials; results do not depend on it.
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            truth: ModelKind::Mnl,
            n: 20,
            sampler: SamplerKind::UniformSize,
            m_train: 100_000,
            m_val: 5_000,
            m_test: 10_000,
            estimators: vec![
                Estimator::MnlMle,
                Estimator::MccmEm,
                Estimator::gasn(1),
                Estimator::rasn(1),
            ],
            trials: 10,
            seed: 0,
            fit: FitConfig::default(),
            opt: OptSettings::default(),
            jobs: 1,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(ChoiceError::Config(format!(
                "n must be at least 2, got {}",
                self.n
            )));
        }
        if self.m_train == 0 || self.m_test == 0 || self.trials == 0 {
            return Err(ChoiceError::Config(
                "m_train, m_test and trials must be positive".into(),
            ));
        }
        if self.opt.revenue_draws == 0 {
            return Err(ChoiceError::Config("revenue_draws must be positive".into()));
        }
        self.fit.train.validate()
    }

    /// Seed of trial `t`; every draw inside the trial derives from it.
    pub fn trial_seed(&self, t: usize) -> u64 {
        rng::child_seed(self.seed, t as u64)
    }

    pub fn trial_seeds(&self) -> Vec<u64> {
        (0..self.trials).map(|t| self.trial_seed(t)).collect()
    }
}

/// Stream ids used inside a trial.
pub(crate) mod streams {
    pub const TRUTH: u64 = 0;
    pub const TRAIN: u64 = 1;
    pub const VAL: u64 = 2;
    pub const TEST: u64 = 3;
    pub const REVENUE: u64 = 4;
    pub const FIT: u64 = 100;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_names_round_trip() {
        for s in ["mnl-mle", "mccm-em", "gasn-1", "rasn-2", "gasn-2x3"] {
            let e: Estimator = s.parse().unwrap();
            assert_eq!(e.to_string(), s);
        }
        assert!("gasn-0".parse::<Estimator>().is_err());
        assert!("tree-1".parse::<Estimator>().is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = ExperimentSpec::default();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"gasn-1\""));
        let back: ExperimentSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let partial: ExperimentSpec = serde_json::from_str(r#"{"n": 10, "trials": 2}"#).unwrap();
        assert_eq!(partial.n, 10);
        assert_eq!(partial.m_val, 5_000);
    }

    #[test]
    fn rejects_empty_sizes() {
        let spec = ExperimentSpec {
            m_train: 0,
            ..ExperimentSpec::default()
        };
        assert!(spec.validate().is_err());
    }
}
