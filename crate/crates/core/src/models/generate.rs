use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::feature::{FeatureMccmModel, FeatureMnlModel};
use super::mccm::MccmModel;
use super::mmnl::MmnlModel;
use super::mnl::{softmax, MnlModel};
use super::np::NpModel;
use super::persist::AnyModel;
use crate::error::{ChoiceError, Result};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mnl,
    Mccm,
    Np,
    Mmnl,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Mnl,
        ModelKind::Mccm,
        ModelKind::Np,
        ModelKind::Mmnl,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Mnl => "mnl",
            ModelKind::Mccm => "mccm",
            ModelKind::Np => "np",
            ModelKind::Mmnl => "mmnl",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = ChoiceError;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                ChoiceError::Config(format!("unknown model kind {s:?} (mnl|mccm|np|mmnl)"))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Mnl,
    Mccm,
}

impl FromStr for FeatureKind {
    type Err = ChoiceError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().trim_end_matches("(f)") {
            "mnl" => Ok(FeatureKind::Mnl),
            "mccm" => Ok(FeatureKind::Mccm),
            _ => Err(ChoiceError::Config(format!(
                "unknown feature model kind {s:?} (mnl|mccm)"
            ))),
        }
    }
}

/// Grouped Markov chain recipe: arrival scores `N(0, sigma^2)`, transition
/// scores `N(shift * sigma, sigma^2)` inside a group and `N(0, sigma^2)`
/// across groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MccmRecipe {
    pub sigma: f64,
    pub c_num: usize,
    pub shift: f64,
}

impl MccmRecipe {
    /// Ungrouped chain with standard normal scores.
    pub fn plain() -> Self {
        Self {
            sigma: 1.0,
            c_num: 1,
            shift: 0.0,
        }
    }

    pub fn generate(&self, n: usize, rng: &mut Rng) -> Result<MccmModel> {
        let c = self.c_num.clamp(1, n);
        let scores: Vec<f64> = (0..n).map(|_| self.sigma * normal(rng)).collect();
        let lambda = softmax(&scores);
        let group = |i: usize| i * c / n;
        let rho = (0..n)
            .map(|i| {
                let row: Vec<f64> = (0..n)
                    .map(|j| {
                        let mean = if group(i) == group(j) {
                            self.shift * self.sigma
                        } else {
                            0.0
                        };
                        mean + self.sigma * normal(rng)
                    })
                    .collect();
                softmax(&row)
            })
            .collect();
        MccmModel::new(lambda, rho)
    }
}

/// Default grouped recipe: `sigma = 2.5, c_num = 4` at `n = 20`,
/// `sigma = 4, c_num = 10` at `n = 50`; `c_num ~ n/5` and a clamped linear
/// `sigma` elsewhere.
pub fn mccm_recipe(n: usize) -> MccmRecipe {
    let (sigma, c_num) = match n {
        20 => (2.5, 4),
        50 => (4.0, 10),
        _ => {
            let t = (n as f64 - 20.0) / 30.0;
            (
                (2.5 + 1.5 * t).clamp(2.5, 4.0),
                ((n as f64 / 5.0).round() as usize).max(1),
            )
        }
    };
    MccmRecipe {
        sigma,
        c_num,
        shift: 2.0,
    }
}

/// Number of ranking lists: 10 at `n = 20`, 20 at `n = 50`, `round(n/2.5)`
/// otherwise.
pub fn np_perm_count(n: usize) -> usize {
    match n {
        20 => 10,
        50 => 20,
        _ => ((n as f64 / 2.5).round() as usize).max(1),
    }
}

/// Product windows `[start, end)` of the five mixed-logit segments over the
/// `p` real products.
pub fn mmnl_windows(p: usize) -> Vec<(usize, usize)> {
    (1..=5).map(|c| ((c - 1) * p / 5, c * p / 5)).collect()
}

fn normal(rng: &mut Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

/// Random ground-truth model on a universe of `n` items whose last item is
/// the no-purchase option.
pub fn gen_instance(kind: ModelKind, n: usize, seed: u64) -> Result<AnyModel> {
    if n < 2 {
        return Err(ChoiceError::Universe(format!(
            "need at least 2 items, got {n}"
        )));
    }
    let mut rng = rng::seeded(seed);
    let rng = &mut rng;
    Ok(match kind {
        ModelKind::Mnl => AnyModel::Mnl(MnlModel::new((0..n).map(|_| normal(rng)).collect())?),
        ModelKind::Mccm => AnyModel::Mccm(mccm_recipe(n).generate(n, rng)?),
        ModelKind::Np => {
            let k = np_perm_count(n);
            let perms = (0..k)
                .map(|_| {
                    let mut p: Vec<usize> = (0..n).collect();
                    p.shuffle(rng);
                    p
                })
                .collect();
            AnyModel::Np(NpModel::new(perms, vec![1.0 / k as f64; k])?)
        }
        ModelKind::Mmnl => {
            let p = n - 1;
            let u = mmnl_windows(p)
                .into_iter()
                .enumerate()
                .map(|(c, (start, end))| {
                    let mean = (c + 1) as f64 + p as f64 / 5.0;
                    let mut row = vec![-50.0; n];
                    for x in &mut row[start..end] {
                        *x = mean + normal(rng);
                    }
                    row[n - 1] = 0.0;
                    row
                })
                .collect();
            AnyModel::Mmnl(MmnlModel::new(vec![0.2; 5], u)?)
        }
    })
}

/// Feature-based truth with `d` standard normal product features per item.
pub fn gen_feature_instance(kind: FeatureKind, n: usize, d: usize, seed: u64) -> Result<AnyModel> {
    if n < 2 || d == 0 {
        return Err(ChoiceError::Config(format!("invalid sizes n={n}, d={d}")));
    }
    let mut rng = rng::seeded(seed);
    let rng = &mut rng;
    let features: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| normal(rng)).collect())
        .collect();
    let beta: Vec<f64> = (0..d).map(|_| normal(rng)).collect();
    Ok(match kind {
        FeatureKind::Mnl => AnyModel::FeatureMnl(FeatureMnlModel::new(beta, features)?),
        FeatureKind::Mccm => {
            let a = (0..n)
                .map(|_| (0..d).map(|_| normal(rng)).collect())
                .collect();
            AnyModel::FeatureMccm(FeatureMccmModel::new(beta, a, features)?)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mnl_utilities_are_standard_normal() {
        let mut total = 0.0;
        let count = 10_000;
        for seed in 0..count {
            let AnyModel::Mnl(m) = gen_instance(ModelKind::Mnl, 20, seed).unwrap() else {
                unreachable!()
            };
            total += m.u.iter().sum::<f64>() / 20.0;
        }
        assert!((total / count as f64).abs() < 0.05);
    }

    #[test]
    fn mmnl_outside_windows_is_minus_fifty() {
        let AnyModel::Mmnl(m) = gen_instance(ModelKind::Mmnl, 20, 1).unwrap() else {
            unreachable!()
        };
        assert_eq!(m.alpha, vec![0.2; 5]);
        for (c, (s, e)) in mmnl_windows(19).into_iter().enumerate() {
            for i in 0..19 {
                if i < s || i >= e {
                    assert_eq!(m.u[c][i], -50.0);
                } else {
                    assert!(m.u[c][i] > -10.0);
                }
            }
            assert_eq!(m.u[c][19], 0.0);
        }
    }

    #[test]
    fn np_preset_has_ten_uniform_lists() {
        let AnyModel::Np(m) = gen_instance(ModelKind::Np, 20, 2).unwrap() else {
            unreachable!()
        };
        assert_eq!(m.perms.len(), 10);
        assert!(m.weights.iter().all(|&w| w == 0.1));
        assert_eq!(np_perm_count(50), 20);
    }

    #[test]
    fn recipes_follow_presets() {
        assert_eq!(mccm_recipe(20).c_num, 4);
        assert_eq!(mccm_recipe(50).sigma, 4.0);
        assert_eq!(mccm_recipe(35).c_num, 7);
    }

    #[test]
    fn generation_is_deterministic() {
        for kind in ModelKind::ALL {
            assert_eq!(
                gen_instance(kind, 12, 9).unwrap(),
                gen_instance(kind, 12, 9).unwrap()
            );
        }
        assert!("bogus".parse::<ModelKind>().is_err());
    }
}
