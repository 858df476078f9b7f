use serde::{Deserialize, Serialize};

use super::report::ReportTable;
use super::spec::streams;
use crate::choice::Universe;
use crate::error::{ChoiceError, Result};
use crate::estimate::{fit_mccm_em, EmConfig};
use crate::models::{gen_dataset, mccm_recipe, AssortmentSampler, MccmModel, SamplerKind};
use crate::rng::{self, child_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmSizeSpec {
    /// Universe size, no-purchase option included.
    pub n: usize,
    pub m: usize,
    /// Number of products per offered set.
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub em: EmConfig,
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for EmSizeSpec {
    fn default() -> Self {
        Self {
            n: 20,
            m: 10_000,
            sizes: vec![2, 4, 6, 8, 10],
            trials: 10,
            seed: 0,
            em: EmConfig::default(),
            jobs: 1,
        }
    }
}

impl EmSizeSpec {
    pub fn trial_seeds(&self) -> Vec<u64> {
        (0..self.trials)
            .map(|t| child_seed(self.seed, t as u64))
            .collect()
    }
}

/// Mean absolute difference over every entry of `lambda` and of the
/// transition rows of the real products. The no-purchase row is excluded:
/// that state absorbs, so its row is not a model parameter.
pub fn mccm_param_error(fit: &MccmModel, truth: &MccmModel) -> Result<f64> {
    let n = truth.n();
    if fit.n() != n {
        return Err(ChoiceError::Dimension {
            expected: n,
            got: fit.n(),
            context: "fitted chain",
        });
    }
    let mut total: f64 = fit
        .lambda
        .iter()
        .zip(&truth.lambda)
        .map(|(a, b)| (a - b).abs())
        .sum();
    for i in 0..n - 1 {
        total += fit.rho[i]
            .iter()
            .zip(&truth.rho[i])
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    }
    Ok(total / (n * n) as f64)
}

/// EM parameter error when every training assortment has the same size.
/// One truth chain per trial is shared by all sizes.
pub fn em_assortment_size_experiment(spec: &EmSizeSpec) -> Result<ReportTable> {
    if spec.m == 0 || spec.trials == 0 || spec.sizes.is_empty() {
        return Err(ChoiceError::Config(
            "m, trials and sizes must be non-empty".into(),
        ));
    }
    let universe = Universe::with_no_purchase(spec.n)?;
    let cols: Vec<String> = spec.sizes.iter().map(|k| format!("|S|={k}")).collect();
    let mut table = ReportTable::new(
        "EM parameter error by assortment size",
        "mean abs error",
        vec!["mccm-em".to_string()],
        cols.clone(),
    );
    let per_trial = super::par_map(spec.trials, spec.jobs, |t| -> Result<Vec<Result<f64>>> {
        let seed = child_seed(spec.seed, t as u64);
        let truth = mccm_recipe(spec.n)
            .generate(spec.n, &mut rng::seeded(child_seed(seed, streams::TRUTH)))?;
        spec.sizes
            .iter()
            .enumerate()
            .map(|(j, &k)| -> Result<Result<f64>> {
                let sampler = AssortmentSampler::new(SamplerKind::FixedSize(k), universe)?;
                let data = gen_dataset(
                    &truth,
                    &sampler,
                    spec.m,
                    child_seed(seed, streams::TRAIN + 10 * j as u64),
                )?;
                let em = EmConfig {
                    seed: child_seed(seed, streams::FIT + j as u64),
                    ..spec.em.clone()
                };
                Ok(fit_mccm_em(&data, &em).and_then(|f| mccm_param_error(&f.model, &truth)))
            })
            .collect()
    });
    for result in per_trial {
        for (col, value) in cols.iter().zip(result?) {
            match value {
                Ok(v) => table.push("mccm-em", col, v),
                Err(e) => table.fail("mccm-em", col, e.to_string()),
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_chains_have_zero_error() {
        let m = mccm_recipe(6).generate(6, &mut rng::seeded(1)).unwrap();
        assert_eq!(mccm_param_error(&m, &m).unwrap(), 0.0);
        let other = mccm_recipe(6).generate(6, &mut rng::seeded(2)).unwrap();
        let e = mccm_param_error(&m, &other).unwrap();
        assert!(e > 0.0 && e <= 2.0 / 6.0 + 1e-12);
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = EmSizeSpec {
            n: 6,
            m: 500,
            sizes: vec![2, 5],
            trials: 2,
            seed: 4,
            ..EmSizeSpec::default()
        };
        let a = em_assortment_size_experiment(&spec).unwrap();
        let b = em_assortment_size_experiment(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cell("mccm-em", "|S|=2").unwrap().count(), 2);
    }
}
