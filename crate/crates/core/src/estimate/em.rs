use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::choice::{validate_dataset, Assortment, ChoiceDataset, PROB_FLOOR};
use crate::error::{ChoiceError, Result};
use crate::models::{fundamental_matrix, MccmModel};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmConfig {
    pub max_iters: usize,
    /// Stop when the mean absolute change over all entries of
    /// `(lambda, rho)` falls below this.
    pub tol: f64,
    pub seed: u64,
    /// Independent random initialisations; the best final likelihood wins.
    pub restarts: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            tol: 0.01,
            seed: 0,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmFit {
    pub model: MccmModel,
    pub iterations: usize,
    pub converged: bool,
    /// Mean training log-likelihood before each M-step.
    pub log_likelihood: Vec<f64>,
    pub seed: u64,
}

/// Transactions grouped by offered set: `(assortment, counts per chosen item)`.
fn group(data: &ChoiceDataset) -> Vec<(Assortment, Vec<(usize, f64)>)> {
    let mut map: BTreeMap<Assortment, BTreeMap<usize, f64>> = BTreeMap::new();
    for s in &data.samples {
        *map.entry(s.assortment.clone())
            .or_default()
            .entry(s.chosen)
            .or_default() += 1.0;
    }
    map.into_iter()
        .map(|(a, c)| (a, c.into_iter().collect()))
        .collect()
}

fn random_init(n: usize, r: &mut rng::Rng) -> MccmModel {
    let mut vec = || {
        let v: Vec<f64> = (0..n).map(|_| r.random::<f64>() + 1e-12).collect();
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect::<Vec<_>>()
    };
    let lambda = vec();
    let rho = (0..n).map(|_| vec()).collect();
    MccmModel { lambda, rho }
}

/// One E-step: expected arrival counts and transition counts; returns the
/// log-likelihood too.
fn e_step(
    model: &MccmModel,
    groups: &[(Assortment, Vec<(usize, f64)>)],
) -> (Vec<f64>, Vec<Vec<f64>>, f64) {
    let n = model.lambda.len();
    let mut arrivals = vec![0.0; n];
    let mut trans = vec![vec![0.0; n]; n];
    let mut ll = 0.0;
    for (a, counts) in groups {
        let t: Vec<usize> = (0..n).filter(|&j| !a.contains(j)).collect();
        if t.is_empty() {
            for &(i, c) in counts {
                arrivals[i] += c;
                ll += c * model.lambda[i].max(PROB_FLOOR).ln();
            }
            continue;
        }
        let fund = fundamental_matrix(&model.rho, &t);
        let k = t.len();
        // expected visits v = N^T lambda_T
        let v: Vec<f64> = (0..k)
            .map(|c| (0..k).map(|r| model.lambda[t[r]] * fund[(r, c)]).sum())
            .collect();
        for &(i, c) in counts {
            // h_T = N rho_{T,i}: absorption probability at i from each transient item
            let h: Vec<f64> = (0..k)
                .map(|r| (0..k).map(|q| fund[(r, q)] * model.rho[t[q]][i]).sum())
                .collect();
            let p = model.lambda[i] + (0..k).map(|r| model.lambda[t[r]] * h[r]).sum::<f64>();
            ll += c * p.max(PROB_FLOOR).ln();
            if p <= 0.0 {
                continue;
            }
            let w = c / p;
            arrivals[i] += w * model.lambda[i];
            for r in 0..k {
                arrivals[t[r]] += w * model.lambda[t[r]] * h[r];
            }
            for (r, &j) in t.iter().enumerate() {
                if v[r] == 0.0 {
                    continue;
                }
                let base = w * v[r];
                let row = &model.rho[j];
                trans[j][i] += base * row[i];
                for (q, &l) in t.iter().enumerate() {
                    trans[j][l] += base * row[l] * h[q];
                }
            }
        }
    }
    (arrivals, trans, ll)
}

fn normalize(v: &[f64]) -> Option<Vec<f64>> {
    let s: f64 = v.iter().sum();
    (s > 0.0 && s.is_finite()).then(|| v.iter().map(|x| x / s).collect())
}

fn run(
    groups: &[(Assortment, Vec<(usize, f64)>)],
    n: usize,
    m: f64,
    cfg: &EmConfig,
    seed: u64,
) -> Result<EmFit> {
    let mut r = rng::seeded(seed);
    let mut model = random_init(n, &mut r);
    let mut lls = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iters {
        iterations += 1;
        let (arr, trans, ll) = e_step(&model, groups);
        lls.push(ll / m);
        let lambda = normalize(&arr).unwrap_or_else(|| model.lambda.clone());
        let rho: Vec<Vec<f64>> = trans
            .iter()
            .zip(&model.rho)
            .map(|(t, old)| normalize(t).unwrap_or_else(|| old.clone()))
            .collect();
        let change = lambda
            .iter()
            .zip(&model.lambda)
            .chain(rho.iter().flatten().zip(model.rho.iter().flatten()))
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / (n + n * n) as f64;
        model = MccmModel::new(lambda, rho)?;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(EmFit {
        model,
        iterations,
        converged,
        log_likelihood: lls,
        seed,
    })
}

/// EM for the Markov chain choice model from random uniform initialisation.
pub fn fit_mccm_em(data: &ChoiceDataset, cfg: &EmConfig) -> Result<EmFit> {
    if !(cfg.tol > 0.0) || cfg.max_iters == 0 {
        return Err(ChoiceError::Config(
            "EM tolerance and max_iters must be positive".into(),
        ));
    }
    if data.is_empty() {
        return Err(ChoiceError::Dataset("empty dataset".into()));
    }
    if let Some(v) = validate_dataset(data).first() {
        return Err(ChoiceError::Dataset(v.to_string()));
    }
    let groups = group(data);
    let n = data.universe.n();
    let m = data.len() as f64;
    let mut best: Option<(f64, EmFit)> = None;
    for k in 0..cfg.restarts.max(1) {
        let seed = if k == 0 {
            cfg.seed
        } else {
            rng::child_seed(cfg.seed, k as u64)
        };
        let fit = run(&groups, n, m, cfg, seed)?;
        let final_ll = e_step(&fit.model, &groups).2;
        if best.as_ref().is_none_or(|(b, _)| final_ll > *b) {
            best = Some((final_ll, fit));
        }
    }
    Ok(best.unwrap().1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{ChoiceModel, ChoiceSample, Universe};
    use crate::models::{
        gen_dataset, gen_instance, AnyModel, AssortmentSampler, ModelKind, SamplerKind,
    };

    #[test]
    fn full_assortments_give_empirical_frequencies() {
        let u = Universe::with_no_purchase(5).unwrap();
        let AnyModel::Mccm(truth) = gen_instance(ModelKind::Mccm, 5, 3).unwrap() else {
            unreachable!()
        };
        let s =
            AssortmentSampler::new(SamplerKind::Explicit(vec![Assortment::full(&u)]), u).unwrap();
        let data = gen_dataset(&truth, &s, 3000, 4).unwrap();
        let fit = fit_mccm_em(&data, &EmConfig::default()).unwrap();
        for i in 0..5 {
            let f = data.samples.iter().filter(|x| x.chosen == i).count() as f64 / 3000.0;
            assert!((fit.model.lambda[i] - f).abs() < 1e-9);
        }
    }

    #[test]
    fn likelihood_never_decreases() {
        let n = 6;
        let AnyModel::Mccm(truth) = gen_instance(ModelKind::Mccm, n, 8).unwrap() else {
            unreachable!()
        };
        let u = Universe::with_no_purchase(n).unwrap();
        let s = AssortmentSampler::new(SamplerKind::UniformSize, u).unwrap();
        let data = gen_dataset(&truth, &s, 2000, 1).unwrap();
        let fit = fit_mccm_em(
            &data,
            &EmConfig {
                tol: 1e-6,
                max_iters: 60,
                ..EmConfig::default()
            },
        )
        .unwrap();
        for w in fit.log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{} -> {}", w[0], w[1]);
        }
        for row in &fit.model.rho {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn e_step_probability_matches_oracle() {
        let n = 5;
        let AnyModel::Mccm(m) = gen_instance(ModelKind::Mccm, n, 2).unwrap() else {
            unreachable!()
        };
        let a = Assortment::from_mask(vec![true, false, false, true, true]);
        let (arr, trans, ll) = e_step(&m, &[(a.clone(), vec![(3, 1.0)])]);
        assert!((ll - m.probabilities(&a).unwrap().get(3).ln()).abs() < 1e-12);
        // one arrival in total; transitions out of transient items equal visits
        assert!((arr.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let into_offered: f64 = trans.iter().map(|row| row[3]).sum();
        assert!((into_offered + arr[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_purchase_only_data_concentrates_arrivals() {
        let u = Universe::with_no_purchase(4).unwrap();
        let s = Assortment::full(&u);
        let data = ChoiceDataset::new(u, vec![ChoiceSample::new(3, s); 100]);
        let fit = fit_mccm_em(&data, &EmConfig::default()).unwrap();
        assert!((fit.model.lambda[3] - 1.0).abs() < 1e-12);
    }
}
