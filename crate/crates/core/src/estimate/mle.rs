use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::choice::{validate_dataset, ChoiceDataset};
use crate::error::{ChoiceError, Result};
use crate::models::{FeatureMnlModel, MnlModel};

/// Utilities beyond this magnitude (relative to the gauge) are reported as
/// diverging.
const DIVERGENCE_LIMIT: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MleConfig {
    pub max_iters: usize,
    /// Gradient-norm tolerance on the mean log-likelihood.
    pub tol: f64,
    /// Backtracking line search; with `false` a fixed step `step` is used.
    pub line_search: bool,
    pub step: f64,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            tol: 1e-6,
            line_search: true,
            step: 1.0,
        }
    }
}

impl MleConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.step > 0.0) || self.max_iters == 0 {
            return Err(ChoiceError::Config(
                "tolerance, step and max_iters must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleFit {
    pub model: MnlModel,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// Items never offered; their utility is `-inf`.
    pub unidentified: Vec<usize>,
    /// Items whose likelihood is maximised at infinity (never chosen when
    /// offered, always chosen when offered, or runaway utilities).
    pub diverged: Vec<usize>,
}

impl MleFit {
    /// Converged with every utility finite and identified.
    pub fn is_clean(&self) -> bool {
        self.converged && self.diverged.is_empty() && self.unidentified.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMleFit {
    pub model: FeatureMnlModel,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// The item feature matrix is rank deficient, so `beta` is not unique.
    pub non_unique: bool,
}

struct Ascent {
    x: Vec<f64>,
    iterations: usize,
    grad_norm: f64,
    converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gradient ascent on a concave objective with Armijo backtracking; the trial
/// step is the Barzilai-Borwein estimate from the previous iteration.
fn ascend(x0: Vec<f64>, cfg: &MleConfig, f: impl Fn(&[f64]) -> (f64, Vec<f64>)) -> Ascent {
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut step = cfg.step;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for it in 0..cfg.max_iters {
        let gn = norm(&g);
        if gn <= cfg.tol {
            return Ascent {
                x,
                iterations: it,
                grad_norm: gn,
                converged: true,
            };
        }
        if cfg.line_search {
            if let Some((px, pg)) = &prev {
                let s: Vec<f64> = x.iter().zip(px).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = g.iter().zip(pg).map(|(a, b)| a - b).collect();
                let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
                let ss: f64 = s.iter().map(|a| a * a).sum();
                if sy < 0.0 {
                    step = (ss / -sy).clamp(1e-8, 1e8);
                }
            }
            loop {
                let cand: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + step * b).collect();
                let (fc, gc) = f(&cand);
                if fc.is_finite() && fc >= fx + 1e-4 * step * gn * gn {
                    prev = Some((
                        std::mem::replace(&mut x, cand),
                        std::mem::replace(&mut g, gc),
                    ));
                    fx = fc;
                    break;
                }
                step *= 0.5;
                if step < 1e-16 {
                    return Ascent {
                        x,
                        iterations: it,
                        grad_norm: gn,
                        converged: false,
                    };
                }
            }
        } else {
            x.iter_mut().zip(&g).for_each(|(a, b)| *a += step * b);
            let (fc, gc) = f(&x);
            fx = fc;
            g = gc;
        }
    }
    let gn = norm(&g);
    Ascent {
        x,
        iterations: cfg.max_iters,
        grad_norm: gn,
        converged: gn <= cfg.tol,
    }
}

fn check(data: &ChoiceDataset) -> Result<()> {
    if data.is_empty() {
        return Err(ChoiceError::Dataset("empty dataset".into()));
    }
    if let Some(v) = validate_dataset(data).first() {
        return Err(ChoiceError::Dataset(v.to_string()));
    }
    Ok(())
}

/// MNL maximum likelihood with the last item's utility pinned at 0.
pub fn fit_mnl_mle(data: &ChoiceDataset, cfg: &MleConfig) -> Result<MleFit> {
    cfg.validate()?;
    check(data)?;
    let n = data.universe.n();
    let gauge = n - 1;
    let mut offered = vec![0usize; n];
    let mut chosen = vec![0usize; n];
    for s in &data.samples {
        s.assortment.members().for_each(|i| offered[i] += 1);
        chosen[s.chosen] += 1;
    }
    let unidentified: Vec<usize> = (0..n).filter(|&i| offered[i] == 0).collect();
    let mut diverged: Vec<usize> = (0..n)
        .filter(|&i| i != gauge && offered[i] > 0 && chosen[i] == 0)
        .collect();
    // items pushed to -inf leave the problem; the rest are optimised
    let free: Vec<usize> = (0..n)
        .filter(|&i| i != gauge && offered[i] > 0 && chosen[i] > 0)
        .collect();
    let mut pos = vec![usize::MAX; n];
    free.iter().enumerate().for_each(|(k, &i)| pos[i] = k);
    let active = |i: usize| i == gauge || pos[i] != usize::MAX;
    let m = data.len() as f64;
    let objective = |x: &[f64]| {
        let util = |i: usize| if i == gauge { 0.0 } else { x[pos[i]] };
        let mut ll = 0.0;
        let mut g = vec![0.0; free.len()];
        let mut e = Vec::with_capacity(n);
        for s in &data.samples {
            e.clear();
            let mut max = f64::NEG_INFINITY;
            for i in s.assortment.members().filter(|&i| active(i)) {
                max = max.max(util(i));
                e.push((i, util(i)));
            }
            if !active(s.chosen) {
                continue;
            }
            let z: f64 = e.iter().map(|&(_, u)| (u - max).exp()).sum();
            ll += util(s.chosen) - max - z.ln();
            for &(i, u) in &e {
                if pos[i] != usize::MAX {
                    g[pos[i]] -= (u - max).exp() / z;
                }
            }
            if pos[s.chosen] != usize::MAX {
                g[pos[s.chosen]] += 1.0;
            }
        }
        g.iter_mut().for_each(|x| *x /= m);
        (ll / m, g)
    };
    let res = ascend(vec![0.0; free.len()], cfg, objective);
    let mut u = vec![f64::NEG_INFINITY; n];
    if offered[gauge] > 0 {
        u[gauge] = 0.0;
    }
    for (k, &i) in free.iter().enumerate() {
        u[i] = res.x[k];
        if res.x[k].abs() > DIVERGENCE_LIMIT {
            diverged.push(i);
        }
    }
    // the gauge offered but never chosen: shifting every free utility up
    // always helps, so no maximiser exists
    if offered[gauge] > 0 && chosen[gauge] == 0 {
        diverged.extend(free.iter().copied());
    }
    diverged.sort_unstable();
    diverged.dedup();
    Ok(MleFit {
        model: MnlModel::new(u)?,
        iterations: res.iterations,
        grad_norm: res.grad_norm,
        converged: res.converged,
        unidentified,
        diverged,
    })
}

/// MLE of `beta` in `u_i = beta . z_i`, `z_i` = customer features (if any)
/// followed by the product's features.
pub fn fit_feature_mnl_mle(data: &ChoiceDataset, cfg: &MleConfig) -> Result<FeatureMleFit> {
    cfg.validate()?;
    check(data)?;
    let pf = data
        .product_features
        .clone()
        .ok_or_else(|| ChoiceError::Dataset("feature MNL needs product features".into()))?;
    let dc = data.customer_dim().unwrap_or(0);
    let d = dc + pf[0].len();
    let n = data.universe.n();
    let m = data.len() as f64;
    let item = |s: &crate::choice::ChoiceSample, i: usize| -> Vec<f64> {
        let c = s.customer_features.as_deref().unwrap_or(&[]);
        c.iter().chain(&pf[i]).copied().collect()
    };
    let objective = |beta: &[f64]| {
        let mut ll = 0.0;
        let mut g = vec![0.0; d];
        for s in &data.samples {
            let zs: Vec<(usize, Vec<f64>)> =
                s.assortment.members().map(|i| (i, item(s, i))).collect();
            let us: Vec<f64> = zs
                .iter()
                .map(|(_, z)| z.iter().zip(beta).map(|(a, b)| a * b).sum())
                .collect();
            let max = us.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = us.iter().map(|u| (u - max).exp()).sum();
            for ((i, zi), u) in zs.iter().zip(&us) {
                let p = (u - max).exp() / z;
                let w = if *i == s.chosen { 1.0 - p } else { -p };
                g.iter_mut().zip(zi).for_each(|(gk, x)| *gk += w * x);
                if *i == s.chosen {
                    ll += u - max - z.ln();
                }
            }
        }
        g.iter_mut().for_each(|x| *x /= m);
        (ll / m, g)
    };
    let res = ascend(vec![0.0; d], cfg, objective);
    // rank of the stacked item features over the observed contexts
    let rows: Vec<Vec<f64>> = match data.samples.first() {
        Some(s) if dc > 0 => (0..n).map(|i| item(s, i)).collect(),
        _ => pf.clone(),
    };
    let mat = DMatrix::from_fn(rows.len(), d, |r, c| rows[r][c]);
    let rank = mat.rank(1e-9);
    let model = FeatureMnlModel::new(res.x, pf)?;
    Ok(FeatureMleFit {
        model,
        iterations: res.iterations,
        grad_norm: res.grad_norm,
        converged: res.converged,
        non_unique: dc == 0 && rank < d,
    })
}
