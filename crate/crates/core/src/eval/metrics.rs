use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::choice::{ChoiceDataset, ChoiceModel};
use crate::error::{ChoiceError, Result};
use crate::neural::FeatureNet;
use crate::rng;

pub const ACE_BINS: usize = 25;

/// Adaptive calibration error: for every item the offered rows are sorted by
/// predicted probability and cut into `bins` equal-mass bins, then
/// `ACE = 1/(m B) sum_i n_i sum_b |acc(b,i) - conf(b,i)|`. Items never
/// offered contribute nothing.
pub fn ace_calibration<M: ChoiceModel + ?Sized>(
    model: &M,
    data: &ChoiceDataset,
    bins: usize,
) -> Result<f64> {
    if data.is_empty() {
        return Err(ChoiceError::Dataset("empty dataset".into()));
    }
    if bins == 0 {
        return Err(ChoiceError::Config("bin count must be positive".into()));
    }
    let n = data.universe.n();
    let mut per_item: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    for s in &data.samples {
        let p = model.probabilities_for(&s.assortment, s.customer_features.as_deref())?;
        for i in s.assortment.members() {
            per_item[i].push((p.get(i), if s.chosen == i { 1.0 } else { 0.0 }));
        }
    }
    let mut total = 0.0;
    for mut rows in per_item {
        let n_i = rows.len();
        if n_i == 0 {
            continue;
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut gap = 0.0;
        for b in 0..bins {
            let bin = &rows[b * n_i / bins..(b + 1) * n_i / bins];
            if bin.is_empty() {
                continue;
            }
            let k = bin.len() as f64;
            let conf = bin.iter().map(|r| r.0).sum::<f64>() / k;
            let acc = bin.iter().map(|r| r.1).sum::<f64>() / k;
            gap += (acc - conf).abs();
        }
        total += n_i as f64 * gap;
    }
    Ok(total / (data.len() * bins) as f64)
}

/// Histogram of the normalized utility change `u_out - u_in` per offered
/// item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaHistogram {
    pub values: Vec<f64>,
    /// `counts.len() + 1` bin edges spanning `[-1, 1]`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl DeltaHistogram {
    pub fn from_values(values: Vec<f64>, bins: usize) -> Self {
        let bins = bins.max(1);
        let edges: Vec<f64> = (0..=bins)
            .map(|k| -1.0 + 2.0 * k as f64 / bins as f64)
            .collect();
        let mut counts = vec![0; bins];
        for &v in &values {
            let k = (((v + 1.0) / 2.0) * bins as f64).floor() as isize;
            counts[k.clamp(0, bins as isize - 1) as usize] += 1;
        }
        Self {
            values,
            edges,
            counts,
        }
    }
}

fn min_max(x: &[f64], members: &[usize]) -> Option<Vec<f64>> {
    let lo = members.iter().map(|&i| x[i]).fold(f64::INFINITY, f64::min);
    let hi = members
        .iter()
        .map(|&i| x[i])
        .fold(f64::NEG_INFINITY, f64::max);
    (hi > lo).then(|| members.iter().map(|&i| (x[i] - lo) / (hi - lo)).collect())
}

/// Normalized difference between the network's output logits and its
/// latent utilities over `sample_count` randomly chosen rows, both min-max
/// scaled within the offered set. Rows where either scale collapses give 0.
pub fn assortment_effect_delta(
    net: &FeatureNet,
    data: &ChoiceDataset,
    sample_count: usize,
    seed: u64,
) -> Result<DeltaHistogram> {
    if data.is_empty() {
        return Err(ChoiceError::Dataset("empty dataset".into()));
    }
    let mut r = rng::seeded(seed);
    let mut rows = index::sample(&mut r, data.len(), sample_count.min(data.len())).into_vec();
    rows.sort_unstable();
    let mut values = Vec::new();
    for k in rows {
        let s = &data.samples[k];
        let c = s.customer_features.as_deref();
        let members: Vec<usize> = s.assortment.members().collect();
        let u_in = net.latent_utilities(&s.assortment, c)?;
        let u_out = net.logits(&s.assortment, c)?;
        match (min_max(&u_in, &members), min_max(&u_out, &members)) {
            (Some(a), Some(b)) => values.extend(b.iter().zip(&a).map(|(o, i)| o - i)),
            _ => values.extend(std::iter::repeat_n(0.0, members.len())),
        }
    }
    Ok(DeltaHistogram::from_values(values, 20))
}
