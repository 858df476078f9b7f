use std::collections::BTreeMap;
use std::time::Instant;

use super::{check_inputs, revenue, OptResult};
use crate::choice::{Assortment, CapacityConstraint, RevenueSpec};
use crate::error::{ChoiceError, Result};
use crate::models::MccmModel;

const TOL: f64 = 1e-10;
const MAX_ITERS: usize = 10_000_000;

/// Exact unconstrained optimum under a Markov chain model: iterate
/// `g_i <- max(mu_i, sum_j rho_ij g_j)` and offer `{i : mu_i >= g_i}`.
pub fn mccm_bellman_opt(
    model: &MccmModel,
    rev: &RevenueSpec,
    cap: Option<&CapacityConstraint>,
) -> Result<OptResult> {
    if cap.is_some() {
        return Err(ChoiceError::Unsupported(
            "the Bellman method is unconstrained; use adxopt or a MIP with a capacity row".into(),
        ));
    }
    let n = check_inputs(model, rev, None)?;
    let start = Instant::now();
    let np = n - 1;
    let mut g = rev.mu.clone();
    g[np] = 0.0;
    let mut iters = 0u64;
    for _ in 0..MAX_ITERS {
        iters += 1;
        let mut delta: f64 = 0.0;
        for i in 0..np {
            let cont: f64 = model.rho[i].iter().zip(&g).map(|(r, v)| r * v).sum();
            let next = rev.mu[i].max(cont);
            delta = delta.max((next - g[i]).abs());
            g[i] = next;
        }
        if delta < TOL {
            break;
        }
    }
    // strict margin so that indifferent products are left out
    let mask: Vec<bool> = (0..n)
        .map(|i| i == np || (rev.mu[i] > 0.0 && rev.mu[i] >= g[i] - TOL * g[i].abs().max(1.0)))
        .collect();
    let assortment = Assortment::from_mask(mask);
    let value = revenue(model, &assortment, rev)?;
    let mut params = BTreeMap::new();
    params.insert("values".into(), serde_json::json!(g));
    Ok(OptResult {
        assortment,
        value,
        method: "bellman".into(),
        exact: true,
        nodes: iters,
        seconds: start.elapsed().as_secs_f64(),
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::Universe;

    #[test]
    fn immediate_exit_offers_every_paying_product() {
        let n = 4;
        let rho: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut r = vec![0.0; n];
                r[n - 1] = 1.0;
                r
            })
            .collect();
        let m = MccmModel::new(vec![0.25; 4], rho).unwrap();
        let u = Universe::with_no_purchase(n).unwrap();
        let rev = RevenueSpec::new(&u, vec![5.0, 0.0, 2.0, 0.0]).unwrap();
        let r = mccm_bellman_opt(&m, &rev, None).unwrap();
        assert_eq!(r.assortment.to_mask_string(), "1011");
        assert!((r.value - 1.75).abs() < 1e-12);
    }

    #[test]
    fn refuses_capacity() {
        let m = MccmModel::new(vec![0.5, 0.5], vec![vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let u = Universe::with_no_purchase(2).unwrap();
        let rev = RevenueSpec::new(&u, vec![1.0, 0.0]).unwrap();
        let cap = CapacityConstraint::new(&u, vec![1.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            mccm_bellman_opt(&m, &rev, Some(&cap)),
            Err(ChoiceError::Unsupported(_))
        ));
    }
}
