use std::collections::BTreeMap;
use std::time::Instant;

use super::{check_inputs, np_only, prefer, revenue, OptResult};
use crate::choice::{Assortment, CapacityConstraint, ChoiceModel, RevenueSpec};
use crate::error::{ChoiceError, Result};

/// Largest universe (no-purchase included) brute force will enumerate.
pub const BRUTE_FORCE_MAX_N: usize = 25;

/// Exact optimum by enumerating every feasible subset of products.
pub fn brute_force_opt<M: ChoiceModel + ?Sized>(
    model: &M,
    rev: &RevenueSpec,
    cap: Option<&CapacityConstraint>,
) -> Result<OptResult> {
    let n = check_inputs(model, rev, cap)?;
    if n > BRUTE_FORCE_MAX_N {
        return Err(ChoiceError::Unsupported(format!(
            "brute force is limited to n <= {BRUTE_FORCE_MAX_N} (got {n}); \
             build a MIP and export it as an LP file instead"
        )));
    }
    let start = Instant::now();
    let p = n - 1;
    let mut best = np_only(n);
    let mut best_value = 0.0;
    let mut visited = 0u64;
    let mut mask = vec![false; n];
    mask[p] = true;
    for bits in 1u64..(1u64 << p) {
        for (i, m) in mask.iter_mut().take(p).enumerate() {
            *m = bits >> i & 1 == 1;
        }
        let s = Assortment::from_mask(mask.clone());
        if cap.is_some_and(|c| !c.admits(&s)) {
            continue;
        }
        visited += 1;
        let v = revenue(model, &s, rev)?;
        if prefer(v, &s, best_value, &best) {
            best = s;
            best_value = v;
        }
    }
    Ok(OptResult {
        assortment: best,
        value: best_value,
        method: "brute-force".into(),
        exact: true,
        nodes: visited + 1,
        seconds: start.elapsed().as_secs_f64(),
        params: BTreeMap::new(),
    })
}

/// Products sorted by decreasing revenue, ties by index.
pub(crate) fn revenue_order(rev: &RevenueSpec) -> Vec<usize> {
    let p = rev.mu.len() - 1;
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| rev.mu[b].total_cmp(&rev.mu[a]).then(a.cmp(&b)));
    order
}

/// Best nested assortment `{top k products by revenue}`; stops at the first
/// prefix violating the capacity row.
pub fn revenue_ordered<M: ChoiceModel + ?Sized>(
    model: &M,
    rev: &RevenueSpec,
    cap: Option<&CapacityConstraint>,
) -> Result<OptResult> {
    let n = check_inputs(model, rev, cap)?;
    let start = Instant::now();
    let mut best = np_only(n);
    let mut best_value = 0.0;
    let mut current = best.clone();
    let mut visited = 1u64;
    for i in revenue_order(rev) {
        current = current.with(i, true);
        if cap.is_some_and(|c| !c.admits(&current)) {
            break;
        }
        visited += 1;
        let v = revenue(model, &current, rev)?;
        if prefer(v, &current, best_value, &best) {
            best = current.clone();
            best_value = v;
        }
    }
    Ok(OptResult {
        assortment: best,
        value: best_value,
        method: "revenue-ordered".into(),
        exact: false,
        nodes: visited,
        seconds: start.elapsed().as_secs_f64(),
        params: BTreeMap::new(),
    })
}

/// Add/delete/exchange local search from the no-purchase-only assortment.
pub fn adxopt<M: ChoiceModel + ?Sized>(
    model: &M,
    rev: &RevenueSpec,
    cap: Option<&CapacityConstraint>,
    removal_limit: usize,
) -> Result<OptResult> {
    let n = check_inputs(model, rev, cap)?;
    adxopt_from(model, rev, cap, removal_limit, np_only(n))
}

/// [`adxopt`] from a given feasible starting assortment. A product that has
/// been removed `removal_limit` times is never added back.
pub fn adxopt_from<M: ChoiceModel + ?Sized>(
    model: &M,
    rev: &RevenueSpec,
    cap: Option<&CapacityConstraint>,
    removal_limit: usize,
    start_at: Assortment,
) -> Result<OptResult> {
    let n = check_inputs(model, rev, cap)?;
    if start_at.n() != n || !start_at.contains(n - 1) {
        return Err(ChoiceError::Assortment(
            "start must contain the no-purchase option".into(),
        ));
    }
    if cap.is_some_and(|c| !c.admits(&start_at)) {
        return Err(ChoiceError::Infeasible(
            "start violates the capacity row".into(),
        ));
    }
    let start = Instant::now();
    let p = n - 1;
    let mut removed = vec![0usize; p];
    let mut current = start_at;
    let mut value = revenue(model, &current, rev)?;
    let mut moves = 0u64;
    loop {
        let mut best: Option<(f64, Assortment, Option<usize>)> = None;
        let mut consider = |s: Assortment, out: Option<usize>| -> Result<()> {
            if cap.is_some_and(|c| !c.admits(&s)) {
                return Ok(());
            }
            let v = revenue(model, &s, rev)?;
            let better = match &best {
                None => true,
                Some((bv, bs, _)) => prefer(v, &s, *bv, bs),
            };
            if better {
                best = Some((v, s, out));
            }
            Ok(())
        };
        for i in 0..p {
            if current.contains(i) {
                consider(current.with(i, false), Some(i))?;
                for j in (0..p).filter(|&j| !current.contains(j) && removed[j] < removal_limit) {
                    consider(current.with(i, false).with(j, true), Some(i))?;
                }
            } else if removed[i] < removal_limit {
                consider(current.with(i, true), None)?;
            }
        }
        match best {
            Some((v, s, out)) if prefer(v, &s, value, &current) && v > value => {
                if let Some(i) = out {
                    removed[i] += 1;
                }
                current = s;
                value = v;
                moves += 1;
            }
            _ => break,
        }
    }
    let mut params = BTreeMap::new();
    params.insert("removal_limit".into(), serde_json::json!(removal_limit));
    Ok(OptResult {
        assortment: current,
        value,
        method: "adxopt".into(),
        exact: false,
        nodes: moves,
        seconds: start.elapsed().as_secs_f64(),
        params,
    })
}

/// `Rev(candidate) / Rev(S*)` under `truth`, with `S*` found by brute force.
pub fn opt_ratio<M: ChoiceModel + ?Sized>(
    candidate: &Assortment,
    truth: &M,
    rev: &RevenueSpec,
    cap: Option<&CapacityConstraint>,
) -> Result<f64> {
    let best = brute_force_opt(truth, rev, cap)?;
    ratio_against(candidate, truth, rev, best.value)
}

/// Ratio against a precomputed optimal value.
pub fn ratio_against<M: ChoiceModel + ?Sized>(
    candidate: &Assortment,
    truth: &M,
    rev: &RevenueSpec,
    optimum: f64,
) -> Result<f64> {
    if !(optimum > 0.0) {
        return Err(ChoiceError::Invariant(
            "optimality ratio undefined: optimal revenue is 0".into(),
        ));
    }
    Ok(revenue(truth, candidate, rev)? / optimum)
}
