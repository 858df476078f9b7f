use super::mip::{MipInstance, Objective, Sense, VarKind};
use crate::choice::{CapacityConstraint, RevenueSpec};
use crate::error::{ChoiceError, Result};
use crate::models::NpModel;

/// Most ranking lists the MILP accepts.
pub const NP_MILP_MAX_LISTS: usize = 50;

/// MILP for the ranking-list model. `eta[k][r]` indicates that list `k`
/// buys its rank-`r` item: it needs that item offered and every
/// higher-ranked item absent. Ranks below the no-purchase option are never
/// reached and are dropped.
pub fn build_np_milp(
    model: &NpModel,
    rev: &RevenueSpec,
    cap: Option<&CapacityConstraint>,
) -> Result<MipInstance> {
    let n = super::check_inputs(model, rev, cap)?;
    if model.perms.len() > NP_MILP_MAX_LISTS {
        return Err(ChoiceError::Unsupported(format!(
            "{} ranking lists exceed the MILP limit of {NP_MILP_MAX_LISTS}",
            model.perms.len()
        )));
    }
    let np = n - 1;
    let mut m = MipInstance::new("np_milp");
    let s: Vec<usize> = (0..n)
        .map(|i| {
            let lo = if i == np { 1.0 } else { 0.0 };
            m.add_var(format!("s_{i}"), VarKind::Binary, lo, 1.0)
        })
        .collect();
    let mut objective = Vec::new();
    for (k, perm) in model.perms.iter().enumerate() {
        let cut = perm
            .iter()
            .position(|&i| i == np)
            .expect("permutation covers every item");
        let ranked = &perm[..=cut];
        let eta: Vec<usize> = (0..ranked.len())
            .map(|r| m.add_var(format!("eta_{k}_{r}"), VarKind::Continuous, 0.0, 1.0))
            .collect();
        for (r, &item) in ranked.iter().enumerate() {
            m.add_row(
                format!("offer_{k}_{r}"),
                vec![(eta[r], 1.0), (s[item], -1.0)],
                Sense::Le,
                0.0,
            );
            for (q, &above) in ranked[..r].iter().enumerate() {
                m.add_row(
                    format!("block_{k}_{r}_{q}"),
                    vec![(eta[r], 1.0), (s[above], 1.0)],
                    Sense::Le,
                    1.0,
                );
            }
            let w = model.weights[k] * rev.mu[item];
            if w != 0.0 {
                objective.push((eta[r], w));
            }
        }
        m.add_row(
            format!("one_{k}"),
            eta.iter().map(|&j| (j, 1.0)).collect(),
            Sense::Le,
            1.0,
        );
    }
    if let Some(c) = cap {
        m.add_row(
            "capacity",
            (0..np).map(|i| (s[i], c.a[i])).collect(),
            Sense::Le,
            c.c,
        );
    }
    m.objective = Objective::Linear { coefs: objective };
    m.assortment_vars = s;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::Universe;
    use crate::opt::{brute_force_opt, solve_mip};

    #[test]
    fn single_list_takes_best_prefix_item() {
        let u = Universe::with_no_purchase(4).unwrap();
        let model = NpModel::new(vec![vec![1, 0, 3, 2]], vec![1.0]).unwrap();
        let rev = RevenueSpec::new(&u, vec![10.0, 4.0, 50.0, 0.0]).unwrap();
        let r = solve_mip(&build_np_milp(&model, &rev, None).unwrap(), None).unwrap();
        // item 2 sits below the no-purchase option, so 10 is the best
        assert!((r.value - 10.0).abs() < 1e-9);
        let b = brute_force_opt(&model, &rev, None).unwrap();
        assert!((b.value - r.value).abs() < 1e-9);
    }

    #[test]
    fn full_assortment_selects_top_ranked() {
        let u = Universe::with_no_purchase(3).unwrap();
        let model = NpModel::new(vec![vec![0, 1, 2], vec![1, 2, 0]], vec![0.5, 0.5]).unwrap();
        let rev = RevenueSpec::new(&u, vec![1.0, 1.0, 0.0]).unwrap();
        let m = build_np_milp(&model, &rev, None).unwrap();
        let mut x = vec![0.0; m.vars.len()];
        // s = full, eta picks each list's first item
        for j in 0..3 {
            x[j] = 1.0;
        }
        let idx = |name: &str| m.vars.iter().position(|v| v.name == name).unwrap();
        x[idx("eta_0_0")] = 1.0;
        x[idx("eta_1_0")] = 1.0;
        assert!(m.max_violation(&x) < 1e-12);
        x[idx("eta_0_1")] = 1.0;
        assert!(m.max_violation(&x) > 0.5);
    }
}
