//! Assortment optimization.
//!
//! All optimizers work on universes whose last item is the no-purchase
//! option; it is always offered and earns zero revenue.

mod bellman;
mod enumerate;
pub mod lp;
mod mip;
mod mnl_milp;
mod nn;
mod np_milp;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::choice::{Assortment, CapacityConstraint, ChoiceModel, RevenueSpec};
use crate::error::{ChoiceError, Result};

pub use bellman::mccm_bellman_opt;
pub use enumerate::{
    adxopt, adxopt_from, brute_force_opt, opt_ratio, ratio_against, revenue_ordered,
    BRUTE_FORCE_MAX_N,
};
pub use lp::{export_lp, read_lp, sanitize_names, write_lp};
pub use mip::{
    solve_milp, MipInstance, MipSolution, MipVar, Objective, QuadRow, Row, Sense, VarKind,
};
pub use mnl_milp::build_mnl_milp;
pub use nn::{
    build_nn_mip, mip_activation_range, solve_nn_mip, NnEncoding, SurrogateNet, UnitEncoding,
};
pub use np_milp::build_np_milp;

/// Outcome of an optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    #[serde(with = "mask_string")]
    pub assortment: Assortment,
    /// Objective value under the model the optimizer was given.
    pub value: f64,
    pub method: String,
    /// Whether the value is proven optimal for that model.
    pub exact: bool,
    /// Branch-and-bound nodes, local-search moves or subsets visited.
    pub nodes: u64,
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, serde_json::Value>,
}

impl OptResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

mod mask_string {
    use super::Assortment;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(a: &Assortment, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&a.to_mask_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Assortment, D::Error> {
        let s = String::deserialize(d)?;
        Assortment::parse_mask(&s).map_err(D::Error::custom)
    }
}

const VALUE_TOL: f64 = 1e-10;

/// Whether `(va, a)` beats `(vb, b)`: higher value, then fewer items, then
/// the lexicographically smaller mask string.
pub(crate) fn prefer(va: f64, a: &Assortment, vb: f64, b: &Assortment) -> bool {
    let tol = VALUE_TOL * va.abs().max(vb.abs()).max(1.0);
    if va > vb + tol {
        return true;
    }
    if va < vb - tol {
        return false;
    }
    match a.len().cmp(&b.len()) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => a.to_mask_string() < b.to_mask_string(),
    }
}

/// Solves an assortment MIP: the network encoding with the native
/// solver, anything else with the bundled MILP solver.
pub fn solve_mip(inst: &MipInstance, time_limit_s: Option<f64>) -> Result<OptResult> {
    if inst.nn.is_some() {
        return solve_nn_mip(inst, time_limit_s.unwrap_or(f64::INFINITY));
    }
    let start = std::time::Instant::now();
    let limit = time_limit_s.map(|s| std::time::Duration::from_secs_f64(s.max(0.0)));
    let sol = solve_milp(inst, limit)?;
    let mask: Vec<bool> = inst
        .assortment_vars
        .iter()
        .map(|&j| sol.x[j] > 0.5)
        .collect();
    if mask.is_empty() {
        return Err(ChoiceError::Unsupported(
            "instance has no assortment variables".into(),
        ));
    }
    Ok(OptResult {
        assortment: Assortment::from_mask(mask),
        value: sol.objective,
        method: inst.name.replace('_', "-"),
        exact: sol.optimal,
        nodes: 0,
        seconds: start.elapsed().as_secs_f64(),
        params: BTreeMap::new(),
    })
}

pub(crate) fn check_inputs<M: ChoiceModel + ?Sized>(
    model: &M,
    rev: &RevenueSpec,
    cap: Option<&CapacityConstraint>,
) -> Result<usize> {
    let n = model.n();
    if n < 2 {
        return Err(ChoiceError::Universe(
            "optimization needs at least one product".into(),
        ));
    }
    if rev.mu.len() != n {
        return Err(ChoiceError::Dimension {
            expected: n,
            got: rev.mu.len(),
            context: "revenue vector",
        });
    }
    if rev.mu[n - 1] != 0.0 {
        return Err(ChoiceError::Model("no-purchase revenue must be 0".into()));
    }
    if let Some(c) = cap {
        if c.a.len() != n {
            return Err(ChoiceError::Dimension {
                expected: n,
                got: c.a.len(),
                context: "capacity coefficients",
            });
        }
    }
    Ok(n)
}

pub(crate) fn np_only(n: usize) -> Assortment {
    let mut mask = vec![false; n];
    mask[n - 1] = true;
    Assortment::from_mask(mask)
}

pub(crate) fn revenue<M: ChoiceModel + ?Sized>(
    model: &M,
    s: &Assortment,
    rev: &RevenueSpec,
) -> Result<f64> {
    let p = model.probabilities(s)?;
    Ok(s.members().map(|i| rev.mu[i] * p.get(i)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_break_prefers_small_then_lexicographic() {
        let a = Assortment::parse_mask("101").unwrap();
        let b = Assortment::parse_mask("011").unwrap();
        let c = Assortment::parse_mask("111").unwrap();
        assert!(prefer(1.0, &b, 1.0, &a));
        assert!(!prefer(1.0, &a, 1.0, &b));
        assert!(prefer(1.0, &a, 1.0, &c));
        assert!(prefer(2.0, &c, 1.0, &a));
    }

    #[test]
    fn result_json_uses_mask_string() {
        let r = OptResult {
            assortment: Assortment::parse_mask("0101").unwrap(),
            value: 12.5,
            method: "ro".into(),
            exact: false,
            nodes: 4,
            seconds: 0.0,
            params: BTreeMap::new(),
        };
        let text = r.to_json().unwrap();
        assert!(text.contains("\"assortment\": \"0101\""));
        assert_eq!(OptResult::from_json(&text).unwrap(), r);
    }
}
