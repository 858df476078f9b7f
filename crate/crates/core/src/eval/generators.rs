//! Random revenue vectors and capacity rows for optimization instances.

use rand::Rng as _;

use crate::choice::{CapacityConstraint, RevenueSpec, Universe};
use crate::error::Result;
use crate::rng::Rng;

pub const COEF_RANGE: (f64, f64) = (10.0, 50.0);

/// `mu_i ~ U[10, 50]` for every product, 0 for no-purchase.
pub fn gen_revenue(universe: &Universe, rng: &mut Rng) -> Result<RevenueSpec> {
    let mu = (0..universe.n())
        .map(|i| {
            if Some(i) == universe.no_purchase_index() {
                0.0
            } else {
                rng.random_range(COEF_RANGE.0..=COEF_RANGE.1)
            }
        })
        .collect();
    RevenueSpec::new(universe, mu)
}

/// `a_i ~ U[10, 50]` (0 for no-purchase) and a budget uniform between
/// `max(|a|_1 / n, |a|_inf)` and `max(4 |a|_1 / n, |a|_inf)`.
pub fn gen_capacity(universe: &Universe, rng: &mut Rng) -> Result<CapacityConstraint> {
    let n = universe.n();
    let a: Vec<f64> = (0..n)
        .map(|i| {
            if Some(i) == universe.no_purchase_index() {
                0.0
            } else {
                rng.random_range(COEF_RANGE.0..=COEF_RANGE.1)
            }
        })
        .collect();
    let (lo, hi) = budget_bracket(&a);
    let c = if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    };
    CapacityConstraint::new(universe, a, c)
}

/// The budget interval for coefficients `a`.
pub fn budget_bracket(a: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let l1: f64 = a.iter().sum();
    let linf = a.iter().copied().fold(0.0, f64::max);
    ((l1 / n).max(linf), (4.0 * l1 / n).max(linf))
}
