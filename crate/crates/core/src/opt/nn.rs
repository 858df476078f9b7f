//! Big-M MIP over a trained gated network and its native solver.
//!
//! The network's output probabilities `exp(z_L)` are replaced by the
//! quadratic surrogate `q(x) = 1 + x + x^2/2`, so the objective becomes
//! `sum_S mu_i q(z_L,i) / sum_S q(z_L,i)`.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use microlp::OptimizationDirection;
use serde::{Deserialize, Serialize};

use super::enumerate::{revenue_order, revenue_ordered};
use super::mip::{solve_milp_with, MipInstance, Objective, QuadRow, Sense, VarKind};
use super::{check_inputs, OptResult};
use crate::choice::{Assortment, CapacityConstraint, ChoiceModel, ProbVector, RevenueSpec};
use crate::error::{ChoiceError, Result};
use crate::neural::{Arch, NetworkParams};

const NODE_LIMIT: u64 = 10_000_000;

fn q(x: f64) -> f64 {
    1.0 + x + 0.5 * x * x
}

/// Variables and bounds of one ReLU unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitEncoding {
    pub z: usize,
    pub z_neg: usize,
    pub zeta: usize,
    /// Pre-activation interval over `z_0 in [0,1]^n`.
    pub lo: f64,
    pub hi: f64,
    pub m_pos: f64,
    pub m_neg: f64,
}

/// Bookkeeping that ties a [`MipInstance`] back to its network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnEncoding {
    pub net: NetworkParams,
    pub mu: Vec<f64>,
    pub cap: Option<CapacityConstraint>,
    pub units: Vec<Vec<UnitEncoding>>,
    pub q: Vec<usize>,
    pub w: Vec<usize>,
    pub q_bounds: Vec<(f64, f64)>,
    /// The first `network_rows` rows encode the forward pass.
    pub network_rows: usize,
}

fn require_gasn(net: &NetworkParams) -> Result<()> {
    if net.arch != Arch::Gasn {
        return Err(ChoiceError::Unsupported(
            "MIP encoding is only available for the gated network (gasn)".into(),
        ));
    }
    if net.input != net.n {
        return Err(ChoiceError::Unsupported(
            "MIP encoding needs an assortment-input network".into(),
        ));
    }
    Ok(())
}

/// Pre-activation intervals of every layer for inputs in `input`.
pub(crate) fn propagate(net: &NetworkParams, input: &[(f64, f64)]) -> Vec<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(net.layers.len());
    let mut cur = input.to_vec();
    for l in &net.layers {
        let mut pre = Vec::with_capacity(l.rows);
        for i in 0..l.rows {
            let (mut lo, mut hi) = (l.b[i], l.b[i]);
            for (&w, &(a, b)) in l.row(i).iter().zip(&cur) {
                if w >= 0.0 {
                    lo += w * a;
                    hi += w * b;
                } else {
                    lo += w * b;
                    hi += w * a;
                }
            }
            pre.push((lo, hi));
        }
        cur = pre.iter().map(|&(a, b)| (a.max(0.0), b.max(0.0))).collect();
        out.push(pre);
    }
    out
}

/// Builds the big-M MIP with the quadratic-surrogate ratio objective.
pub fn build_nn_mip(
    net: &NetworkParams,
    rev: &RevenueSpec,
    cap: Option<&CapacityConstraint>,
) -> Result<MipInstance> {
    require_gasn(net)?;
    let n = check_inputs(net, rev, cap)?;
    let np = n - 1;
    let mut m = MipInstance::new("nn_mip");
    let z0: Vec<usize> = (0..n)
        .map(|i| {
            let lo = if i == np { 1.0 } else { 0.0 };
            m.add_var(format!("z0_{i}"), VarKind::Binary, lo, 1.0)
        })
        .collect();
    let mut bounds_in = vec![(0.0, 1.0); n];
    bounds_in[np] = (1.0, 1.0);
    let intervals = propagate(net, &bounds_in);
    let mut prev = z0.clone();
    let mut units = Vec::with_capacity(net.layers.len());
    for (l, (layer, iv)) in net.layers.iter().zip(&intervals).enumerate() {
        let l = l + 1;
        let mut layer_units = Vec::with_capacity(layer.rows);
        for (k, &(lo, hi)) in iv.iter().enumerate() {
            let m_pos = hi.max(0.0);
            let m_neg = (-lo).max(0.0);
            let (zeta_lo, zeta_hi) = if hi <= 0.0 {
                (0.0, 0.0)
            } else if lo >= 0.0 {
                (1.0, 1.0)
            } else {
                (0.0, 1.0)
            };
            let z = m.add_var(format!("z{l}_{k}"), VarKind::Continuous, 0.0, m_pos);
            let z_neg = m.add_var(format!("zn{l}_{k}"), VarKind::Continuous, 0.0, m_neg);
            let zeta = m.add_var(format!("zeta{l}_{k}"), VarKind::Binary, zeta_lo, zeta_hi);
            let mut coefs = vec![(z, 1.0), (z_neg, -1.0)];
            coefs.extend(
                layer
                    .row(k)
                    .iter()
                    .zip(&prev)
                    .filter(|(w, _)| **w != 0.0)
                    .map(|(&w, &j)| (j, -w)),
            );
            m.add_row(format!("lin{l}_{k}"), coefs, Sense::Eq, layer.b[k]);
            m.add_row(
                format!("on{l}_{k}"),
                vec![(z, 1.0), (zeta, -m_pos)],
                Sense::Le,
                0.0,
            );
            m.add_row(
                format!("off{l}_{k}"),
                vec![(z_neg, 1.0), (zeta, m_neg)],
                Sense::Le,
                m_neg,
            );
            layer_units.push(UnitEncoding {
                z,
                z_neg,
                zeta,
                lo,
                hi,
                m_pos,
                m_neg,
            });
        }
        prev = layer_units.iter().map(|u| u.z).collect();
        units.push(layer_units);
    }
    let network_rows = m.rows.len();
    let last = units.last().expect("network has a layer");
    let mut qv = Vec::with_capacity(n);
    let mut wv = Vec::with_capacity(n);
    let mut q_bounds = Vec::with_capacity(n);
    for (i, u) in last.iter().enumerate() {
        let (qlo, qhi) = (q(u.lo.max(0.0)), q(u.hi.max(0.0)));
        let qi = m.add_var(format!("q_{i}"), VarKind::Continuous, qlo, qhi);
        let wi = m.add_var(format!("w_{i}"), VarKind::Continuous, 0.0, qhi);
        m.quad_rows.push(QuadRow {
            name: format!("surrogate_{i}"),
            linear: vec![(qi, 1.0), (u.z, -1.0)],
            quad: vec![(u.z, u.z, -0.5)],
            sense: Sense::Eq,
            rhs: 1.0,
        });
        m.add_row(
            format!("env_a_{i}"),
            vec![(wi, 1.0), (z0[i], -qhi)],
            Sense::Le,
            0.0,
        );
        m.add_row(
            format!("env_b_{i}"),
            vec![(wi, 1.0), (z0[i], -qlo)],
            Sense::Ge,
            0.0,
        );
        m.add_row(
            format!("env_c_{i}"),
            vec![(wi, 1.0), (qi, -1.0), (z0[i], -qlo)],
            Sense::Le,
            -qlo,
        );
        m.add_row(
            format!("env_d_{i}"),
            vec![(wi, 1.0), (qi, -1.0), (z0[i], -qhi)],
            Sense::Ge,
            -qhi,
        );
        qv.push(qi);
        wv.push(wi);
        q_bounds.push((qlo, qhi));
    }
    if let Some(c) = cap {
        m.add_row(
            "capacity",
            (0..np).map(|i| (z0[i], c.a[i])).collect(),
            Sense::Le,
            c.c,
        );
    }
    m.objective = Objective::Ratio {
        num: (0..n)
            .filter(|&i| rev.mu[i] != 0.0)
            .map(|i| (wv[i], rev.mu[i]))
            .collect(),
        den: wv.iter().map(|&j| (j, 1.0)).collect(),
    };
    m.assortment_vars = z0;
    m.nn = Some(NnEncoding {
        net: net.clone(),
        mu: rev.mu.clone(),
        cap: cap.cloned(),
        units,
        q: qv,
        w: wv,
        q_bounds,
        network_rows,
    });
    Ok(m)
}

impl NnEncoding {
    /// The full MIP point induced by the offer vector `s` through a forward
    /// pass; indifferent units (pre-activation exactly 0) get `zeta = 1`.
    pub fn point(&self, inst: &MipInstance, s: &Assortment) -> Result<Vec<f64>> {
        let act = self.net.activations(&s.as_f64())?;
        let mut x = vec![0.0; inst.vars.len()];
        for (i, &j) in inst.assortment_vars.iter().enumerate() {
            x[j] = if s.contains(i) { 1.0 } else { 0.0 };
        }
        for (l, layer) in self.units.iter().enumerate() {
            for (k, u) in layer.iter().enumerate() {
                let a = act.pre[l][k];
                x[u.z] = a.max(0.0);
                x[u.z_neg] = (-a).max(0.0);
                x[u.zeta] = if a > 0.0 {
                    1.0
                } else if a < 0.0 {
                    0.0
                } else {
                    inst.vars[u.zeta].hi
                };
            }
        }
        for (i, (&qi, &wi)) in self.q.iter().zip(&self.w).enumerate() {
            x[qi] = q(act.logits()[i]);
            x[wi] = if s.contains(i) { x[qi] } else { 0.0 };
        }
        Ok(x)
    }
}

/// Per-unit `[min, max]` of `z_l` over the forward-pass rows with the offer
/// vector fixed to `s`, computed with the LP/MIP solver.
pub fn mip_activation_range(inst: &MipInstance, s: &Assortment) -> Result<Vec<Vec<(f64, f64)>>> {
    let enc = inst
        .nn
        .as_ref()
        .ok_or_else(|| ChoiceError::Unsupported("not a network MIP".into()))?;
    let mut sub = MipInstance::new("forward_pass");
    sub.vars = inst.vars.clone();
    sub.rows = inst.rows[..enc.network_rows].to_vec();
    for (i, &j) in inst.assortment_vars.iter().enumerate() {
        let v = if s.contains(i) { 1.0 } else { 0.0 };
        sub.vars[j].lo = v;
        sub.vars[j].hi = v;
    }
    let mut out = Vec::with_capacity(enc.units.len());
    for layer in &enc.units {
        let mut r = Vec::with_capacity(layer.len());
        for u in layer {
            let obj = [(u.z, 1.0)];
            let lo = solve_milp_with(&sub, Some((&obj, OptimizationDirection::Minimize)), None)?;
            let hi = solve_milp_with(&sub, Some((&obj, OptimizationDirection::Maximize)), None)?;
            r.push((lo.objective, hi.objective));
        }
        out.push(r);
    }
    Ok(out)
}

/// The network with `exp` replaced by the quadratic surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateNet {
    pub net: NetworkParams,
}

impl SurrogateNet {
    pub fn new(net: NetworkParams) -> Result<Self> {
        require_gasn(&net)?;
        Ok(Self { net })
    }
}

impl ChoiceModel for SurrogateNet {
    fn n(&self) -> usize {
        self.net.n
    }

    fn probabilities(&self, assortment: &Assortment) -> Result<ProbVector> {
        let act = self.net.activations(&assortment.as_f64())?;
        let mut p: Vec<f64> = act
            .logits()
            .iter()
            .enumerate()
            .map(|(i, &x)| if assortment.contains(i) { q(x) } else { 0.0 })
            .collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        Ok(ProbVector(p))
    }
}

struct Search<'a> {
    net: &'a NetworkParams,
    mu: &'a [f64],
    cap: Option<&'a CapacityConstraint>,
    order: Vec<usize>,
    deadline: Option<Instant>,
    nodes: u64,
    aborted: bool,
}

impl Search<'_> {
    /// `(sum_S mu q, sum_S q)` at a binary offer vector.
    fn eval(&self, s: &[bool]) -> (f64, f64) {
        let x: Vec<f64> = s.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let act = self.net.activations(&x).expect("dimension checked");
        let (mut num, mut den) = (0.0, 0.0);
        for (i, &zl) in act.logits().iter().enumerate() {
            if s[i] {
                num += self.mu[i] * q(zl);
                den += q(zl);
            }
        }
        (num, den)
    }

    /// Depth-first search for the offer vector maximising
    /// `sum_S (mu_i - t) q_i`; `best` holds the incumbent value and set.
    fn run(
        &mut self,
        t: f64,
        fixed: &mut Vec<Option<bool>>,
        depth: usize,
        used: f64,
        best: &mut (f64, Vec<bool>),
    ) {
        if self.aborted {
            return;
        }
        self.nodes += 1;
        if self.nodes >= NODE_LIMIT {
            self.aborted = true;
            return;
        }
        if self.nodes % 256 == 0 && self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.aborted = true;
            return;
        }
        let bounds: Vec<(f64, f64)> = fixed
            .iter()
            .map(|f| match f {
                Some(true) => (1.0, 1.0),
                Some(false) => (0.0, 0.0),
                None => (0.0, 1.0),
            })
            .collect();
        let last = propagate(self.net, &bounds)
            .pop()
            .expect("network has a layer");
        let mut ub = 0.0;
        for (i, &(lo, hi)) in last.iter().enumerate() {
            let c = self.mu[i] - t;
            let gain = if c >= 0.0 {
                c * q(hi.max(0.0))
            } else {
                c * q(lo.max(0.0))
            };
            match fixed[i] {
                Some(true) => ub += gain,
                None => ub += gain.max(0.0),
                Some(false) => {}
            }
        }
        let tol = 1e-12 * t.abs().max(1.0);
        if ub <= best.0 + tol {
            return;
        }
        // completion with every free product left out
        let s: Vec<bool> = fixed.iter().map(|f| f.unwrap_or(false)).collect();
        let (num, den) = self.eval(&s);
        let f = num - t * den;
        if f > best.0 + tol {
            *best = (f, s);
        }
        if depth == self.order.len() {
            return;
        }
        let i = self.order[depth];
        let a = self.cap.map_or(0.0, |c| c.a[i]);
        if self.cap.is_none_or(|c| used + a <= c.c + 1e-9) {
            fixed[i] = Some(true);
            self.run(t, fixed, depth + 1, used + a, best);
        }
        fixed[i] = Some(false);
        self.run(t, fixed, depth + 1, used, best);
        fixed[i] = None;
    }
}

/// Dinkelbach iteration over a depth-first branch and bound on the offer
/// binaries, warm-started from the revenue-ordered assortment. With a
/// finite `time_limit_s` the best incumbent is returned when time runs out
/// (`exact = false`).
pub fn solve_nn_mip(inst: &MipInstance, time_limit_s: f64) -> Result<OptResult> {
    let enc = inst
        .nn
        .as_ref()
        .ok_or_else(|| ChoiceError::Unsupported("not a network MIP; use solve_mip".into()))?;
    let start = Instant::now();
    let net = &enc.net;
    let n = net.n;
    let np = n - 1;
    let rev = RevenueSpec { mu: enc.mu.clone() };
    let cap = enc.cap.as_ref();
    if cap.is_some_and(|c| c.c < 0.0) {
        return Err(ChoiceError::Infeasible(
            "capacity below the mandatory usage".into(),
        ));
    }
    let surrogate = SurrogateNet::new(net.clone())?;
    let warm = revenue_ordered(&surrogate, &rev, cap)?;
    let deadline =
        (time_limit_s.is_finite()).then(|| start + Duration::from_secs_f64(time_limit_s.max(0.0)));
    let mut search = Search {
        net,
        mu: &enc.mu,
        cap,
        order: revenue_order(&rev),
        deadline,
        nodes: 0,
        aborted: time_limit_s <= 0.0,
    };
    let mut incumbent: Vec<bool> = warm.assortment.mask().to_vec();
    let (num, den) = search.eval(&incumbent);
    let mut t = num / den;
    let mut rounds = 0u64;
    while !search.aborted {
        rounds += 1;
        let mut fixed = vec![None; n];
        fixed[np] = Some(true);
        let mut best = (0.0, incumbent.clone());
        search.run(t, &mut fixed, 0, 0.0, &mut best);
        let (num, den) = search.eval(&best.1);
        let ratio = num / den;
        if ratio > t + 1e-12 * t.abs().max(1.0) {
            incumbent = best.1;
            t = ratio;
        } else {
            break;
        }
    }
    let exact = !search.aborted;
    let assortment = Assortment::from_mask(incumbent);
    let mut params = BTreeMap::new();
    params.insert("dinkelbach_rounds".into(), serde_json::json!(rounds));
    params.insert(
        "network_revenue".into(),
        serde_json::json!(super::revenue(net, &assortment, &rev)?),
    );
    let last = enc.units.last().expect("network has a layer");
    let (lo, hi) = last
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), u| {
            (a.min(u.lo.max(0.0)), b.max(u.hi.max(0.0)))
        });
    params.insert("output_interval".into(), serde_json::json!([lo, hi]));
    Ok(OptResult {
        assortment,
        value: t,
        method: "nn-mip".into(),
        exact,
        nodes: search.nodes,
        seconds: start.elapsed().as_secs_f64(),
        params,
    })
}
