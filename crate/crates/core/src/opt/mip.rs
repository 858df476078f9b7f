use std::time::Duration;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use super::nn::NnEncoding;
use crate::error::{ChoiceError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipVar {
    pub name: String,
    pub kind: VarKind,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(&self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }

    pub fn holds(&self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Sense::Le => lhs <= rhs + tol,
            Sense::Ge => lhs >= rhs - tol,
            Sense::Eq => (lhs - rhs).abs() <= tol,
        }
    }
}

/// Linear row `sum coefs . x  sense  rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub coefs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, c)| c * x[j]).sum()
    }
}

/// Row with an additional quadratic part `sum c . x_j x_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadRow {
    pub name: String,
    pub linear: Vec<(usize, f64)>,
    pub quad: Vec<(usize, usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl QuadRow {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.linear.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
            + self
                .quad
                .iter()
                .map(|&(j, k, c)| c * x[j] * x[k])
                .sum::<f64>()
    }
}

/// Maximisation objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Objective {
    Linear {
        coefs: Vec<(usize, f64)>,
    },
    /// `num . x / den . x`
    Ratio {
        num: Vec<(usize, f64)>,
        den: Vec<(usize, f64)>,
    },
}

/// A mixed-integer program over named variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipInstance {
    pub name: String,
    pub vars: Vec<MipVar>,
    pub rows: Vec<Row>,
    pub quad_rows: Vec<QuadRow>,
    pub objective: Objective,
    /// Variable index of each item's offer indicator, when the instance
    /// encodes an assortment problem.
    pub assortment_vars: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nn: Option<NnEncoding>,
}

impl MipInstance {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            vars: Vec::new(),
            rows: Vec::new(),
            quad_rows: Vec::new(),
            objective: Objective::Linear { coefs: Vec::new() },
            assortment_vars: Vec::new(),
            nn: None,
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lo: f64, hi: f64) -> usize {
        self.vars.push(MipVar {
            name: name.into(),
            kind,
            lo,
            hi,
        });
        self.vars.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coefs: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        self.rows.push(Row {
            name: name.into(),
            coefs,
            sense,
            rhs,
        });
    }

    pub fn validate(&self) -> Result<()> {
        let nv = self.vars.len();
        let bad = |j: usize| j >= nv;
        for r in &self.rows {
            if r.coefs.iter().any(|&(j, _)| bad(j)) {
                return Err(ChoiceError::Invariant(format!(
                    "row {} references an unknown variable",
                    r.name
                )));
            }
        }
        for r in &self.quad_rows {
            if r.linear.iter().any(|&(j, _)| bad(j))
                || r.quad.iter().any(|&(j, k, _)| bad(j) || bad(k))
            {
                return Err(ChoiceError::Invariant(format!(
                    "row {} references an unknown variable",
                    r.name
                )));
            }
        }
        let obj_ok = match &self.objective {
            Objective::Linear { coefs } => coefs.iter().all(|&(j, _)| !bad(j)),
            Objective::Ratio { num, den } => num.iter().chain(den).all(|&(j, _)| !bad(j)),
        };
        if !obj_ok || self.assortment_vars.iter().any(|&j| bad(j)) {
            return Err(ChoiceError::Invariant(
                "objective references an unknown variable".into(),
            ));
        }
        for v in &self.vars {
            if v.lo > v.hi {
                return Err(ChoiceError::Invariant(format!(
                    "variable {} has empty bounds",
                    v.name
                )));
            }
        }
        Ok(())
    }

    /// Largest constraint or bound violation of the point `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &xj) in self.vars.iter().zip(x) {
            worst = worst.max(v.lo - xj).max(xj - v.hi);
            if v.kind == VarKind::Binary {
                worst = worst.max((xj - xj.round()).abs());
            }
        }
        let viol = |lhs: f64, sense: Sense, rhs: f64| match sense {
            Sense::Le => lhs - rhs,
            Sense::Ge => rhs - lhs,
            Sense::Eq => (lhs - rhs).abs(),
        };
        for r in &self.rows {
            worst = worst.max(viol(r.lhs(x), r.sense, r.rhs));
        }
        for r in &self.quad_rows {
            worst = worst.max(viol(r.lhs(x), r.sense, r.rhs));
        }
        worst
    }

    /// The linear objective `num - t den` of the ratio at level `t`.
    pub fn linearized(&self, t: Option<f64>) -> Result<Vec<(usize, f64)>> {
        match (&self.objective, t) {
            (Objective::Linear { coefs }, _) => Ok(coefs.clone()),
            (Objective::Ratio { .. }, None) => Err(ChoiceError::Unsupported(
                "ratio objective needs a level t to be written as a linear objective".into(),
            )),
            (Objective::Ratio { num, den }, Some(t)) => {
                let mut c = vec![0.0; self.vars.len()];
                num.iter().for_each(|&(j, v)| c[j] += v);
                den.iter().for_each(|&(j, v)| c[j] -= t * v);
                Ok(c.into_iter()
                    .enumerate()
                    .filter(|&(_, v)| v != 0.0)
                    .collect())
            }
        }
    }
}

/// Solution of a linear MIP.
#[derive(Debug, Clone, PartialEq)]
pub struct MipSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub optimal: bool,
}

/// Solves a MIP with a linear objective and no quadratic rows.
pub fn solve_milp(inst: &MipInstance, time_limit: Option<Duration>) -> Result<MipSolution> {
    solve_milp_with(inst, None, time_limit)
}

/// As [`solve_milp`] with an optional objective override.
pub(crate) fn solve_milp_with(
    inst: &MipInstance,
    objective: Option<(&[(usize, f64)], OptimizationDirection)>,
    time_limit: Option<Duration>,
) -> Result<MipSolution> {
    inst.validate()?;
    if !inst.quad_rows.is_empty() {
        return Err(ChoiceError::Unsupported(
            "quadratic rows need the native solver".into(),
        ));
    }
    let (coefs, dir) = match objective {
        Some((c, d)) => (c.to_vec(), d),
        None => (inst.linearized(None)?, OptimizationDirection::Maximize),
    };
    let mut obj = vec![0.0; inst.vars.len()];
    coefs.iter().for_each(|&(j, c)| obj[j] += c);
    let mut p = Problem::new(dir);
    if let Some(t) = time_limit {
        p.set_time_limit(t);
    }
    let vars: Vec<_> = inst
        .vars
        .iter()
        .zip(&obj)
        .map(|(v, &c)| match v.kind {
            VarKind::Binary => p.add_integer_var(c, (v.lo.round() as i32, v.hi.round() as i32)),
            VarKind::Continuous => p.add_var(c, (v.lo, v.hi)),
        })
        .collect();
    for r in &inst.rows {
        let expr: Vec<_> = r.coefs.iter().map(|&(j, c)| (vars[j], c)).collect();
        let op = match r.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Ge => ComparisonOp::Ge,
            Sense::Eq => ComparisonOp::Eq,
        };
        p.add_constraint(expr.as_slice(), op, r.rhs);
    }
    let outcome = p.solve().map_err(|e| match e {
        microlp::Error::Infeasible => {
            ChoiceError::Infeasible(format!("{} has no feasible point", inst.name))
        }
        other => ChoiceError::Invariant(format!("MIP solver failed: {other}")),
    })?;
    let optimal = outcome.is_optimal();
    let sol = outcome.into_solution().map_err(|_| {
        ChoiceError::Infeasible("time limit reached before any feasible point".into())
    })?;
    Ok(MipSolution {
        x: vars.iter().map(|&v| sol.var_value_raw(v)).collect(),
        objective: sol.objective(),
        optimal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knapsack_solves() {
        let mut m = MipInstance::new("knap");
        let x: Vec<usize> = (0..3)
            .map(|i| m.add_var(format!("x{i}"), VarKind::Binary, 0.0, 1.0))
            .collect();
        m.add_row(
            "cap",
            vec![(x[0], 3.0), (x[1], 4.0), (x[2], 2.0)],
            Sense::Le,
            5.0,
        );
        m.objective = Objective::Linear {
            coefs: vec![(x[0], 4.0), (x[1], 5.0), (x[2], 3.0)],
        };
        let s = solve_milp(&m, None).unwrap();
        assert!((s.objective - 7.0).abs() < 1e-9);
        assert!(m.max_violation(&s.x) < 1e-9);
    }

    #[test]
    fn ratio_needs_level() {
        let mut m = MipInstance::new("r");
        let x = m.add_var("x", VarKind::Continuous, 1.0, 2.0);
        m.objective = Objective::Ratio {
            num: vec![(x, 3.0)],
            den: vec![(x, 1.0)],
        };
        assert!(m.linearized(None).is_err());
        assert_eq!(m.linearized(Some(1.0)).unwrap(), vec![(x, 2.0)]);
    }

    #[test]
    fn unknown_variable_is_rejected() {
        let mut m = MipInstance::new("bad");
        m.add_row("r", vec![(3, 1.0)], Sense::Le, 1.0);
        assert!(m.validate().is_err());
    }
}
