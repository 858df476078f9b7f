use std::fmt;

use super::generators::{gen_capacity, gen_revenue};
use super::prediction::trial_data;
use super::report::ReportTable;
use super::spec::{streams, Estimator, ExperimentSpec};
use crate::choice::{Assortment, CapacityConstraint, RevenueSpec};
use crate::error::{ChoiceError, Result};
use crate::models::AnyModel;
use crate::opt::{
    adxopt, brute_force_opt, build_mnl_milp, build_nn_mip, mccm_bellman_opt, ratio_against,
    revenue_ordered, solve_mip, OptResult,
};
use crate::rng::{self, child_seed};

/// Estimate-then-optimize recipe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    MnlRevenueOrdered,
    MnlMilp,
    MccmBellman,
    MccmAdxopt,
    NetMip(Estimator),
}

impl Pipeline {
    /// Pipelines built on the given estimators; the Bellman method only
    /// applies without a capacity row.
    pub fn for_estimators(estimators: &[Estimator], constrained: bool) -> Vec<Pipeline> {
        let mut out = Vec::new();
        for &e in estimators {
            match e {
                Estimator::MnlMle => out.extend([Pipeline::MnlRevenueOrdered, Pipeline::MnlMilp]),
                Estimator::MccmEm if constrained => out.push(Pipeline::MccmAdxopt),
                Estimator::MccmEm => out.extend([Pipeline::MccmBellman, Pipeline::MccmAdxopt]),
                Estimator::Net { .. } => out.push(Pipeline::NetMip(e)),
            }
        }
        out
    }

    fn estimator(&self) -> Estimator {
        match *self {
            Pipeline::MnlRevenueOrdered | Pipeline::MnlMilp => Estimator::MnlMle,
            Pipeline::MccmBellman | Pipeline::MccmAdxopt => Estimator::MccmEm,
            Pipeline::NetMip(e) => e,
        }
    }

    fn run(
        &self,
        model: &AnyModel,
        rev: &RevenueSpec,
        cap: Option<&CapacityConstraint>,
        spec: &ExperimentSpec,
    ) -> Result<OptResult> {
        match (self, model) {
            (Pipeline::MnlRevenueOrdered, AnyModel::Mnl(m)) => revenue_ordered(m, rev, cap),
            (Pipeline::MnlMilp, AnyModel::Mnl(m)) => solve_mip(&build_mnl_milp(m, rev, cap)?, None),
            (Pipeline::MccmBellman, AnyModel::Mccm(m)) => mccm_bellman_opt(m, rev, cap),
            (Pipeline::MccmAdxopt, AnyModel::Mccm(m)) => {
                adxopt(m, rev, cap, spec.opt.removal_limit)
            }
            (Pipeline::NetMip(_), AnyModel::Network(net)) => {
                solve_mip(&build_nn_mip(net, rev, cap)?, Some(spec.opt.time_limit_s))
            }
            _ => Err(ChoiceError::Invariant(format!(
                "{self} got a {} model",
                model.kind()
            ))),
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pipeline::MnlRevenueOrdered => f.write_str("mnl-mle+ro"),
            Pipeline::MnlMilp => f.write_str("mnl-mle+milp"),
            Pipeline::MccmBellman => f.write_str("mccm-em+bellman"),
            Pipeline::MccmAdxopt => f.write_str("mccm-em+adxopt"),
            Pipeline::NetMip(e) => write!(f, "{e}+mip"),
        }
    }
}

enum Outcome {
    Ratio { value: f64, exact: bool },
    Failed(String),
}

/// Mean optimality ratio of each pipeline against the exact optimum of the
/// true model. Every truth instance is fitted once and then optimized for
/// `opt.revenue_draws` random revenue vectors (and capacity rows when
/// `opt.constrained`).
pub fn run_opt_experiment(spec: &ExperimentSpec) -> Result<ReportTable> {
    spec.validate()?;
    let constrained = spec.opt.constrained;
    let pipelines = Pipeline::for_estimators(&spec.estimators, constrained);
    let col = format!(
        "{} n={} {}",
        spec.truth,
        spec.n,
        if constrained {
            "constrained"
        } else {
            "unconstrained"
        }
    );
    let mut table = ReportTable::new(
        "optimality ratio",
        "ratio",
        pipelines.iter().map(|p| p.to_string()).collect(),
        vec![col.clone()],
    );
    let per_trial = super::par_map(
        spec.trials,
        spec.jobs,
        |t| -> Result<Vec<(usize, String, Outcome)>> {
            let seed = spec.trial_seed(t);
            let d = trial_data(spec, seed)?;
            let mut fitted: Vec<(Estimator, std::result::Result<AnyModel, String>)> = Vec::new();
            for (k, &e) in spec.estimators.iter().enumerate() {
                let fit = e
                    .fit(
                        &d.train,
                        d.val.as_ref(),
                        &spec.fit,
                        child_seed(seed, streams::FIT + k as u64),
                    )
                    .map_err(|err| err.to_string());
                fitted.push((e, fit));
            }
            let mut out = Vec::new();
            let mut r = rng::seeded(child_seed(seed, streams::REVENUE));
            for draw in 0..spec.opt.revenue_draws {
                let universe = d.train.universe;
                let rev = gen_revenue(&universe, &mut r)?;
                let cap = if constrained {
                    Some(gen_capacity(&universe, &mut r)?)
                } else {
                    None
                };
                let best = brute_force_opt(&d.truth, &rev, cap.as_ref())?;
                for (p, pipe) in pipelines.iter().enumerate() {
                    let model = fitted
                        .iter()
                        .find(|(e, _)| *e == pipe.estimator())
                        .map(|(_, m)| m);
                    let outcome = match model {
                        Some(Ok(m)) => match pipe.run(m, &rev, cap.as_ref(), spec) {
                            Ok(res) => score(
                                &res.assortment,
                                &d.truth,
                                &rev,
                                cap.as_ref(),
                                best.value,
                                res.exact,
                            )?,
                            Err(e) => Outcome::Failed(e.to_string()),
                        },
                        Some(Err(e)) => Outcome::Failed(format!("fit failed: {e}")),
                        None => Outcome::Failed("estimator missing".into()),
                    };
                    out.push((p, format!("instance {t} draw {draw}"), outcome));
                }
            }
            Ok(out)
        },
    );
    for result in per_trial {
        for (p, label, outcome) in result? {
            let row = pipelines[p].to_string();
            match outcome {
                Outcome::Ratio { value, exact } => {
                    table.push(&row, &col, value);
                    if !exact && matches!(pipelines[p], Pipeline::NetMip(_)) {
                        table.note(&row, &col, format!("{label}: time limit, incumbent used"));
                    }
                }
                Outcome::Failed(msg) => table.fail(&row, &col, format!("{label}: {msg}")),
            }
        }
    }
    Ok(table)
}

fn score(
    s: &Assortment,
    truth: &AnyModel,
    rev: &RevenueSpec,
    cap: Option<&CapacityConstraint>,
    optimum: f64,
    exact: bool,
) -> Result<Outcome> {
    if cap.is_some_and(|c| !c.admits(s)) {
        return Ok(Outcome::Failed(
            "recommended assortment violates the capacity row".into(),
        ));
    }
    let value = ratio_against(s, truth, rev, optimum)?;
    if value > 1.0 + 1e-9 {
        return Err(ChoiceError::Invariant(format!(
            "optimality ratio {value} exceeds 1"
        )));
    }
    Ok(Outcome::Ratio { value, exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelKind;
    use crate::neural::TrainConfig;

    fn spec(truth: ModelKind, constrained: bool) -> ExperimentSpec {
        let mut s = ExperimentSpec {
            truth,
            n: 7,
            m_train: 4000,
            m_val: 500,
            m_test: 1,
            estimators: vec![Estimator::MnlMle, Estimator::MccmEm, Estimator::gasn(1)],
            trials: 1,
            seed: 5,
            ..ExperimentSpec::default()
        };
        s.opt.revenue_draws = 3;
        s.opt.constrained = constrained;
        s.fit.train = TrainConfig {
            epochs: 15,
            lr: 0.01,
            ..TrainConfig::default()
        };
        s
    }

    #[test]
    fn ratios_are_bounded_and_complete() {
        for constrained in [false, true] {
            let table = run_opt_experiment(&spec(ModelKind::Mnl, constrained)).unwrap();
            let col = &table.cols[0];
            assert_eq!(
                table.rows.contains(&"mccm-em+bellman".to_string()),
                !constrained
            );
            for row in &table.rows {
                let cell = table.cell(row, col).unwrap();
                assert!(cell.failures.is_empty(), "{row}: {:?}", cell.failures);
                assert_eq!(cell.count(), 3);
                assert!(cell.values.iter().all(|&v| v > 0.0 && v <= 1.0 + 1e-9));
            }
            // the MILP is exact for the fitted MNL, so it cannot lose to RO on it
            assert!(table.mean("mnl-mle+milp", col).unwrap() > 0.9);
        }
    }

    #[test]
    fn residual_networks_fail_per_instance() {
        let mut s = spec(ModelKind::Mnl, false);
        s.estimators = vec![Estimator::rasn(1)];
        s.opt.revenue_draws = 2;
        let table = run_opt_experiment(&s).unwrap();
        let cell = table.cell("rasn-1+mip", &table.cols[0]).unwrap();
        assert_eq!(cell.count(), 0);
        assert_eq!(cell.failures.len(), 2);
        assert!(cell.failures[0].contains("unsupported"));
    }
}
