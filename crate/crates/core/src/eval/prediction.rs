use super::report::ReportTable;
use super::spec::{streams, ExperimentSpec};
use crate::choice::{ce_loss, ChoiceDataset, UniformModel};
use crate::error::Result;
use crate::models::{gen_dataset, gen_instance, AnyModel, AssortmentSampler};
use crate::rng::child_seed;
use crate::Universe;

pub const UNIFORM_ROW: &str = "uniform";
pub const ORACLE_ROW: &str = "oracle";

pub(crate) struct TrialData {
    pub truth: AnyModel,
    pub train: ChoiceDataset,
    pub val: Option<ChoiceDataset>,
    pub test: ChoiceDataset,
}

pub(crate) fn trial_data(spec: &ExperimentSpec, trial_seed: u64) -> Result<TrialData> {
    let truth = gen_instance(spec.truth, spec.n, child_seed(trial_seed, streams::TRUTH))?;
    let sampler =
        AssortmentSampler::new(spec.sampler.clone(), Universe::with_no_purchase(spec.n)?)?;
    let draw = |m: usize, id: u64| gen_dataset(&truth, &sampler, m, child_seed(trial_seed, id));
    let train = draw(spec.m_train, streams::TRAIN)?;
    let val = if spec.m_val > 0 {
        Some(draw(spec.m_val, streams::VAL)?)
    } else {
        None
    };
    let test = draw(spec.m_test, streams::TEST)?;
    Ok(TrialData {
        truth,
        train,
        val,
        test,
    })
}

/// Mean test cross-entropy of every estimator, plus a uniform guess and
/// the true model. A failed fit is recorded in its cell and the trial
/// continues.
pub fn run_prediction_experiment(spec: &ExperimentSpec) -> Result<ReportTable> {
    spec.validate()?;
    let col = format!("{} n={} m={}", spec.truth, spec.n, spec.m_train);
    let mut rows = vec![UNIFORM_ROW.to_string()];
    rows.extend(spec.estimators.iter().map(|e| e.to_string()));
    rows.push(ORACLE_ROW.to_string());
    let mut table = ReportTable::new(
        format!("test cross-entropy, {} sampler", spec.sampler.label()),
        "ce",
        rows,
        vec![col.clone()],
    );
    let per_trial = super::par_map(
        spec.trials,
        spec.jobs,
        |t| -> Result<Vec<(String, Result<f64>)>> {
            let seed = spec.trial_seed(t);
            let d = trial_data(spec, seed)?;
            let mut out = vec![(
                UNIFORM_ROW.to_string(),
                ce_loss(&UniformModel { n: spec.n }, &d.test),
            )];
            for (k, est) in spec.estimators.iter().enumerate() {
                let fitted = est.fit(
                    &d.train,
                    d.val.as_ref(),
                    &spec.fit,
                    child_seed(seed, streams::FIT + k as u64),
                );
                out.push((est.to_string(), fitted.and_then(|m| ce_loss(&m, &d.test))));
            }
            out.push((ORACLE_ROW.to_string(), ce_loss(&d.truth, &d.test)));
            Ok(out)
        },
    );
    for (t, result) in per_trial.into_iter().enumerate() {
        for (row, value) in result? {
            match value {
                Ok(v) => table.push(&row, &col, v),
                Err(e) => table.fail(&row, &col, format!("trial {t}: {e}")),
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Estimator;
    use crate::models::ModelKind;
    use crate::neural::TrainConfig;

    fn small() -> ExperimentSpec {
        let mut spec = ExperimentSpec {
            truth: ModelKind::Mnl,
            n: 6,
            m_train: 3000,
            m_val: 500,
            m_test: 2000,
            estimators: vec![Estimator::MnlMle, Estimator::gasn(1)],
            trials: 2,
            seed: 11,
            ..ExperimentSpec::default()
        };
        spec.fit.train = TrainConfig {
            epochs: 20,
            lr: 0.01,
            ..TrainConfig::default()
        };
        spec
    }

    #[test]
    fn rows_and_ordering() {
        let table = run_prediction_experiment(&small()).unwrap();
        let col = &table.cols[0];
        assert_eq!(table.rows, vec!["uniform", "mnl-mle", "gasn-1", "oracle"]);
        for row in &table.rows {
            assert_eq!(table.cell(row, col).unwrap().count(), 2);
        }
        let oracle = table.mean("oracle", col).unwrap();
        let mle = table.mean("mnl-mle", col).unwrap();
        assert!(table.mean("uniform", col).unwrap() > oracle);
        assert!((mle - oracle).abs() < 0.03, "{mle} vs {oracle}");
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let a = run_prediction_experiment(&small()).unwrap();
        let mut spec = small();
        spec.jobs = 2;
        let b = run_prediction_experiment(&spec).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn failed_fits_are_recorded() {
        let mut spec = small();
        spec.estimators = vec![Estimator::rasn(1)];
        spec.fit.train.lr = -1.0;
        assert!(run_prediction_experiment(&spec).is_err());
        spec.fit.train.lr = 0.01;
        spec.fit.mle.max_iters = 0;
        spec.estimators = vec![Estimator::MnlMle];
        let table = run_prediction_experiment(&spec).unwrap();
        let cell = table.cell("mnl-mle", &table.cols[0]).unwrap();
        assert_eq!(cell.count(), 0);
        assert_eq!(cell.failures.len(), 2);
    }
}
