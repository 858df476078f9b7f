//! Experiment grids behind `reproduce`. Each target has three sizes:
//! `smoke` (seconds, used by the tests), `desk` (the default, minutes on one
//! core) and `--full` (the full-size grid, hours).

use anyhow::Result;
use serde::Serialize;

use assortnet::estimate::EmConfig;
use assortnet::eval::*;
use assortnet::models::{ModelKind, SamplerKind};
use assortnet::neural::TrainConfig;

use crate::config::out_dir;
use crate::{Outcome, ReproduceArgs, Usage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Size {
    Smoke,
    Desk,
    Full,
}

fn size(a: &ReproduceArgs) -> Result<Size> {
    if a.full {
        if a.preset.is_some() {
            return Err(Usage("--full and --preset are exclusive".into()).into());
        }
        return Ok(Size::Full);
    }
    match a.preset.as_deref().unwrap_or("desk") {
        "desk" => Ok(Size::Desk),
        "smoke" => Ok(Size::Smoke),
        other => Err(Usage(format!("unknown preset {other:?}; expected desk or smoke")).into()),
    }
}

fn epochs(size: Size, desk: usize) -> TrainConfig {
    TrainConfig {
        epochs: match size {
            Size::Smoke => 3,
            Size::Desk => desk,
            Size::Full => TrainConfig::default().epochs,
        },
        ..TrainConfig::default()
    }
}

pub fn run(a: &ReproduceArgs) -> Result<Outcome> {
    let target = a
        .target
        .as_deref()
        .ok_or_else(|| Usage("missing target: t5 | t8 | t9 | t12 | fig5 | fig6".into()))?;
    let size = size(a)?;
    let seed = a.seed.unwrap_or(0);
    let jobs = a.jobs.unwrap_or(1).max(1);
    if a.trials == Some(0) {
        return Err(Usage("--trials must be positive".into()).into());
    }
    let (table, manifest) = match target {
        "t5" => t5(size, seed, a.trials, jobs)?,
        "t8" => opt_table(size, seed, a.trials, jobs, false)?,
        "t9" => opt_table(size, seed, a.trials, jobs, true)?,
        "t12" => t12(size, seed, a.trials, jobs)?,
        "fig5" => fig5(size, seed, a.trials, jobs)?,
        "fig6" => fig6(size, seed, a.trials, jobs)?,
        other => return Err(Usage(format!("unknown target {other:?}")).into()),
    };
    let dir = out_dir(a.out.as_ref());
    write_report(&dir, target, &table, &manifest)?;
    print!("{}", table.to_text());
    Ok(Outcome::Done)
}

fn manifest<S: Serialize>(target: &str, specs: &[S], seeds: Vec<u64>) -> Result<Manifest> {
    Ok(Manifest::new(target, &specs, seeds)?)
}

/// Runs one spec per grid cell and lays the columns side by side.
fn grid(
    specs: &[ExperimentSpec],
    run: fn(&ExperimentSpec) -> assortnet::Result<ReportTable>,
) -> Result<ReportTable> {
    let mut out: Option<ReportTable> = None;
    for spec in specs {
        let t = run(spec)?;
        match &mut out {
            Some(o) => o.hstack(&t),
            None => out = Some(t),
        }
    }
    Ok(out.expect("grid is never empty"))
}

fn t5(
    size: Size,
    seed: u64,
    trials: Option<usize>,
    jobs: usize,
) -> Result<(ReportTable, Manifest)> {
    let (ns, ms, default_trials, est): (&[usize], &[usize], usize, Vec<Estimator>) = match size {
        Size::Smoke => (&[6], &[300], 1, vec![Estimator::MnlMle, Estimator::gasn(1)]),
        Size::Desk => (
            &[20],
            &[1_000, 5_000, 100_000],
            3,
            vec![
                Estimator::MnlMle,
                Estimator::MccmEm,
                Estimator::gasn(1),
                Estimator::rasn(1),
            ],
        ),
        Size::Full => (
            &[20, 50],
            &[1_000, 5_000, 100_000],
            10,
            vec![
                Estimator::MnlMle,
                Estimator::MccmEm,
                Estimator::gasn(1),
                Estimator::rasn(1),
            ],
        ),
    };
    let mut specs = Vec::new();
    for &n in ns {
        for &m in ms {
            for truth in ModelKind::ALL {
                specs.push(ExperimentSpec {
                    truth,
                    n,
                    sampler: SamplerKind::UniformSize,
                    m_train: m,
                    m_val: if size == Size::Smoke { 100 } else { 5_000 },
                    m_test: if size == Size::Smoke { 300 } else { 10_000 },
                    estimators: est.clone(),
                    trials: trials.unwrap_or(default_trials),
                    seed,
                    fit: FitConfig {
                        train: epochs(size, 100),
                        ..FitConfig::default()
                    },
                    jobs,
                    ..ExperimentSpec::default()
                });
            }
        }
    }
    let table = grid(&specs, run_prediction_experiment)?;
    let seeds = specs[0].trial_seeds();
    Ok((table, manifest("t5", &specs, seeds)?))
}

fn opt_table(
    size: Size,
    seed: u64,
    trials: Option<usize>,
    jobs: usize,
    constrained: bool,
) -> Result<(ReportTable, Manifest)> {
    let (ns, default_trials, draws, m): (&[usize], usize, usize, usize) = match size {
        Size::Smoke => (&[5], 1, 2, 300),
        Size::Desk => (&[10, 15], 5, 20, 10_000),
        Size::Full => (&[20], 5, 20, 100_000),
    };
    let est = match size {
        Size::Smoke => vec![Estimator::MnlMle, Estimator::gasn(1)],
        _ => vec![
            Estimator::MnlMle,
            Estimator::MccmEm,
            Estimator::gasn(1),
            Estimator::gasn(2),
        ],
    };
    let mut specs = Vec::new();
    for &n in ns {
        for truth in ModelKind::ALL {
            specs.push(ExperimentSpec {
                truth,
                n,
                m_train: m,
                m_val: if size == Size::Smoke { 100 } else { 5_000 },
                m_test: 1,
                estimators: est.clone(),
                trials: trials.unwrap_or(default_trials),
                seed,
                fit: FitConfig {
                    train: epochs(size, 100),
                    ..FitConfig::default()
                },
                opt: OptSettings {
                    revenue_draws: draws,
                    constrained,
                    time_limit_s: if size == Size::Smoke {
                        5.0
                    } else {
                        OptSettings::default().time_limit_s
                    },
                    ..OptSettings::default()
                },
                jobs,
                ..ExperimentSpec::default()
            });
        }
    }
    let table = grid(&specs, run_opt_experiment)?;
    let seeds = specs[0].trial_seeds();
    let name = if constrained { "t9" } else { "t8" };
    Ok((table, manifest(name, &specs, seeds)?))
}

fn t12(
    size: Size,
    seed: u64,
    trials: Option<usize>,
    jobs: usize,
) -> Result<(ReportTable, Manifest)> {
    let (n, m, m_eval) = match size {
        Size::Smoke => (7, 600, 300),
        Size::Desk => (31, 20_000, 5_000),
        Size::Full => (31, 100_000, 10_000),
    };
    let spec = ShiftSpec {
        n,
        m_train: m,
        m_val: m_eval,
        m_test: m_eval,
        trials: trials.unwrap_or(1),
        seed,
        fit: FitConfig {
            train: epochs(size, 100),
            ..FitConfig::default()
        },
        jobs,
        ..ShiftSpec::default()
    };
    let table = distribution_shift_experiment(&spec)?;
    Ok((table, manifest("t12", &[&spec], spec.trial_seeds())?))
}

fn fig5(
    size: Size,
    seed: u64,
    trials: Option<usize>,
    jobs: usize,
) -> Result<(ReportTable, Manifest)> {
    let spec = match size {
        Size::Smoke => EmSizeSpec {
            n: 6,
            m: 500,
            sizes: vec![2, 4],
            trials: trials.unwrap_or(1),
            seed,
            em: EmConfig {
                max_iters: 50,
                ..EmConfig::default()
            },
            jobs,
        },
        Size::Desk | Size::Full => EmSizeSpec {
            trials: trials.unwrap_or(if size == Size::Desk { 3 } else { 10 }),
            seed,
            jobs,
            ..EmSizeSpec::default()
        },
    };
    let table = em_assortment_size_experiment(&spec)?;
    Ok((table, manifest("fig5", &[&spec], spec.trial_seeds())?))
}

fn fig6(
    size: Size,
    seed: u64,
    trials: Option<usize>,
    jobs: usize,
) -> Result<(ReportTable, Manifest)> {
    let spec = match size {
        Size::Smoke => WarmSpec {
            old_products: 4,
            new_products: 2,
            m_pretrain: 500,
            m_retrain: 200,
            m_val: 200,
            hidden: 8,
            trials: trials.unwrap_or(1),
            seed,
            pretrain: epochs(size, 3),
            retrain: epochs(size, 3),
            jobs,
            ..WarmSpec::default()
        },
        Size::Desk | Size::Full => WarmSpec {
            trials: trials.unwrap_or(if size == Size::Desk { 2 } else { 10 }),
            seed,
            jobs,
            ..WarmSpec::default()
        },
    };
    let table = warm_start_experiment(&spec)?;
    Ok((table, manifest("fig6", &[&spec], spec.trial_seeds())?))
}
