//! Experiment pipelines and diagnostics.
//!
//! Every pipeline derives all of its randomness from one experiment seed:
//! trial `t` uses `child_seed(seed, t)` and splits that further into
//! streams for the truth model, the train/validation/test sets, revenue
//! draws and each fitter.

mod em_size;
mod generators;
mod meta;
mod metrics;
mod optimization;
mod prediction;
mod report;
mod shift;
mod spec;
mod sweep;

pub use em_size::{em_assortment_size_experiment, mccm_param_error, EmSizeSpec};
pub use generators::{budget_bracket, gen_capacity, gen_revenue, COEF_RANGE};
pub use meta::{meta_learn, MetaConfig, MetaOutcome};
pub use metrics::{ace_calibration, assortment_effect_delta, DeltaHistogram, ACE_BINS};
pub use optimization::{run_opt_experiment, Pipeline};
pub use prediction::{run_prediction_experiment, ORACLE_ROW, UNIFORM_ROW};
pub use report::{write_report, Cell, Manifest, ReportTable};
pub use shift::{distribution_shift_experiment, shift_samplers, ShiftSpec, MIX_ROW};
pub use spec::{net_dims, Estimator, ExperimentSpec, FitConfig, OptSettings};
pub use sweep::{depth_width_sweep, shrink_mccm, warm_start_experiment, WarmSpec};

/// Runs `f(0..count)` on up to `jobs` threads; results come back in index
/// order, so the outcome does not depend on `jobs`.
pub(crate) fn par_map<T: Send>(count: usize, jobs: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let jobs = jobs.clamp(1, count.max(1));
    if jobs == 1 {
        return (0..count).map(f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut out: Vec<(usize, T)> = std::thread::scope(|s| {
        let workers: Vec<_> = (0..jobs)
            .map(|_| {
                s.spawn(|| {
                    let mut mine = Vec::new();
                    loop {
                        let k = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        if k >= count {
                            break mine;
                        }
                        mine.push((k, f(k)));
                    }
                })
            })
            .collect();
        workers
            .into_iter()
            .flat_map(|w| w.join().expect("worker panicked"))
            .collect()
    });
    out.sort_by_key(|(k, _)| *k);
    out.into_iter().map(|(_, v)| v).collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn par_map_keeps_order() {
        let a = super::par_map(17, 1, |k| k * k);
        let b = super::par_map(17, 4, |k| k * k);
        assert_eq!(a, b);
        assert_eq!(b[16], 256);
    }
}
