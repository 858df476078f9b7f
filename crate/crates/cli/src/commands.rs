use std::path::Path;

use anyhow::{Context, Result};
use serde_json::json;

use assortnet::choice::UniformModel;
use assortnet::estimate::{fit_mccm_em, fit_mnl_mle, EmConfig, MleConfig};
use assortnet::eval::{
    ace_calibration, gen_capacity, gen_revenue, meta_learn, net_dims, Estimator, FitConfig,
    Manifest, MetaConfig, ACE_BINS,
};
use assortnet::io::{read_transactions, write_atomic, write_transactions};
use assortnet::models::{
    fixture_tables, gen_dataset, gen_instance, AnyModel, AssortmentSampler, SamplerKind,
    FIXTURE_SAMPLES,
};
use assortnet::neural::{train, NetworkParams, TrainConfig};
use assortnet::opt::{
    adxopt, brute_force_opt, build_mnl_milp, build_nn_mip, build_np_milp, export_lp,
    mccm_bellman_opt, revenue_ordered, solve_mip, MipInstance,
};
use assortnet::rng::{self, child_seed};
use assortnet::{
    ce_loss, CapacityConstraint, ChoiceDataset, ChoiceError, ChoiceModel, RevenueSpec, Universe,
};

use crate::config::out_dir;
use crate::{EvaluateArgs, FitArgs, GenerateArgs, MetaArgs, OptimizeArgs, Outcome, Usage};

pub fn need<T: Clone>(value: &Option<T>, flag: &str) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| Usage(format!("missing --{}", flag.replace('_', "-"))).into())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn load_data(path: &Path, no_purchase: bool) -> Result<ChoiceDataset> {
    let data = read_transactions(path, no_purchase)
        .with_context(|| format!("reading {}", path.display()))?;
    if data.is_empty() {
        return Err(Usage(format!("{} holds no transactions", path.display())).into());
    }
    Ok(data)
}

fn load_model(path: &Path) -> Result<AnyModel> {
    AnyModel::load(path).with_context(|| format!("loading model {}", path.display()))
}

fn parse_list(text: &str, flag: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Usage(format!("--{flag}: {s:?} is not a number")).into())
        })
        .collect()
}

pub fn generate(a: &GenerateArgs) -> Result<Outcome> {
    let seed = need(&a.seed, "seed")?;
    let dir = out_dir(a.out.as_ref());
    let (truth, train_set, test) = if let Some(name) = &a.fixture {
        let pick = |m: usize, s: u64| -> Result<_> {
            fixture_tables(m, s)?
                .into_iter()
                .find(|f| f.name == name)
                .ok_or_else(|| Usage(format!("unknown fixture {name:?} (iia|decoy|cycle)")).into())
        };
        let f = pick(a.m.unwrap_or(FIXTURE_SAMPLES), seed)?;
        let test = a
            .m_test
            .map(|m| pick(m, child_seed(seed, 3)).map(|t| t.data))
            .transpose()?;
        (AnyModel::Tabular(f.truth), f.data, test)
    } else {
        let kind = need(&a.truth, "truth")?;
        let n = need(&a.n, "n")?;
        let m = need(&a.m, "m")?;
        let truth = gen_instance(kind, n, child_seed(seed, 0))?;
        let kind_name = a.sampler.as_deref().unwrap_or("uniform-size");
        let sampler = AssortmentSampler::new(
            kind_name.parse::<SamplerKind>()?,
            Universe::with_no_purchase(n)?,
        )?;
        let train_set = gen_dataset(&truth, &sampler, m, child_seed(seed, 1))?;
        let test = a
            .m_test
            .map(|mt| gen_dataset(&truth, &sampler, mt, child_seed(seed, 3)))
            .transpose()?;
        (truth, train_set, test)
    };
    let data_path = dir.join("transactions.csv");
    write_transactions(&data_path, &train_set)?;
    truth.save(&dir.join("truth.json"))?;
    if let Some(t) = &test {
        write_transactions(&dir.join("test.csv"), t)?;
    }
    write_json(
        &dir.join("manifest.json"),
        &Manifest::new("generate", a, vec![seed])?,
    )?;
    println!(
        "wrote {} transactions to {}",
        train_set.len(),
        data_path.display()
    );
    Ok(Outcome::Done)
}

pub fn fit(a: &FitArgs) -> Result<Outcome> {
    let no_purchase = a.no_purchase.unwrap_or(true);
    let data = load_data(&need(&a.data, "data")?, no_purchase)?;
    let val = a
        .val
        .as_ref()
        .map(|p| load_data(p, no_purchase))
        .transpose()?;
    let est: Estimator = need(&a.estimator, "estimator")?.parse()?;
    let dir = out_dir(a.out.as_ref());
    let mut outcome = Outcome::Done;
    let (model, details) = match est {
        Estimator::MnlMle => {
            let mut cfg = MleConfig::default();
            cfg.max_iters = a.max_iters.unwrap_or(cfg.max_iters);
            cfg.tol = a.tol.unwrap_or(cfg.tol);
            let f = fit_mnl_mle(&data, &cfg)?;
            if !f.is_clean() {
                outcome = Outcome::NotConverged(format!(
                    "maximum likelihood stopped after {} iterations (gradient norm {:.2e}, diverging items {:?}, unidentified items {:?})",
                    f.iterations, f.grad_norm, f.diverged, f.unidentified
                ));
            }
            let details = json!({
                "iterations": f.iterations,
                "grad_norm": f.grad_norm,
                "converged": f.converged,
                "diverged": f.diverged,
                "unidentified": f.unidentified,
            });
            (AnyModel::Mnl(f.model), details)
        }
        Estimator::MccmEm => {
            let mut cfg = EmConfig {
                seed: need(&a.seed, "seed")?,
                ..EmConfig::default()
            };
            cfg.max_iters = a.max_iters.unwrap_or(cfg.max_iters);
            cfg.tol = a.tol.unwrap_or(cfg.tol);
            cfg.restarts = a.restarts.unwrap_or(cfg.restarts);
            let f = fit_mccm_em(&data, &cfg)?;
            if !f.converged {
                outcome =
                    Outcome::NotConverged(format!("EM hit the {} iteration cap", cfg.max_iters));
            }
            let log: String = std::iter::once("iteration,log_likelihood\n".to_string())
                .chain(
                    f.log_likelihood
                        .iter()
                        .enumerate()
                        .map(|(i, l)| format!("{},{l:?}\n", i + 1)),
                )
                .collect();
            write_atomic(&dir.join("fit_log.csv"), log.as_bytes())?;
            let details = json!({"iterations": f.iterations, "converged": f.converged});
            (AnyModel::Mccm(f.model), details)
        }
        Estimator::Net { arch, depth, width } => {
            let seed = need(&a.seed, "seed")?;
            let mut cfg = TrainConfig {
                seed: child_seed(seed, 1),
                ..TrainConfig::default()
            };
            cfg.epochs = a.epochs.unwrap_or(cfg.epochs);
            cfg.lr = a.lr.unwrap_or(cfg.lr);
            cfg.batch_size = a.batch_size.unwrap_or(cfg.batch_size);
            let init = NetworkParams::glorot(
                arch,
                &net_dims(arch, data.universe.n(), depth, width),
                seed,
            )?;
            let (net, log) = train(init, &data, val.as_ref(), &cfg)?;
            write_atomic(&dir.join("fit_log.csv"), log.to_csv().as_bytes())?;
            (
                AnyModel::Network(net),
                json!({"best_epoch": log.best_epoch, "epochs": cfg.epochs}),
            )
        }
    };
    model.save(&dir.join("model.json"))?;
    let train_ce = ce_loss(&model, &data)?;
    let val_ce = val.as_ref().map(|v| ce_loss(&model, v)).transpose()?;
    let summary = json!({
        "estimator": est.to_string(),
        "train_ce": train_ce,
        "val_ce": val_ce,
        "details": details,
        "config": a,
    });
    write_json(&dir.join("fit.json"), &summary)?;
    println!(
        "{est}: train CE {train_ce:.4}{}",
        val_ce
            .map(|v| format!(", val CE {v:.4}"))
            .unwrap_or_default()
    );
    Ok(outcome)
}

fn build_mip(
    model: &AnyModel,
    rev: &RevenueSpec,
    cap: Option<&CapacityConstraint>,
) -> Result<MipInstance> {
    Ok(match model {
        AnyModel::Mnl(m) => build_mnl_milp(m, rev, cap)?,
        AnyModel::Np(m) => build_np_milp(m, rev, cap)?,
        AnyModel::Network(net) => build_nn_mip(net, rev, cap)?,
        other => {
            return Err(ChoiceError::Unsupported(format!(
                "no MIP formulation for {} models; use brute, ro or adxopt",
                other.kind()
            ))
            .into())
        }
    })
}

pub fn optimize(a: &OptimizeArgs) -> Result<Outcome> {
    let model = load_model(&need(&a.model, "model")?)?;
    let universe = Universe::with_no_purchase(model.n())?;
    let rev = match (&a.revenue, a.revenue_seed) {
        (Some(list), _) => RevenueSpec::new(&universe, parse_list(list, "revenue")?)?,
        (None, Some(s)) => gen_revenue(&universe, &mut rng::seeded(s))?,
        (None, None) => return Err(Usage("give --revenue or --revenue-seed".into()).into()),
    };
    let cap = match (&a.capacity, a.capacity_seed) {
        (Some(list), _) => Some(CapacityConstraint::new(
            &universe,
            parse_list(list, "capacity")?,
            need(&a.budget, "budget")?,
        )?),
        (None, Some(s)) => Some(gen_capacity(&universe, &mut rng::seeded(s))?),
        (None, None) => None,
    };
    if let Some(path) = &a.export_lp {
        export_lp(&build_mip(&model, &rev, cap.as_ref())?, a.level, path)?;
        println!("wrote {}", path.display());
        return Ok(Outcome::Done);
    }
    let method = need(&a.method, "method")?;
    let cap = cap.as_ref();
    let res = match method.as_str() {
        "brute" => brute_force_opt(&model, &rev, cap)?,
        "ro" => revenue_ordered(&model, &rev, cap)?,
        "adxopt" => adxopt(&model, &rev, cap, a.removal_limit.unwrap_or(5))?,
        "bellman" => match &model {
            AnyModel::Mccm(m) => mccm_bellman_opt(m, &rev, cap)?,
            other => {
                return Err(ChoiceError::Unsupported(format!(
                    "bellman needs a mccm model, got {}",
                    other.kind()
                ))
                .into())
            }
        },
        "mip" => solve_mip(&build_mip(&model, &rev, cap)?, a.time_limit)?,
        other => {
            return Err(Usage(format!(
                "unknown method {other:?} (brute|ro|adxopt|mip|bellman)"
            ))
            .into())
        }
    };
    let path = a
        .out
        .clone()
        .unwrap_or_else(|| out_dir(None).join("result.json"));
    let text = res.to_json()?;
    write_atomic(&path, format!("{text}\n").as_bytes())?;
    println!("{text}");
    if method == "mip" && !res.exact {
        return Ok(Outcome::TimedOut(format!(
            "time limit reached; incumbent written to {}",
            path.display()
        )));
    }
    Ok(Outcome::Done)
}

pub fn evaluate(a: &EvaluateArgs) -> Result<Outcome> {
    let model = load_model(&need(&a.model, "model")?)?;
    let data = load_data(&need(&a.data, "data")?, a.no_purchase.unwrap_or(true))?;
    let bins = a.bins.unwrap_or(ACE_BINS);
    let report = json!({
        "model": model.kind(),
        "samples": data.len(),
        "ce": ce_loss(&model, &data)?,
        "uniform_ce": ce_loss(&UniformModel { n: data.universe.n() }, &data)?,
        "ace": ace_calibration(&model, &data, bins)?,
        "bins": bins,
    });
    if let Some(path) = &a.out {
        write_json(path, &report)?;
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(Outcome::Done)
}

pub fn meta(a: &MetaArgs) -> Result<Outcome> {
    let data = load_data(&need(&a.data, "data")?, true)?;
    let val = load_data(&need(&a.val, "val")?, true)?;
    let candidates: Vec<Estimator> = a
        .candidates
        .as_deref()
        .unwrap_or("gasn-1,mnl-mle,mccm-em")
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<assortnet::Result<_>>()?;
    let mut train_cfg = TrainConfig::default();
    train_cfg.epochs = a.epochs.unwrap_or(train_cfg.epochs);
    train_cfg.lr = a.lr.unwrap_or(train_cfg.lr);
    let cfg = MetaConfig {
        m_prime: a.m_prime.unwrap_or(100_000),
        fit: FitConfig {
            train: train_cfg.clone(),
            ..FitConfig::default()
        },
        finetune: train_cfg,
        seed: need(&a.seed, "seed")?,
    };
    let out = meta_learn(&data, &val, &candidates, &cfg)?;
    let dir = out_dir(a.out.as_ref());
    out.model.save(&dir.join("model.json"))?;
    let summary = json!({
        "candidate_val": out.candidate_val,
        "k_star": out.k_star,
        "retrained_val": out.retrained_val,
        "synthetic_samples": out.synthetic_samples,
        "final_val": out.final_val,
        "source": out.source,
        "config": a,
    });
    write_json(&dir.join("meta.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(Outcome::Done)
}
