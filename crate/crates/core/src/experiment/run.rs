//! Convergence studies across levels `eps_k`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use super::config::{ExperimentConfig, ModelKind, ReferenceKind};
use super::plan::regression_error_term;
use super::report::{RateReport, RateRow, CSV_HEADER};
use crate::error::{Error, Result};
use crate::fbm_kernel::{FbmParams, KernelTable};
use crate::oracles::{crr_american, legendre_i_star, put_payoff, CrrSpec};
use crate::rng::StreamKind;
use crate::skeleton::{build_skeleton, num_steps, SkeletonConfig};
use crate::state_models::{
    reward_path, simulate_path, CoefficientSpec, Functional, RewardFunctional, StateModel,
};
use crate::stop_dp::{accumulate_lower_bound, backward_induction, MeanEstimate, PathBatch};

const CHUNK: usize = 4096;

/// Everything needed to simulate paths at one level.
#[derive(Debug, Clone)]
pub struct LevelSetup {
    pub skeleton: SkeletonConfig,
    pub steps: usize,
    pub x0: f64,
    pub model: StateModel,
    pub reward: RewardFunctional,
    pub window: usize,
}

impl LevelSetup {
    pub fn new(
        eps: f64,
        horizon: f64,
        seed: u64,
        x0: f64,
        model: StateModel,
        reward: RewardFunctional,
        window: usize,
    ) -> Result<Self> {
        let skeleton = SkeletonConfig::new(eps, 1, horizon, seed)?;
        Ok(Self {
            steps: skeleton.num_steps(),
            skeleton,
            x0,
            model,
            reward,
            window,
        })
    }
}

type PathArrays = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<i8>);

fn simulate_one(setup: &LevelSetup, kind: StreamKind, index: u64) -> Result<PathArrays> {
    let e = setup.steps;
    let mut rng = setup.skeleton.stream(kind, index);
    let s = build_skeleton(&setup.skeleton, e, &mut rng)?;
    let x = simulate_path(&setup.model, &s, setup.x0, e)?;
    let z = reward_path(&setup.reward, &x, &s, setup.skeleton.horizon, e)?;
    let mut times = Vec::with_capacity(e + 1);
    times.push(0.0);
    times.extend_from_slice(s.times());
    let signs = s.moves().iter().map(|m| m.sign()).collect();
    Ok((times, x.values, z.values, s.deltas().to_vec(), signs))
}

/// Paths `start..start + count` of the given stream, simulated in parallel
/// and stored in index order.
pub fn simulate_batch(setup: &LevelSetup, kind: StreamKind, start: u64, count: usize) -> Result<PathBatch> {
    let mut batch = PathBatch::with_capacity(setup.steps, setup.window, count);
    let mut done = 0;
    while done < count {
        let n = CHUNK.min(count - done);
        let first = start + done as u64;
        let paths: Vec<PathArrays> = (0..n as u64)
            .into_par_iter()
            .map(|i| simulate_one(setup, kind, first + i))
            .collect::<Result<_>>()?;
        for (t, x, z, d, s) in &paths {
            batch.push(t, x, z, d, s)?;
        }
        done += n;
    }
    Ok(batch)
}

/// The model and reward described by a configuration.
pub fn build_model(cfg: &ExperimentConfig) -> Result<(StateModel, RewardFunctional)> {
    let drift = cfg.model.drift.build()?;
    let vol = cfg.model.vol.build()?;
    let model = match cfg.model.kind {
        ModelKind::BmSde => StateModel::Euler(CoefficientSpec::new(drift, vol)),
        ModelKind::FbmDrift if cfg.model.hurst == 0.5 => {
            StateModel::Euler(CoefficientSpec::new(drift, Functional::Constant(1.0)))
        }
        ModelKind::FbmDrift => {
            let params = FbmParams::calibrated(cfg.model.hurst)?;
            StateModel::Fbm {
                spec: CoefficientSpec::new(drift, vol),
                kernel: Arc::new(KernelTable::new(params)?),
            }
        }
    };
    Ok((model, RewardFunctional::new(cfg.payoff.build()?)))
}

/// Binomial price of the put when the configuration is a log-price
/// geometric Brownian motion under the pricing measure.
pub fn crr_reference(cfg: &ExperimentConfig) -> Result<f64> {
    let not_gbm = || {
        Error::Config(
            "the crr reference needs model bm_sde, constant drift r - vol^2/2, constant vol and a put payoff"
                .into(),
        )
    };
    if cfg.model.kind != ModelKind::BmSde {
        return Err(not_gbm());
    }
    let (Functional::Constant(mu), Functional::Constant(sigma), Functional::Put { strike, rate }) =
        (cfg.model.drift.build()?, cfg.model.vol.build()?, cfg.payoff.build()?)
    else {
        return Err(not_gbm());
    };
    if (mu - (rate - 0.5 * sigma * sigma)).abs() > 1e-12 || !(sigma > 0.0) {
        return Err(not_gbm());
    }
    let spec = CrrSpec::risk_neutral(rate, sigma, cfg.grid.horizon, cfg.reference.crr_steps, put_payoff(strike))?;
    Ok(crr_american(&spec, cfg.model.x0.exp()))
}

/// Result of one `run`.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RateReport,
    pub output_dir: PathBuf,
    pub wall_time: f64,
}

fn write_report(path: &Path, report: &RateReport) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    report.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

/// Runs every level of `cfg`, writing `report.csv`, `models_k<k>.json` and
/// `summary.json` into the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_inner(cfg))
}

fn run_inner(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let started = Instant::now();
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let (model, reward) = build_model(cfg).map_err(|e| e.in_stage("model setup"))?;
    let crr = match cfg.reference.kind {
        ReferenceKind::Crr => Some(crr_reference(cfg).map_err(|e| e.in_stage("crr reference"))?),
        _ => None,
    };
    let label = cfg.reference.kind.label().to_string();
    let csv_path = dir.join("report.csv");
    let mut csv = BufWriter::new(File::create(&csv_path)?);
    writeln!(csv, "{CSV_HEADER}")?;
    csv.flush()?;

    let mut report = RateReport {
        rows: Vec::new(),
        reference_label: label.clone(),
        slope: None,
    };
    for (k, eps) in cfg.levels() {
        let stage = |what: &str| format!("k = {k}, eps = {eps}: {what}");
        let setup = LevelSetup::new(
            eps,
            cfg.grid.horizon,
            cfg.seed,
            cfg.model.x0,
            model.clone(),
            reward.clone(),
            cfg.basis.window,
        )?;
        let batch = simulate_batch(&setup, StreamKind::Training, 0, cfg.simulation.train_paths)
            .map_err(|e| e.in_stage(stage("training paths")))?;
        let dp = backward_induction(&batch, &cfg.basis, cfg.simulation.itm_only)
            .map_err(|e| e.in_stage(stage("backward induction")))?;
        drop(batch);
        let models = serde_json::to_string_pretty(dp.models())?;
        std::fs::write(dir.join(format!("models_k{k}.json")), models)?;

        let mut lower = MeanEstimate::default();
        let mut start = 0usize;
        while start < cfg.simulation.fresh_paths {
            let n = (8 * CHUNK).min(cfg.simulation.fresh_paths - start);
            let fresh = simulate_batch(&setup, StreamKind::Fresh, start as u64, n)
                .map_err(|e| e.in_stage(stage("fresh paths")))?;
            accumulate_lower_bound(&fresh, &dp.policy, &mut lower);
            start += n;
        }
        let row = RateRow {
            k,
            eps,
            steps: num_steps(eps, cfg.grid.horizon, 1),
            value: dp.value,
            value_se: dp.value_se,
            lower_bound: lower.mean(),
            lower_se: lower.se(),
            reference: crr,
            abs_error: crr.map(|r| (dp.value - r).abs()),
            ridge_stages: dp.ridge_stages().len(),
        };
        writeln!(csv, "{}", row.csv_line(&label))?;
        csv.flush()?;
        report.rows.push(row);
    }
    drop(csv);
    match (cfg.reference.kind, crr) {
        (ReferenceKind::Crr, Some(r)) => report.apply_reference(r),
        (ReferenceKind::SelfRef, _) => {
            let finest = report.rows.last().expect("non-empty k_list").value;
            report.apply_reference(finest);
            write_report(&csv_path, &report)?;
        }
        _ => {}
    }
    let wall_time = started.elapsed().as_secs_f64();
    write_summary(cfg, &report, &dir, wall_time)?;
    Ok(RunOutcome {
        report,
        output_dir: dir,
        wall_time,
    })
}

fn write_summary(cfg: &ExperimentConfig, report: &RateReport, dir: &Path, wall_time: f64) -> Result<()> {
    let finest = report.rows.last().expect("non-empty k_list");
    let i_star = legendre_i_star(1.0 - cfg.report.delta)?;
    let levels: Vec<_> = report
        .rows
        .iter()
        .map(|r| {
            json!({
                "k": r.k,
                "eps": r.eps,
                "steps": r.steps,
                "value": r.value,
                "value_se": r.value_se,
                "lower_bound": r.lower_bound,
                "lower_se": r.lower_se,
                "abs_error": r.abs_error,
                "regression_error_term": regression_error_term(cfg.simulation.train_paths, r.steps),
                "large_deviation_term": (-i_star / (cfg.report.zeta * r.eps * r.eps)).exp(),
            })
        })
        .collect();
    let summary = json!({
        "value": finest.value,
        "se": finest.value_se,
        "lower_bound": finest.lower_bound,
        "lower_se": finest.lower_se,
        "reference_kind": report.reference_label,
        "reference": finest.reference,
        "slope": report.slope,
        "wall_time_s": wall_time,
        "train_paths": cfg.simulation.train_paths,
        "fresh_paths": cfg.simulation.fresh_paths,
        "vc_bound": cfg.basis.vc_bound(),
        "i_star": i_star,
        "levels": levels,
    });
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}
