//! Quick self-check battery behind the `verify` command.

use std::fmt;

use crate::error::Result;
use crate::fbm_kernel::{driver_from_skeleton, FbmParams, KernelEval, KernelTable, VolterraKernel};
use crate::oracles::{
    crr_american, crr_exhaustive, exit_mgf, kernel_reference, legendre_i_star, put_payoff, CrrSpec,
    FbmSampler,
};
use crate::rng::{path_stream, StreamKind};
use crate::skeleton::{exit_cdf, exit_time_quantile, sample_unit_exit_time, SkeletonConfig};
use crate::state_models::{CoefficientSpec, Functional, RewardFunctional};
use crate::stop_dp::{exact_tree_dp, MeanEstimate};

use super::plan::plan_steps;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Doubles `d_H` before the variance checks.
    pub corrupt_norm_const: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag}  {:width$}  {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

pub fn verify_suite(opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut checks = Vec::new();

    let mut worst = 0.0f64;
    for i in 1..200 {
        let u = i as f64 / 200.0;
        worst = worst.max((exit_cdf(exit_time_quantile(u)?) - u).abs());
    }
    checks.push(check("exit quantile inversion", worst < 1e-9, format!("max |F(F^-1(u)) - u| = {worst:.2e}")));

    let mut rng = path_stream(opts.seed, StreamKind::Scratch, 0);
    let mut mean = MeanEstimate::default();
    let mut mgf = MeanEstimate::default();
    for _ in 0..200_000 {
        let tau = sample_unit_exit_time(&mut rng)?;
        mean.push(tau);
        mgf.push((-tau).exp());
    }
    let target = exit_mgf(-1.0)?;
    checks.push(check(
        "exit time mean",
        (mean.mean() - 1.0).abs() < 4.0 * mean.se(),
        format!("{:.5} +- {:.5}", mean.mean(), mean.se()),
    ));
    checks.push(check(
        "exit time transform at -1",
        (mgf.mean() - target).abs() < 4.0 * mgf.se(),
        format!("{:.5} vs {target:.5}", mgf.mean()),
    ));

    for h in [0.6, 0.75] {
        let mut params = FbmParams::calibrated(h)?;
        if opts.corrupt_norm_const {
            params = params.with_norm_const(2.0 * params.norm_const())?;
        }
        let var = VolterraKernel::new(params)?.second_moment(1.0);
        checks.push(check(
            "kernel variance at t = 1",
            (var - 1.0).abs() < 1e-8,
            format!("H = {h}: {var:.10}"),
        ));
        let table = KernelTable::new(params)?;
        let cfg = SkeletonConfig::new(0.125, 1, 1.0, opts.seed)?;
        let mut acc = MeanEstimate::default();
        for i in 0..2000 {
            let s = cfg.sample(cfg.num_steps() + 64, i)?;
            let m = s.grid_query(1.0).count;
            let drv = driver_from_skeleton(&table, &s, m)?;
            acc.push(drv.grid_values[m].powi(2));
        }
        checks.push(check(
            "skeleton fBm variance near t = 1",
            (acc.mean() - 1.0).abs() < 0.1,
            format!("H = {h}: {:.4} +- {:.4}", acc.mean(), acc.se()),
        ));
        let mut worst = 0.0f64;
        for (t, s) in [(1.0, 1e-6), (1.0, 0.3), (0.5, 0.49)] {
            let r = kernel_reference(h, params.norm_const(), t, s)?;
            worst = worst.max(((table.k(t, s) - r) / r).abs());
        }
        checks.push(check(
            "kernel table vs reference quadrature",
            worst < 1e-8,
            format!("H = {h}: max rel diff {worst:.2e}"),
        ));
    }

    let spec = CoefficientSpec::gbm_log(0.06, 0.2);
    let eps = 1.0 / 10f64.sqrt();
    let put = RewardFunctional::new(Functional::Put { strike: 40.0, rate: 0.06 });
    let tree = exact_tree_dp(eps, 10, &spec, &put, 1.0, 36f64.ln())?;
    checks.push(check(
        "variational residuals, 10-stage put",
        tree.max_abs_residual() <= 1e-12 && tree.terminal_matches(),
        format!("max residual {:.2e}", tree.max_abs_residual()),
    ));
    let h = eps * eps;
    let crr = CrrSpec::new(
        10,
        (0.04 * h + 0.2 * eps).exp(),
        (0.04 * h - 0.2 * eps).exp(),
        0.5,
        (-0.06 * h).exp(),
        put_payoff(40.0),
    )?;
    let c = crr_american(&crr, 36.0);
    checks.push(check(
        "exact tree vs binomial pricer",
        (tree.value() - c).abs() <= 1e-12,
        format!("{:.12} vs {c:.12}", tree.value()),
    ));
    let small = CrrSpec { steps: 4, ..crr };
    let (a, b) = (crr_american(&small, 36.0), crr_exhaustive(&small, 36.0)?);
    checks.push(check(
        "binomial pricer vs policy enumeration",
        (a - b).abs() <= 1e-12,
        format!("{a:.12} vs {b:.12}"),
    ));

    let grid: Vec<f64> = (1..=128).map(|i| i as f64 / 128.0).collect();
    let res = FbmSampler::new(0.6, &grid)?.residual();
    checks.push(check("fBm covariance factor", res < 1e-8, format!("max |LL^T - C| = {res:.2e}")));

    let p1 = plan_steps(0.40, 0.15, 1.0, Some(0.6))?;
    let p2 = plan_steps(0.2, 0.15, 1.0, Some(0.6))?;
    checks.push(check(
        "step planning",
        p1.steps == 14 && p2.steps == 99,
        format!("k* = {} -> {}, k* = {} -> {}", p1.k_star, p1.steps, p2.k_star, p2.steps),
    ));
    let i_star = legendre_i_star(0.5)?;
    checks.push(check("rate function I*(1/2)", (i_star - 0.3265).abs() < 1e-3, format!("{i_star:.8}")));

    Ok(VerifyReport { checks })
}
