//! Python bindings for the skeleton stopping library.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use skelstop::experiment::{self, ExperimentConfig, VerifyOptions};
use skelstop::fbm_kernel::{self, driver_from_skeleton, FbmParams, KernelTable};
use skelstop::oracles::{self, CrrSpec};
use skelstop::rng::{path_stream, StreamKind};
use skelstop::skeleton::{self as sk, SkeletonConfig};
use skelstop::state_models::{CoefficientSpec, Functional, RewardFunctional};
use skelstop::stop_dp::exact_tree_dp;
use skelstop::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::Domain(_) | Error::Config(_) | Error::TreeTooLarge { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// A sampled random-walk skeleton.
#[pyclass(name = "Skeleton", module = "skelstop_py", frozen)]
struct PySkeleton {
    inner: sk::Skeleton,
}

#[pymethods]
impl PySkeleton {
    /// Samples `steps` events of stream `index` under `seed`.
    #[staticmethod]
    #[pyo3(signature = (eps, steps, seed, index = 0, dim = 1))]
    fn sample(eps: f64, steps: usize, seed: u64, index: u64, dim: usize) -> PyResult<Self> {
        let cfg = SkeletonConfig::new(eps, dim, 1.0, seed).map_err(to_py)?;
        let inner = cfg.sample(steps, index).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.inner.eps()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times().to_vec()
    }

    #[getter]
    fn deltas(&self) -> Vec<f64> {
        self.inner.deltas().to_vec()
    }

    #[getter]
    fn signs(&self) -> Vec<i8> {
        self.inner.moves().iter().map(|m| m.sign()).collect()
    }

    #[getter]
    fn coords(&self) -> Vec<usize> {
        self.inner.moves().iter().map(|m| m.coord()).collect()
    }

    /// Walk values `A(T_0), ..., A(T_n)` of one coordinate.
    #[pyo3(signature = (coord = 0))]
    fn walk(&self, coord: usize) -> PyResult<Vec<f64>> {
        if coord >= self.inner.dim() {
            return Err(PyValueError::new_err(format!("coordinate {coord} out of range")));
        }
        Ok(self.inner.walk(coord))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Skeleton(eps={}, dim={}, events={})",
            self.inner.eps(),
            self.inner.dim(),
            self.inner.len()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (eps, horizon = 1.0, dim = 1))]
fn num_steps(eps: f64, horizon: f64, dim: usize) -> usize {
    sk::num_steps(eps, horizon, dim)
}

/// Returns `(k_star, eps, steps)`.
#[pyfunction]
#[pyo3(signature = (e1, lam, horizon = 1.0, hurst = None))]
fn plan_steps(e1: f64, lam: f64, horizon: f64, hurst: Option<f64>) -> PyResult<(f64, f64, usize)> {
    let p = experiment::plan_steps(e1, lam, horizon, hurst).map_err(to_py)?;
    Ok((p.k_star, p.eps, p.steps))
}

/// `n` exit times of Brownian motion from `(-1, 1)`.
#[pyfunction]
#[pyo3(signature = (n, seed = 0))]
fn sample_exit_times(py: Python<'_>, n: usize, seed: u64) -> PyResult<Vec<f64>> {
    py.detach(|| {
        let mut rng = path_stream(seed, StreamKind::Scratch, 0);
        (0..n).map(|_| sk::sample_unit_exit_time(&mut rng)).collect::<Result<_, _>>()
    })
    .map_err(to_py)
}

#[pyfunction]
fn exit_mgf(lam: f64) -> PyResult<f64> {
    oracles::exit_mgf(lam).map_err(to_py)
}

#[pyfunction]
fn legendre_i_star(x: f64) -> PyResult<f64> {
    oracles::legendre_i_star(x).map_err(to_py)
}

#[pyfunction]
fn calibrate_norm_const(hurst: f64) -> PyResult<f64> {
    let p = FbmParams::new(hurst, fbm_kernel::DEFAULT_QUAD_ORDER).map_err(to_py)?;
    fbm_kernel::calibrate_norm_const(&p).map_err(to_py)
}

/// `K_H(t, s)`, calibrated so that `Var B_H(1) = 1` unless `norm_const` is given.
#[pyfunction]
#[pyo3(signature = (hurst, t, s, norm_const = None))]
fn kernel_k(hurst: f64, t: f64, s: f64, norm_const: Option<f64>) -> PyResult<f64> {
    let params = match norm_const {
        Some(d) => FbmParams::new(hurst, fbm_kernel::DEFAULT_QUAD_ORDER).and_then(|p| p.with_norm_const(d)),
        None => FbmParams::calibrated(hurst),
    }
    .map_err(to_py)?;
    fbm_kernel::kernel_k(&params, t, s).map_err(to_py)
}

/// Skeleton fBm driver at `T_0, ..., T_n`.
#[pyfunction]
fn fbm_driver(py: Python<'_>, skeleton: &PySkeleton, hurst: f64) -> PyResult<Vec<f64>> {
    let s = &skeleton.inner;
    py.detach(|| {
        let table = KernelTable::new(FbmParams::calibrated(hurst)?)?;
        driver_from_skeleton(&table, s, s.len()).map(|d| d.grid_values)
    })
    .map_err(to_py)
}

/// Exact deterministic-clock value of the discounted put on the log-price
/// of geometric Brownian motion; returns `(value, max_abs_residual)`.
#[pyfunction]
#[pyo3(signature = (eps, stages, s0, strike, rate, sigma, horizon = 1.0))]
fn exact_tree_put(
    eps: f64,
    stages: usize,
    s0: f64,
    strike: f64,
    rate: f64,
    sigma: f64,
    horizon: f64,
) -> PyResult<(f64, f64)> {
    let spec = CoefficientSpec::gbm_log(rate, sigma);
    let reward = RewardFunctional::new(Functional::Put { strike, rate });
    let r = exact_tree_dp(eps, stages, &spec, &reward, horizon, s0.ln()).map_err(to_py)?;
    Ok((r.value(), r.max_abs_residual()))
}

#[pyfunction]
fn crr_american_put(s0: f64, strike: f64, rate: f64, sigma: f64, maturity: f64, steps: usize) -> PyResult<f64> {
    let spec = CrrSpec::risk_neutral(rate, sigma, maturity, steps, oracles::put_payoff(strike)).map_err(to_py)?;
    Ok(oracles::crr_american(&spec, s0))
}

#[pyfunction]
fn default_config() -> &'static str {
    experiment::DEFAULTS
}

/// Runs a study from TOML text; returns one dict per level.
#[pyfunction]
#[pyo3(signature = (config, output_dir = None))]
fn run_experiment<'py>(
    py: Python<'py>,
    config: &str,
    output_dir: Option<std::path::PathBuf>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut cfg = ExperimentConfig::from_toml(config).map_err(to_py)?;
    if let Some(d) = output_dir {
        cfg.output_dir = d;
    }
    let out = py.detach(|| experiment::run_experiment(&cfg)).map_err(to_py)?;
    out.report
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("k", r.k)?;
            d.set_item("eps", r.eps)?;
            d.set_item("steps", r.steps)?;
            d.set_item("value", r.value)?;
            d.set_item("value_se", r.value_se)?;
            d.set_item("lower_bound", r.lower_bound)?;
            d.set_item("lower_se", r.lower_se)?;
            d.set_item("reference", r.reference)?;
            d.set_item("reference_kind", &out.report.reference_label)?;
            d.set_item("abs_error", r.abs_error)?;
            Ok(d)
        })
        .collect()
}

/// Self-check battery as `(name, passed, detail)` triples.
#[pyfunction]
#[pyo3(signature = (seed = 20240607, corrupt_norm_const = false))]
fn verify(py: Python<'_>, seed: u64, corrupt_norm_const: bool) -> PyResult<Vec<(String, bool, String)>> {
    let report = py
        .detach(|| experiment::verify_suite(&VerifyOptions { seed, corrupt_norm_const }))
        .map_err(to_py)?;
    Ok(report
        .checks
        .into_iter()
        .map(|c| (c.name.to_string(), c.passed, c.detail))
        .collect())
}

#[pymodule]
fn skelstop_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySkeleton>()?;
    m.add_function(wrap_pyfunction!(num_steps, m)?)?;
    m.add_function(wrap_pyfunction!(plan_steps, m)?)?;
    m.add_function(wrap_pyfunction!(sample_exit_times, m)?)?;
    m.add_function(wrap_pyfunction!(exit_mgf, m)?)?;
    m.add_function(wrap_pyfunction!(legendre_i_star, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_norm_const, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_k, m)?)?;
    m.add_function(wrap_pyfunction!(fbm_driver, m)?)?;
    m.add_function(wrap_pyfunction!(exact_tree_put, m)?)?;
    m.add_function(wrap_pyfunction!(crr_american_put, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
