//! State and reward paths on the skeleton grid.
//!
//! Path functionals only ever see a [`PathSoFar`], a prefix of the
//! piecewise-constant path, so they are non-anticipative by construction.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fbm_kernel::{driver_from_skeleton, FbmDriver, KernelTable};
use crate::skeleton::{Skeleton, SkeletonId};

/// The piecewise-constant path `u -> values[i]` for `times[i] <= u <
/// times[i + 1]`, observed up to its last grid time, with running
/// aggregates.
#[derive(Debug, Clone, Copy)]
pub struct PathSoFar<'a> {
    times: &'a [f64],
    values: &'a [f64],
    max: f64,
    min: f64,
    integral: f64,
}

impl<'a> PathSoFar<'a> {
    /// Computes the aggregates from scratch; `times[0]` is the start time.
    pub fn new(times: &'a [f64], values: &'a [f64]) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "path needs matching non-empty times and values, got {} and {}",
                times.len(),
                values.len()
            )));
        }
        let mut acc = Running::start(values[0]);
        for n in 1..times.len() {
            acc.push(times[n] - times[n - 1], values[n - 1], values[n]);
        }
        Ok(acc.view(times, values))
    }

    /// Index of the current grid time.
    pub fn stage(&self) -> usize {
        self.times.len() - 1
    }

    pub fn now(&self) -> f64 {
        self.times[self.stage()]
    }

    /// `omega(now)`.
    pub fn current(&self) -> f64 {
        self.values[self.stage()]
    }

    /// `omega(u)` for `u <= now`; earlier than the start returns the start value.
    pub fn at(&self, u: f64) -> f64 {
        let i = self.times.partition_point(|&t| t <= u);
        self.values[i.saturating_sub(1)]
    }

    pub fn times(&self) -> &'a [f64] {
        self.times
    }

    pub fn values(&self) -> &'a [f64] {
        self.values
    }

    pub fn running_max(&self) -> f64 {
        self.max
    }

    pub fn running_min(&self) -> f64 {
        self.min
    }

    /// `int_{times[0]}^{now} omega(u) du`.
    pub fn integral(&self) -> f64 {
        self.integral
    }
}

#[derive(Debug, Clone, Copy)]
struct Running {
    max: f64,
    min: f64,
    integral: f64,
}

impl Running {
    fn start(x0: f64) -> Self {
        Self {
            max: x0,
            min: x0,
            integral: 0.0,
        }
    }

    fn push(&mut self, dt: f64, previous: f64, next: f64) {
        self.integral += previous * dt;
        self.max = self.max.max(next);
        self.min = self.min.min(next);
    }

    fn view<'a>(&self, times: &'a [f64], values: &'a [f64]) -> PathSoFar<'a> {
        PathSoFar {
            times,
            values,
            max: self.max,
            min: self.min,
            integral: self.integral,
        }
    }
}

/// User-supplied functional `(t, path) -> real`.
#[derive(Clone)]
pub struct CustomFn(pub Arc<dyn Fn(f64, &PathSoFar) -> f64 + Send + Sync>);

impl CustomFn {
    pub fn new(f: impl Fn(f64, &PathSoFar) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomFn(..)")
    }
}

impl PartialEq for CustomFn {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

/// Non-anticipative functional of `(t, omega)`, with `x = omega(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Functional {
    Zero,
    Constant(f64),
    /// `x`
    Identity,
    /// `a + b x`
    Linear { a: f64, b: f64 },
    /// `x` clipped to `[lo, hi]`
    Clip { lo: f64, hi: f64 },
    /// `(1/t) int_0^t omega`, or `x` at `t = 0`
    RunningMean,
    /// `max_{u <= t} omega(u)`
    RunningMax,
    /// `e^{-rt} (K - e^x)^+`, a put on the log-price
    Put { strike: f64, rate: f64 },
    /// `e^{-rt} (K - x)^+`
    PutLinear { strike: f64, rate: f64 },
    /// `e^{-rt} (e^x - K)^+`
    Call { strike: f64, rate: f64 },
    /// `e^{-rt} (max_{u <= t} e^{omega(u)} - e^x)`
    LookbackPut { rate: f64 },
    Custom(CustomFn),
}

impl Functional {
    /// Registry lookup by name with a numeric parameter list.
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        let want = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "functional `{name}` takes {n} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        let f = match name {
            "zero" => {
                want(0)?;
                Functional::Zero
            }
            "constant" => {
                want(1)?;
                Functional::Constant(params[0])
            }
            "identity" => {
                want(0)?;
                Functional::Identity
            }
            "linear" | "linear_drift" => {
                want(2)?;
                Functional::Linear {
                    a: params[0],
                    b: params[1],
                }
            }
            "clip" => {
                want(2)?;
                if params[0] > params[1] {
                    return Err(Error::Config(format!(
                        "clip needs lo <= hi, got {params:?}"
                    )));
                }
                Functional::Clip {
                    lo: params[0],
                    hi: params[1],
                }
            }
            "running_mean" => {
                want(0)?;
                Functional::RunningMean
            }
            "running_max" | "lookback_max" => {
                want(0)?;
                Functional::RunningMax
            }
            "put" | "put_linear" | "call" => {
                want(2)?;
                let (strike, rate) = (params[0], params[1]);
                match name {
                    "put" => Functional::Put { strike, rate },
                    "put_linear" => Functional::PutLinear { strike, rate },
                    _ => Functional::Call { strike, rate },
                }
            }
            "lookback_put" => {
                want(1)?;
                Functional::LookbackPut { rate: params[0] }
            }
            _ => return Err(Error::Config(format!("unknown functional `{name}`"))),
        };
        Ok(f)
    }

    /// Registry name; `None` for custom closures.
    pub fn name(&self) -> Option<&'static str> {
        Some(match self {
            Functional::Zero => "zero",
            Functional::Constant(_) => "constant",
            Functional::Identity => "identity",
            Functional::Linear { .. } => "linear",
            Functional::Clip { .. } => "clip",
            Functional::RunningMean => "running_mean",
            Functional::RunningMax => "running_max",
            Functional::Put { .. } => "put",
            Functional::PutLinear { .. } => "put_linear",
            Functional::Call { .. } => "call",
            Functional::LookbackPut { .. } => "lookback_put",
            Functional::Custom(_) => return None,
        })
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            Functional::Constant(c) => vec![c],
            Functional::Linear { a, b } => vec![a, b],
            Functional::Clip { lo, hi } => vec![lo, hi],
            Functional::Put { strike, rate }
            | Functional::PutLinear { strike, rate }
            | Functional::Call { strike, rate } => vec![strike, rate],
            Functional::LookbackPut { rate } => vec![rate],
            _ => Vec::new(),
        }
    }

    pub fn eval(&self, t: f64, path: &PathSoFar) -> f64 {
        let x = path.current();
        match self {
            Functional::Zero => 0.0,
            Functional::Constant(c) => *c,
            Functional::Identity => x,
            Functional::Linear { a, b } => a + b * x,
            Functional::Clip { lo, hi } => x.clamp(*lo, *hi),
            Functional::RunningMean => {
                let elapsed = path.now() - path.times()[0];
                if elapsed > 0.0 {
                    path.integral() / elapsed
                } else {
                    x
                }
            }
            Functional::RunningMax => path.running_max(),
            Functional::Put { strike, rate } => (-rate * t).exp() * (strike - x.exp()).max(0.0),
            Functional::PutLinear { strike, rate } => (-rate * t).exp() * (strike - x).max(0.0),
            Functional::Call { strike, rate } => (-rate * t).exp() * (x.exp() - strike).max(0.0),
            Functional::LookbackPut { rate } => {
                (-rate * t).exp() * (path.running_max().exp() - x.exp())
            }
            Functional::Custom(f) => (f.0)(t, path),
        }
    }
}

/// Drift and volatility of the path-dependent SDE.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSpec {
    pub drift: Functional,
    pub vol: Functional,
    /// Lipschitz constant of the coefficients; informational.
    pub lip_const: f64,
    /// Hölder exponent in time; informational.
    pub holder_theta: f64,
}

impl CoefficientSpec {
    pub fn new(drift: Functional, vol: Functional) -> Self {
        Self {
            drift,
            vol,
            lip_const: 1.0,
            holder_theta: 1.0,
        }
    }

    /// Log-price of geometric Brownian motion under the pricing measure.
    pub fn gbm_log(rate: f64, sigma: f64) -> Self {
        Self::new(
            Functional::Constant(rate - 0.5 * sigma * sigma),
            Functional::Constant(sigma),
        )
    }
}

/// Reward functional `Z(t) = F(t, X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardFunctional {
    pub payoff: Functional,
    /// Lipschitz norm of `F`; informational.
    pub lip_norm: f64,
}

impl RewardFunctional {
    pub fn new(payoff: Functional) -> Self {
        Self {
            payoff,
            lip_norm: 1.0,
        }
    }
}

/// `X^k(T_n)` for `n = 0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePath {
    pub values: Vec<f64>,
    pub x0: f64,
    pub skeleton_id: SkeletonId,
}

/// Rewards at the grid times, frozen after the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardPath {
    pub values: Vec<f64>,
    /// First `n` with `T_n > horizon`.
    pub frozen_from: Option<usize>,
}

/// `[T_0, T_1, ..., T_steps]` with `T_0 = 0`.
pub fn grid_times(s: &Skeleton, steps: usize) -> Vec<f64> {
    let mut times = Vec::with_capacity(steps + 1);
    times.push(0.0);
    times.extend_from_slice(&s.times()[..steps]);
    times
}

fn check_steps(s: &Skeleton, steps: usize) -> Result<()> {
    if steps > s.len() {
        return Err(Error::InvalidParameter(format!(
            "{steps} steps requested from a skeleton with {} events",
            s.len()
        )));
    }
    Ok(())
}

fn finite(v: f64, stage: usize, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { stage, what })
    }
}

/// Euler scheme on the random grid with left-endpoint coefficients, driven
/// by the first coordinate of the walk.
pub fn euler_path(spec: &CoefficientSpec, s: &Skeleton, x0: f64, steps: usize) -> Result<StatePath> {
    check_steps(s, steps)?;
    if s.dim() != 1 {
        return Err(Error::InvalidParameter(format!(
            "the state equation is scalar, got a {}-dimensional skeleton",
            s.dim()
        )));
    }
    let times = grid_times(s, steps);
    let mut values = Vec::with_capacity(steps + 1);
    values.push(x0);
    let mut acc = Running::start(x0);
    for n in 1..=steps {
        let t = times[n - 1];
        let (drift, vol) = {
            let view = acc.view(&times[..n], &values[..n]);
            (spec.drift.eval(t, &view), spec.vol.eval(t, &view))
        };
        let drift = finite(drift, n, "drift")?;
        let vol = finite(vol, n, "volatility")?;
        let x = values[n - 1] + drift * (times[n] - t) + vol * s.increment(0, n);
        let x = finite(x, n, "state")?;
        acc.push(times[n] - t, values[n - 1], x);
        values.push(x);
    }
    Ok(StatePath {
        values,
        x0,
        skeleton_id: s.id(),
    })
}

/// The same recursion with the fBm driver increment in place of the
/// volatility term; `spec.vol` is not used.
pub fn drifted_fbm_path(
    spec: &CoefficientSpec,
    drv: &FbmDriver,
    s: &Skeleton,
    x0: f64,
    steps: usize,
) -> Result<StatePath> {
    check_steps(s, steps)?;
    if drv.skeleton_id != s.id() {
        return Err(Error::InvalidParameter(
            "driver was built from a different skeleton".into(),
        ));
    }
    if drv.grid_values.len() < steps + 1 {
        return Err(Error::InvalidParameter(format!(
            "driver covers {} steps, {steps} requested",
            drv.grid_values.len() - 1
        )));
    }
    let times = grid_times(s, steps);
    let mut values = Vec::with_capacity(steps + 1);
    values.push(x0);
    let mut acc = Running::start(x0);
    for n in 1..=steps {
        let t = times[n - 1];
        let drift = {
            let view = acc.view(&times[..n], &values[..n]);
            spec.drift.eval(t, &view)
        };
        let drift = finite(drift, n, "drift")?;
        let x = values[n - 1] + drift * (times[n] - t) + drv.increment(n);
        let x = finite(x, n, "state")?;
        acc.push(times[n] - t, values[n - 1], x);
        values.push(x);
    }
    Ok(StatePath {
        values,
        x0,
        skeleton_id: s.id(),
    })
}

/// `Z^k(T_n ^ T)` for `n = 0..=steps`.
pub fn reward_path(
    f: &RewardFunctional,
    x: &StatePath,
    s: &Skeleton,
    horizon: f64,
    steps: usize,
) -> Result<RewardPath> {
    check_steps(s, steps)?;
    if x.skeleton_id != s.id() || x.values.len() < steps + 1 {
        return Err(Error::InvalidParameter(
            "state path does not belong to this skeleton prefix".into(),
        ));
    }
    let times = grid_times(s, steps);
    reward_on_grid(f, &times, &x.values[..=steps], horizon)
}

/// [`reward_path`] on explicit grid times.
pub fn reward_on_grid(
    f: &RewardFunctional,
    times: &[f64],
    states: &[f64],
    horizon: f64,
) -> Result<RewardPath> {
    let mut values = Vec::with_capacity(times.len());
    let mut frozen_from = None;
    let mut acc = Running::start(states[0]);
    for n in 0..times.len() {
        if n > 0 {
            acc.push(times[n] - times[n - 1], states[n - 1], states[n]);
        }
        if times[n] > horizon {
            frozen_from = Some(n);
            let last = values[n - 1];
            values.resize(times.len(), last);
            break;
        }
        let view = acc.view(&times[..=n], &states[..=n]);
        values.push(finite(f.payoff.eval(times[n], &view), n, "reward")?);
    }
    Ok(RewardPath {
        values,
        frozen_from,
    })
}

/// State dynamics driven by the skeleton.
#[derive(Debug, Clone)]
pub enum StateModel {
    /// `dX = alpha dt + sigma dW`.
    Euler(CoefficientSpec),
    /// `dX = alpha dt + dB_H` with the skeleton fBm driver.
    Fbm {
        spec: CoefficientSpec,
        kernel: Arc<KernelTable>,
    },
}

/// State path of `model` over the first `steps` events of `s`.
pub fn simulate_path(model: &StateModel, s: &Skeleton, x0: f64, steps: usize) -> Result<StatePath> {
    match model {
        StateModel::Euler(spec) => euler_path(spec, s, x0, steps),
        StateModel::Fbm { spec, kernel } => {
            let drv = driver_from_skeleton(kernel.as_ref(), s, steps)?;
            drifted_fbm_path(spec, &drv, s, x0, steps)
        }
    }
}
