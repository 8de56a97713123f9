//! The Volterra kernel of fractional Brownian motion for `1/2 < H < 1` and
//! the skeleton driver obtained by integrating the piecewise-constant walk
//! against `rho_H = d/ds K_H`.
//!
//! With `b = H - 1/2`,
//!
//! ```text
//! K_H(t, s) = d_H s^{-b} int_s^t u^b (u - s)^{b-1} du
//!           = d_H s^{-b} (t - s)^{2b} G(s / (t - s)),
//! G(r)      = int_0^1 (r + x)^b x^{b-1} dx.
//! ```
//!
//! `G` is evaluated with a Gauss–Jacobi rule carrying the weight `x^{b-1}`
//! on `[0, min(r, 1)]`, followed by dyadic Gauss–Legendre panels that keep
//! the near-singularity at `x = -r` one panel length away.

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::skeleton::{Skeleton, SkeletonId};

pub const DEFAULT_QUAD_ORDER: usize = 32;

// Dyadic depth of the left end of the variance integral; the end panel
// carries the s^{-2b} weight exactly and the rest of its contribution is
// O(2^-40).
const VARIANCE_DEPTH: i32 = 40;

/// Hurst index, quadrature order and normalising constant `d_H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbmParams {
    hurst: f64,
    quad_order: usize,
    norm_const: f64,
}

impl FbmParams {
    /// Parameters with `d_H = 1`; see [`FbmParams::calibrated`].
    pub fn new(hurst: f64, quad_order: usize) -> Result<Self> {
        if !(hurst > 0.5 && hurst < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Hurst index must lie in (1/2, 1), got {hurst}"
            )));
        }
        if quad_order < 4 {
            return Err(Error::InvalidParameter(format!(
                "quadrature order must be at least 4, got {quad_order}"
            )));
        }
        Ok(Self {
            hurst,
            quad_order,
            norm_const: 1.0,
        })
    }

    /// Parameters whose `d_H` makes `Var B_H(1) = 1`.
    pub fn calibrated(hurst: f64) -> Result<Self> {
        Self::calibrated_with_order(hurst, DEFAULT_QUAD_ORDER)
    }

    pub fn calibrated_with_order(hurst: f64, quad_order: usize) -> Result<Self> {
        let p = Self::new(hurst, quad_order)?;
        let d = calibrate_norm_const(&p)?;
        p.with_norm_const(d)
    }

    pub fn with_norm_const(mut self, norm_const: f64) -> Result<Self> {
        if !(norm_const > 0.0 && norm_const.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "normalising constant must be positive, got {norm_const}"
            )));
        }
        self.norm_const = norm_const;
        Ok(self)
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    /// `H - 1/2`.
    pub fn exponent(&self) -> f64 {
        self.hurst - 0.5
    }
}

/// Anything that can evaluate `K_H(t, s)` for `0 < s <= t`.
pub trait KernelEval {
    fn params(&self) -> &FbmParams;
    fn k(&self, t: f64, s: f64) -> f64;
}

/// Direct quadrature evaluation of the kernel.
#[derive(Debug, Clone)]
pub struct VolterraKernel {
    params: FbmParams,
    inner: GaussRule,
    legendre: GaussRule,
    right_end: GaussRule,
    left_end: GaussRule,
}

impl VolterraKernel {
    pub fn new(params: FbmParams) -> Result<Self> {
        let b = params.exponent();
        let q = params.quad_order;
        Ok(Self {
            params,
            inner: GaussRule::jacobi(q, 0.0, b - 1.0)?,
            legendre: GaussRule::legendre(q)?,
            right_end: GaussRule::jacobi(q, 2.0 * b, 0.0)?,
            left_end: GaussRule::jacobi(q, 0.0, -2.0 * b)?,
        })
    }

    pub fn params(&self) -> &FbmParams {
        &self.params
    }

    /// `G(r) = int_0^1 (r + x)^b x^{b-1} dx` for `r > 0`.
    pub fn shape(&self, r: f64) -> f64 {
        let b = self.params.exponent();
        let first = r.min(1.0);
        let half = 0.5 * first;
        let mut total = half.powf(b) * self.inner.apply(|xi| (r + half * (1.0 + xi)).powf(b));
        let mut a = first;
        while a < 1.0 {
            let c = (2.0 * a).min(1.0);
            let mid = 0.5 * (a + c);
            let rad = 0.5 * (c - a);
            total += rad
                * self.legendre.apply(|xi| {
                    let x = mid + rad * xi;
                    x.powf(b - 1.0) * (r + x).powf(b)
                });
            a = c;
        }
        total
    }

    /// `K_H(t, s)`; domain error unless `0 < s <= t`.
    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        if !(s > 0.0 && s <= t && t.is_finite()) {
            return Err(Error::Domain(format!(
                "kernel needs 0 < s <= t, got t = {t}, s = {s}"
            )));
        }
        Ok(self.eval_unchecked(t, s))
    }

    fn eval_unchecked(&self, t: f64, s: f64) -> f64 {
        if s >= t {
            return 0.0;
        }
        let b = self.params.exponent();
        let gap = t - s;
        self.params.norm_const * s.powf(-b) * gap.powf(2.0 * b) * self.shape(s / gap)
    }

    /// `int_0^t K_H(t, s)^2 ds`, the variance of `B_H(t)`.
    pub fn second_moment(&self, t: f64) -> f64 {
        let b = self.params.exponent();
        let k2 = |sigma: f64| {
            let v = self.eval_unchecked(t, t * sigma);
            v * v
        };
        // [1/2, 1] with the (1 - sigma)^{2b} endpoint behaviour as weight
        let right = 0.25f64.powf(2.0 * b + 1.0)
            * self.right_end.apply(|xi| {
                let sigma = 0.75 + 0.25 * xi;
                k2(sigma) / (1.0 - sigma).powf(2.0 * b)
            });
        let mut middle = 0.0;
        for i in 1..VARIANCE_DEPTH {
            let hi = 0.5f64.powi(i);
            let lo = 0.5 * hi;
            let mid = 0.5 * (lo + hi);
            let rad = 0.5 * (hi - lo);
            middle += rad * self.legendre.apply(|xi| k2(mid + rad * xi));
        }
        // [0, h] with the sigma^{-2b} endpoint behaviour as weight
        let h = 0.5f64.powi(VARIANCE_DEPTH);
        let left = (0.5 * h).powf(1.0 - 2.0 * b)
            * self.left_end.apply(|xi| {
                let sigma = 0.5 * h * (1.0 + xi);
                k2(sigma) * sigma.powf(2.0 * b)
            });
        t * (right + middle + left)
    }
}

impl KernelEval for VolterraKernel {
    fn params(&self) -> &FbmParams {
        &self.params
    }

    fn k(&self, t: f64, s: f64) -> f64 {
        debug_assert!(s > 0.0 && s <= t);
        self.eval_unchecked(t, s)
    }
}

/// `K_H(t, s)` by direct quadrature.
pub fn kernel_k(params: &FbmParams, t: f64, s: f64) -> Result<f64> {
    VolterraKernel::new(*params)?.eval(t, s)
}

/// The `d_H` for which `int_0^1 K_H(1, s)^2 ds = 1`, i.e. `Var B_H(1) = 1`.
pub fn calibrate_norm_const(params: &FbmParams) -> Result<f64> {
    let unit = params.with_norm_const(1.0)?;
    let moment = VolterraKernel::new(unit)?.second_moment(1.0);
    if !(moment > 0.0 && moment.is_finite()) {
        return Err(Error::Quadrature(format!(
            "variance integral evaluated to {moment} for H = {}",
            params.hurst
        )));
    }
    Ok(1.0 / moment.sqrt())
}

/// Tabulated kernel for bulk evaluation.
///
/// Stores `G(r) (1 + r)^{-b}` on a uniform grid in `ln r` and interpolates
/// with local cubics; outside the tabulated range it defers to the direct
/// quadrature. With `r = s / (t - s)` this gives
/// `K_H(t, s) = d_H exp(b (ln t + ln(t - s) - ln s)) * table(ln r)`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    direct: VolterraKernel,
    x_min: f64,
    step: f64,
    values: Vec<f64>,
}

impl KernelTable {
    const X_MIN: f64 = -40.0;
    const X_MAX: f64 = 30.0;
    const STEP: f64 = 0.01;

    pub fn new(params: FbmParams) -> Result<Self> {
        let direct = VolterraKernel::new(params)?;
        let b = params.exponent();
        let n = ((Self::X_MAX - Self::X_MIN) / Self::STEP).round() as usize + 1;
        let values = (0..n)
            .map(|i| {
                let r = (Self::X_MIN + i as f64 * Self::STEP).exp();
                direct.shape(r) * (1.0 + r).powf(-b)
            })
            .collect();
        Ok(Self {
            direct,
            x_min: Self::X_MIN,
            step: Self::STEP,
            values,
        })
    }

    pub fn direct(&self) -> &VolterraKernel {
        &self.direct
    }

    fn interpolate(&self, x: f64) -> Option<f64> {
        let pos = (x - self.x_min) / self.step;
        let i = pos.floor() as isize;
        if i < 1 || i as usize + 2 >= self.values.len() {
            return None;
        }
        let i = i as usize;
        let u = pos - i as f64;
        let (f0, f1, f2, f3) = (
            self.values[i - 1],
            self.values[i],
            self.values[i + 1],
            self.values[i + 2],
        );
        // cubic Lagrange through nodes at -1, 0, 1, 2
        let um = u + 1.0;
        let u1 = u - 1.0;
        let u2 = u - 2.0;
        Some(
            -f0 * u * u1 * u2 / 6.0 + f1 * um * u1 * u2 / 2.0 - f2 * um * u * u2 / 2.0
                + f3 * um * u * u1 / 6.0,
        )
    }
}

impl KernelEval for KernelTable {
    fn params(&self) -> &FbmParams {
        &self.direct.params
    }

    fn k(&self, t: f64, s: f64) -> f64 {
        debug_assert!(s > 0.0 && s <= t);
        if s >= t {
            return 0.0;
        }
        let ls = s.ln();
        let ld = (t - s).ln();
        match self.interpolate(ls - ld) {
            Some(g) => {
                let p = &self.direct.params;
                p.norm_const * (p.exponent() * (t.ln() + ld - ls)).exp() * g
            }
            None => self.direct.eval_unchecked(t, s),
        }
    }
}

/// Values of the skeleton fBm driver at the grid times `T_0, ..., T_upto`.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmDriver {
    pub grid_values: Vec<f64>,
    pub skeleton_id: SkeletonId,
}

impl FbmDriver {
    /// Increment `B(T_n) - B(T_{n-1})` for `n >= 1`.
    pub fn increment(&self, n: usize) -> f64 {
        self.grid_values[n] - self.grid_values[n - 1]
    }

    /// `B^k_H(bar t_k)` for an arbitrary time `t`.
    pub fn value_at(&self, skeleton: &Skeleton, t: f64) -> f64 {
        let n = skeleton.grid_query(t).count.min(self.grid_values.len() - 1);
        self.grid_values[n]
    }
}

/// `int_0^{T_m} rho_H(T_m, s) A(s) ds` for the one-dimensional walk.
///
/// On `[T_n, T_{n+1})` the walk is constant, so the integral of `rho_H`
/// over it is `K(T_m, T_{n+1}) - K(T_m, T_n)`. Summing by parts with
/// `K(T_m, T_m) = 0` and `A = 0` on `[0, T_1)` leaves
/// `-sum_{n < m} Delta A(T_n) K(T_m, T_n)`, which never touches `s = 0`.
pub fn driver_value_at<K: KernelEval + ?Sized>(kernel: &K, skeleton: &Skeleton, m: usize) -> f64 {
    if m <= 1 {
        return 0.0;
    }
    let t_bar = skeleton.time_at(m);
    let eps = skeleton.eps();
    let mut acc = 0.0;
    for (&tn, mv) in skeleton.times()[..m - 1].iter().zip(skeleton.moves()) {
        acc += mv.sign() as f64 * kernel.k(t_bar, tn);
    }
    -eps * acc
}

/// The driver at every grid time up to event `upto`.
pub fn driver_from_skeleton<K: KernelEval + ?Sized>(
    kernel: &K,
    skeleton: &Skeleton,
    upto: usize,
) -> Result<FbmDriver> {
    if skeleton.dim() != 1 {
        return Err(Error::InvalidParameter(format!(
            "the fBm driver needs a one-dimensional skeleton, got dimension {}",
            skeleton.dim()
        )));
    }
    if upto > skeleton.len() {
        return Err(Error::InvalidParameter(format!(
            "requested {upto} grid times from a skeleton with {} events",
            skeleton.len()
        )));
    }
    let mut grid_values = Vec::with_capacity(upto + 1);
    grid_values.push(0.0);
    for m in 1..=upto {
        let v = driver_value_at(kernel, skeleton, m);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                stage: m,
                what: "fBm driver value",
            });
        }
        grid_values.push(v);
    }
    Ok(FbmDriver {
        grid_values,
        skeleton_id: skeleton.id(),
    })
}
