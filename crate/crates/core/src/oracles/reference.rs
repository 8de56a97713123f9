//! Kernel references by adaptive Gauss–Kronrod integration of the defining
//! integrals, after substitutions that remove the endpoint singularities.

use crate::error::{Error, Result};
use crate::skeleton::Skeleton;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive 7/15-point Gauss–Kronrod on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_gk(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut pending = vec![(a, b, tol, 0u32)];
    let mut total = 0.0;
    while let Some((lo, hi, t, depth)) = pending.pop() {
        let (v, err) = gk15(&mut f, lo, hi);
        if err <= t || hi - lo < 1e-15 * (1.0 + lo.abs()) {
            total += v;
        } else if depth >= 60 {
            return Err(Error::Quadrature(format!(
                "adaptive quadrature did not converge on [{lo}, {hi}]"
            )));
        } else {
            let mid = 0.5 * (lo + hi);
            pending.push((lo, mid, 0.5 * t, depth + 1));
            pending.push((mid, hi, 0.5 * t, depth + 1));
        }
    }
    Ok(total)
}

/// `K_H(t, s) = d s^{-b} int_s^t u^b (u - s)^{b-1} du` with `b = H - 1/2`,
/// using `v = (u - s)^b`, under which the integral becomes
/// `(1/b) int_0^{(t-s)^b} (s + v^{1/b})^b dv`.
pub fn kernel_reference(hurst: f64, norm_const: f64, t: f64, s: f64) -> Result<f64> {
    let b = hurst - 0.5;
    if !(s > 0.0 && s <= t) {
        return Err(Error::Domain(format!("need 0 < s <= t, got t = {t}, s = {s}")));
    }
    let top = (t - s).powf(b);
    let inner = adaptive_gk(|v| (s + v.powf(1.0 / b)).powf(b), 0.0, top, 1e-14 * (1.0 + top))?;
    Ok(norm_const * s.powf(-b) * inner / b)
}

/// `int_a^c rho_H(t, s) ds` for `0 < a < c <= t`, from
/// `rho_H(t, s) = -d [t^b s^{-b} (t - s)^{b-1} + b s^{-b-1} int_0^{t-s} w^b (s + w)^{b-1} dw]`.
pub fn rho_integral(hurst: f64, norm_const: f64, t: f64, a: f64, c: f64) -> Result<f64> {
    let b = hurst - 0.5;
    if !(a > 0.0 && a < c && c <= t) {
        return Err(Error::Domain(format!("need 0 < a < c <= t, got a = {a}, c = {c}, t = {t}")));
    }
    // first term with v = (t - s)^b: (t - s)^{b-1} ds = -dv / b
    let (v_lo, v_hi) = ((t - c).powf(b), (t - a).powf(b));
    let first = t.powf(b) / b
        * adaptive_gk(|v| (t - v.powf(1.0 / b)).powf(-b), v_lo, v_hi, 1e-13)?;
    let mut failure = None;
    let second = adaptive_gk(
        |s| {
            // w = y^{1/b} makes w^b dw = (1/b) y^{1/b} dy smooth near w = 0
            let top = (t - s).powf(b);
            let inner = adaptive_gk(
                |y| y.powf(1.0 / b) * (s + y.powf(1.0 / b)).powf(b - 1.0) / b,
                0.0,
                top,
                1e-14,
            );
            match inner {
                Ok(v) => b * s.powf(-b - 1.0) * v,
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        },
        a,
        c,
        1e-12,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(-norm_const * (first + second))
}

/// The skeleton driver at `T_m` as `sum_n A(T_n) int_{T_n}^{T_{n+1}} rho_H(T_m, s) ds`.
pub fn driver_reference(hurst: f64, norm_const: f64, skeleton: &Skeleton, m: usize) -> Result<f64> {
    let t_bar = skeleton.time_at(m);
    let mut total = 0.0;
    for n in 1..m {
        let level = skeleton.walk_value(0, n);
        if level != 0.0 {
            let piece = rho_integral(hurst, norm_const, t_bar, skeleton.time_at(n), skeleton.time_at(n + 1))?;
            total += level * piece;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_integrates_smooth_functions() {
        let v = adaptive_gk(|x| x.exp(), 0.0, 1.0, 1e-14).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-14);
        let v = adaptive_gk(|x| x.sqrt(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn rho_integrates_to_kernel_differences() {
        let (h, t) = (0.7, 1.0);
        for (a, c) in [(0.1, 0.3), (0.5, 1.0), (1e-3, 0.9)] {
            let r = rho_integral(h, 1.0, t, a, c).unwrap();
            let k = kernel_reference(h, 1.0, t, c).unwrap() - kernel_reference(h, 1.0, t, a).unwrap();
            assert!((r - k).abs() < 1e-9, "[{a}, {c}]: {r} vs {k}");
        }
    }
}
