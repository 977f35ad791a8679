//! Reference values of `log K_ν(x)` for accuracy audits.
//!
//! The integral representation is integrated over a window fitted to each
//! `(x, ν)`: the log-integrand maximum `t_max` is located by bracketing and
//! Newton's method, and the window `[t0, t1]` is where the integrand stays
//! within a factor `ε` of its peak. The trapezoid sum itself runs in
//! double-double arithmetic so the reference carries several bits more than
//! the binary64 results it is compared against.

mod dd;
pub mod heatmap;

use crate::error::{Error, Result};
use crate::special::{
    bessel_k_series, log_integrand, log_integrand_d1, log_integrand_d2, EvalPoint,
    QuadratureConfig, EPS_MACHINE,
};
use dd::{Dd, LN2};

pub use heatmap::{error_heatmap, AxisSpec, HeatmapMethod, RelErrorGrid};

/// Default bin count for reference evaluations.
pub const ORACLE_BINS: usize = 1 << 16;

/// Tolerance and iteration cap for [`find_zero`].
pub const ZERO_TOL: f64 = 1e-12;
pub const ZERO_MAX_ITER: usize = 200;

const RANGE_MIN_EXP: i32 = -40;
const RANGE_MAX_EXP: i32 = 64;

/// Below this argument the reference cross-checks against the series.
const SERIES_CHECK_X: f64 = 0.1;
/// RE above which the series is preferred in that regime.
const SERIES_OVERRIDE_RE: f64 = 4.0;

/// Bracket a sign change of a function that is nonnegative near zero and
/// eventually negative: returns `(2^{m-1}, 2^m)` for the smallest integer
/// `m` with `f(2^m) < 0`.
///
/// The search starts at `2^0` and moves down while `f` stays negative or up
/// until it turns negative. Probes are limited to `[2^-40, 2^64]`; at the
/// lower limit the returned bracket is the smallest probed one.
pub fn find_range<F: Fn(f64) -> f64>(f: F) -> Result<(f64, f64)> {
    let p = |m: i32| 2f64.powi(m);
    let mut m = 0;
    if f(p(m)) < 0.0 {
        while m > RANGE_MIN_EXP && f(p(m - 1)) < 0.0 {
            m -= 1;
        }
        return Ok((p(m - 1), p(m)));
    }
    while m < RANGE_MAX_EXP {
        m += 1;
        if f(p(m)) < 0.0 {
            return Ok((p(m - 1), p(m)));
        }
    }
    Err(Error::NoSignChange(format!("f(t) >= 0 for every probe t = 2^m up to 2^{RANGE_MAX_EXP}")))
}

/// Root of `f` in `[lo, hi]` by Newton's method safeguarded with bisection.
///
/// `f` returns the value and the derivative. Any Newton step that leaves the
/// current bracket, or a zero derivative, falls back to bisection. Stops when
/// the step or the bracket is within `tol`.
pub fn find_zero<F: Fn(f64) -> (f64, f64)>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::NoSignChange(format!(
            "f({lo}) = {flo:e} and f({hi}) = {fhi:e} have the same sign"
        )));
    }
    // Orient so that f(a) < 0 < f(b).
    let (mut a, mut b) = if flo < 0.0 { (lo, hi) } else { (hi, lo) };
    let mut t = 0.5 * (lo + hi);
    for _ in 0..ZERO_MAX_ITER {
        let (ft, dft) = f(t);
        if ft == 0.0 {
            return Ok(t);
        }
        if ft < 0.0 {
            a = t;
        } else {
            b = t;
        }
        let newton = t - ft / dft;
        let (min, max) = if a < b { (a, b) } else { (b, a) };
        let next = if dft != 0.0 && newton > min && newton < max {
            newton
        } else {
            0.5 * (a + b)
        };
        if (next - t).abs() <= tol || (b - a).abs() <= tol {
            return Ok(next);
        }
        t = next;
    }
    Err(Error::IterationCap(ZERO_MAX_ITER))
}

/// Integration window of the reference quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationWindow {
    pub t0: f64,
    pub t1: f64,
    pub t_max: f64,
}

/// Locate `t_max` and the `ε`-decay window `[t0, t1]` for `p`.
pub fn integration_window(p: &EvalPoint) -> Result<IntegrationWindow> {
    if !(p.x() > 0.0) {
        return Err(Error::domain(format!("x must be positive, got {}", p.x())));
    }
    let g = |t: f64| log_integrand(t, p);
    let nu2_le_x = p.nu() * p.nu() <= p.x();

    let t_max = if nu2_le_x {
        0.0
    } else {
        let (lo, hi) = find_range(|t| log_integrand_d1(t, p))?;
        find_zero(|t| (log_integrand_d1(t, p), log_integrand_d2(t, p)), lo, hi, ZERO_TOL)?
    };
    let level = g(t_max) + EPS_MACHINE.ln();
    let decay = |t: f64| (g(t) - level, log_integrand_d1(t, p));

    let t0 = if nu2_le_x || g(0.0) >= level {
        0.0
    } else {
        find_zero(decay, 0.0, t_max, ZERO_TOL)?
    };

    let (lo, hi) = find_range(|s| g(t_max + s) - level)?;
    let lo = if g(t_max + lo) < level { 0.0 } else { lo };
    let t1 = find_zero(decay, t_max + lo, t_max + hi, ZERO_TOL)?;

    Ok(IntegrationWindow { t0, t1, t_max })
}

/// Samples of `g(t_m)` in double-double on `t_m = t0 + m h`.
///
/// `e^{±t_m}` and `e^{-2ν t_m}` are carried along the grid by multiplying
/// with fixed step factors, so each sample needs at most one double-double
/// logarithm. The accumulated drift over the grid is a few thousand units of
/// 2^-104, far below binary64 resolution.
fn log_integrand_samples(p: &EvalPoint, t0: f64, h: f64, bins: usize) -> Vec<Dd> {
    let (nu, x) = (p.nu(), p.x());
    let t0_dd = Dd::from_f64(t0);
    let step_up = Dd::from_f64(h).exp();
    let step_down = Dd::from_f64(-h).exp();
    let step_decay = Dd::prod(-2.0 * nu, h).exp();
    let mut e_up = t0_dd.exp();
    let mut e_down = (-t0_dd).exp();
    let mut decay = Dd::prod(-2.0 * nu, t0).exp();
    let mut g = Vec::with_capacity(bins + 1);
    for m in 0..=bins {
        let u = (Dd::prod(m as f64, h) + t0_dd).mul_f64(nu);
        // log cosh(u) = u - ln 2 + ln(1 + e^{-2u}).
        let log_cosh = u - LN2 + decay.ln_1p();
        let cosh = (e_up + e_down).mul_f64(0.5);
        g.push(log_cosh - cosh.mul_f64(x));
        e_up = e_up * step_up;
        e_down = e_down * step_down;
        decay = decay * step_decay;
    }
    g
}

/// Trapezoid `log ∫_{t0}^{t1} exp(g)` with every sample, the peak shift and
/// the sum carried in double-double.
fn dd_trapezoid(p: &EvalPoint, w: &IntegrationWindow, bins: usize) -> f64 {
    let h = (w.t1 - w.t0) / bins as f64;
    let g = log_integrand_samples(p, w.t0, h, bins);
    let g_max = g.iter().copied().fold(g[0], |a, b| if b > a { b } else { a });

    let mut sum = Dd::ZERO;
    for (m, &gm) in g.iter().enumerate() {
        let d = gm - g_max;
        // Far from the peak a binary64 exponential is accurate enough
        // relative to the total.
        let e = if d.hi > -2.0 { d.exp() } else { Dd::from_f64(d.hi.exp() * (1.0 + d.lo)) };
        let e = if m == 0 || m == bins { e.mul_f64(0.5) } else { e };
        sum = sum + e;
    }
    (g_max + sum.mul_f64(h).ln()).to_f64()
}

/// Dynamic-window reference value of `log K_ν(x)` without the small-`x`
/// series cross-check.
pub fn dynamic_window_log_bessel_k(p: &EvalPoint, bins: usize) -> Result<f64> {
    if bins < 2 {
        return Err(Error::domain(format!("bins must be at least 2, got {bins}")));
    }
    let w = integration_window(p)?;
    Ok(dd_trapezoid(p, &w, bins))
}

/// Reference `log K_ν(x)`.
///
/// Below `x = 0.1` the result is cross-checked against the Temme series and
/// the series value is returned if the two disagree by more than RE 4.
pub fn oracle_log_bessel_k(p: &EvalPoint, bins: usize) -> Result<f64> {
    let integral = dynamic_window_log_bessel_k(p, bins)?;
    if p.x() < SERIES_CHECK_X {
        let series = bessel_k_series(p.x(), p.nu(), &QuadratureConfig::default())?.log_value;
        if relative_error(series, integral) > SERIES_OVERRIDE_RE {
            return Ok(series);
        }
    }
    Ok(integral)
}

/// `RE = log10(1 + |reference - output| / 2^-52)`, applied to log values.
pub fn relative_error(reference: f64, output: f64) -> f64 {
    ((reference - output).abs() / EPS_MACHINE).ln_1p() / std::f64::consts::LN_10
}
