//! Fixed-window trapezoid quadrature of `∫ exp(g(t)) dt` with
//! `g(t) = log cosh(νt) - x cosh(t)`.

use std::f64::consts::LN_2;

use super::{BesselResult, EvalPath, EvalPoint, QuadratureConfig};
use crate::error::{Error, Result};

/// Terms this far below the peak cannot change a double-precision sum whose
/// largest weight is at least 1/2, so their `exp` is skipped.
const NEGLIGIBLE: f64 = -60.0;

/// `log cosh(u)`, written as `|u| - log 2 + log1p(e^{-2|u|})` so it neither
/// overflows nor loses the small-`u` tail. Exactly even in `u`.
#[inline]
pub fn log_cosh(u: f64) -> f64 {
    let a = u.abs();
    if a < 0.5 {
        // cosh(a) - 1 = 2 sinh²(a/2) keeps full relative accuracy near 0.
        let s = (0.5 * a).sinh();
        (2.0 * s * s).ln_1p()
    } else {
        a - LN_2 + (-2.0 * a).exp().ln_1p()
    }
}

/// `g(t) = log cosh(νt) - x cosh(t)`.
#[inline]
pub fn log_integrand(t: f64, p: &EvalPoint) -> f64 {
    log_cosh(p.nu() * t) - p.x() * t.cosh()
}

/// `g'(t) = ν tanh(νt) - x sinh(t)`.
#[inline]
pub fn log_integrand_d1(t: f64, p: &EvalPoint) -> f64 {
    p.nu() * (p.nu() * t).tanh() - p.x() * t.sinh()
}

/// `g''(t) = ν² sech²(νt) - x cosh(t)`.
#[inline]
pub fn log_integrand_d2(t: f64, p: &EvalPoint) -> f64 {
    let sech = 1.0 / (p.nu() * t).cosh();
    p.nu() * p.nu() * sech * sech - p.x() * t.cosh()
}

/// Largest element, four independent lanes so the compares pipeline. Exact,
/// so the lane split cannot change the result.
fn max_of(g: &[f64]) -> f64 {
    let mut lanes = [f64::NEG_INFINITY; 4];
    let chunks = g.chunks_exact(4);
    let rest = chunks.remainder();
    for c in chunks {
        for k in 0..4 {
            lanes[k] = lanes[k].max(c[k]);
        }
    }
    let m = lanes[0].max(lanes[1]).max(lanes[2].max(lanes[3]));
    rest.iter().copied().fold(m, f64::max)
}

/// `log(h Σ_m c_m exp(g_m))` with trapezoid end weights `c_0 = c_b = 1/2`,
/// shifted by the largest sample.
fn trapezoid_log_sum(g: &[f64], h: f64) -> f64 {
    let g_max = max_of(g);
    let last = g.len() - 1;
    let mut sum = 0.0;
    for (m, &gm) in g.iter().enumerate() {
        let d = gm - g_max;
        if d < NEGLIGIBLE {
            continue;
        }
        let e = d.exp();
        sum += if m == 0 || m == last { 0.5 * e } else { e };
    }
    g_max + (h * sum).ln()
}

/// The order-dependent half of the fixed-window quadrature, tabulated once
/// per `(ν, window, bins)`: `log cosh(ν t_m)` and `cosh(t_m)` on the grid.
///
/// Evaluating many arguments at one order (a covariance tile, a heatmap row)
/// then costs one multiply-subtract and one `exp` per grid point. Results are
/// bitwise identical to [`fixed_window_log_bessel_k`].
#[derive(Debug, Clone)]
pub struct IntegralKernel {
    nu: f64,
    h: f64,
    log_cosh_nu_t: Vec<f64>,
    cosh_t: Vec<f64>,
}

impl IntegralKernel {
    pub fn new(nu: f64, cfg: &QuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        if !nu.is_finite() {
            return Err(Error::domain(format!("nu must be finite, got {nu}")));
        }
        let nu = nu.abs();
        let h = cfg.step();
        let (log_cosh_nu_t, cosh_t) = (0..=cfg.bins)
            .map(|m| {
                let t = grid_point(cfg, h, m);
                (log_cosh(nu * t), t.cosh())
            })
            .unzip();
        Ok(IntegralKernel { nu, h, log_cosh_nu_t, cosh_t })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `log K_ν(x)` over the kernel's window. `x` must be positive.
    ///
    /// Samples are recomputed in the second pass instead of stored; the
    /// expression is the same, so every bit matches the buffered form.
    pub fn log_k(&self, x: f64) -> f64 {
        let lc = &self.log_cosh_nu_t[..];
        let ch = &self.cosh_t[..lc.len()];
        let mut lanes = [f64::NEG_INFINITY; 4];
        let mut m = 0;
        while m + 4 <= lc.len() {
            for k in 0..4 {
                lanes[k] = lanes[k].max(lc[m + k] - x * ch[m + k]);
            }
            m += 4;
        }
        let mut g_max = lanes[0].max(lanes[1]).max(lanes[2].max(lanes[3]));
        for k in m..lc.len() {
            g_max = g_max.max(lc[k] - x * ch[k]);
        }
        let last = lc.len() - 1;
        let mut sum = 0.0;
        for m in 0..lc.len() {
            let d = (lc[m] - x * ch[m]) - g_max;
            if d < NEGLIGIBLE {
                continue;
            }
            let e = d.exp();
            sum += if m == 0 || m == last { 0.5 * e } else { e };
        }
        g_max + (self.h * sum).ln()
    }
}

#[inline]
fn grid_point(cfg: &QuadratureConfig, h: f64, m: usize) -> f64 {
    cfg.t_lower + m as f64 * h
}

/// Fixed-window trapezoid value of `log K_ν(x)` with no threshold check.
///
/// This is the plain integral method at every `x > 0`; below the series
/// threshold it degrades badly, which is what the error audits measure.
pub fn fixed_window_log_bessel_k(x: f64, nu: f64, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    let p = EvalPoint::new(x, nu)?;
    if p.x() <= 0.0 {
        return Err(Error::domain(format!("x must be positive, got {x}")));
    }
    let h = cfg.step();
    let g: Vec<f64> = (0..=cfg.bins)
        .map(|m| {
            let t = grid_point(cfg, h, m);
            log_cosh(p.nu() * t) - p.x() * t.cosh()
        })
        .collect();
    Ok(trapezoid_log_sum(&g, h))
}

/// `K_ν(x)` by fixed-window quadrature. Requires `x ≥ cfg.small_x_threshold`.
pub fn bessel_k_integral(p: EvalPoint, cfg: &QuadratureConfig) -> Result<BesselResult> {
    if p.x() < cfg.small_x_threshold {
        return Err(Error::domain(format!(
            "integral path requires x >= {}, got {}",
            cfg.small_x_threshold,
            p.x()
        )));
    }
    let log_value = fixed_window_log_bessel_k(p.x(), p.nu(), cfg)?;
    Ok(BesselResult::new(log_value, EvalPath::Integral, &p))
}
