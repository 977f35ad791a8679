//! Modified Bessel function of the second kind, `K_ν(x)`.
//!
//! Evaluation is hybrid: below `small_x_threshold` the Temme series supplies
//! `K_μ` and `K_{μ+1}` for `|μ| ≤ 1/2`, and forward recurrence climbs to the
//! requested order. At and above the threshold the integral representation
//!
//! ```text
//! K_ν(x) = ∫_0^∞ exp(-x cosh t) cosh(ν t) dt
//! ```
//!
//! is evaluated by a composite trapezoid rule over a fixed window
//! `[t_lower, t_upper]` with `bins` panels, accumulated in the log domain.
//! The fixed window makes the integral path branch-free and cheap to batch.

mod integral;
mod temme;

pub use integral::{
    bessel_k_integral, fixed_window_log_bessel_k, log_cosh, log_integrand, log_integrand_d1,
    log_integrand_d2, IntegralKernel,
};
pub use temme::{bessel_k_series, temme_pair};

use crate::error::{Error, Result};

/// Machine epsilon for binary64, `2^-52`.
pub const EPS_MACHINE: f64 = f64::EPSILON;

/// Upper edge of the `(x, ν)` region the default window was tuned on.
pub const VALIDATED_X_MAX: f64 = 140.0;
pub const VALIDATED_NU_MAX: f64 = 20.0;

/// One `(x, ν)` argument pair. The order is folded to `|ν|` on construction
/// since `K_{-ν} = K_ν`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    x: f64,
    nu: f64,
}

impl EvalPoint {
    pub fn new(x: f64, nu: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::domain(format!("x must be finite, got {x}")));
        }
        if x < 0.0 {
            return Err(Error::domain(format!("x must be positive, got {x}")));
        }
        if !nu.is_finite() {
            return Err(Error::domain(format!("nu must be finite, got {nu}")));
        }
        Ok(EvalPoint { x, nu: nu.abs() })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
}

/// Quadrature and series settings shared by both evaluation paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub t_lower: f64,
    pub t_upper: f64,
    pub bins: usize,
    /// Arguments strictly below this use the series path.
    pub small_x_threshold: f64,
    pub series_cap: usize,
    pub eps_machine: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            t_lower: 0.0,
            t_upper: 9.0,
            bins: 40,
            small_x_threshold: 0.1,
            series_cap: 15_000,
            eps_machine: EPS_MACHINE,
        }
    }
}

impl QuadratureConfig {
    pub fn with_bins(mut self, bins: usize) -> Self {
        self.bins = bins;
        self
    }

    pub fn with_upper(mut self, t_upper: f64) -> Self {
        self.t_upper = t_upper;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_lower.is_finite() && self.t_upper.is_finite()) || self.t_lower >= self.t_upper
        {
            return Err(Error::domain(format!(
                "integration window must satisfy t_lower < t_upper, got [{}, {}]",
                self.t_lower, self.t_upper
            )));
        }
        if self.t_lower < 0.0 {
            return Err(Error::domain("t_lower must be nonnegative"));
        }
        if self.bins < 2 {
            return Err(Error::domain(format!("bins must be at least 2, got {}", self.bins)));
        }
        if !(self.small_x_threshold > 0.0 && self.small_x_threshold.is_finite()) {
            return Err(Error::domain("small_x_threshold must be positive"));
        }
        if self.series_cap == 0 {
            return Err(Error::domain("series_cap must be at least 1"));
        }
        if !(self.eps_machine > 0.0 && self.eps_machine < 1.0) {
            return Err(Error::domain("eps_machine must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Panel width `h = (t_upper - t_lower) / bins`.
    pub fn step(&self) -> f64 {
        (self.t_upper - self.t_lower) / self.bins as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvalPath {
    Series,
    Integral,
}

impl EvalPath {
    pub fn as_str(&self) -> &'static str {
        match self {
            EvalPath::Series => "series",
            EvalPath::Integral => "integral",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselResult {
    pub log_value: f64,
    /// `exp(log_value)`; `+inf` when the value exceeds the binary64 range.
    pub value: f64,
    pub path: EvalPath,
    /// False when `x > 140` or `ν > 20`, outside the region the default
    /// window was validated on. The value is still computed.
    pub validated: bool,
}

impl BesselResult {
    pub(crate) fn new(log_value: f64, path: EvalPath, p: &EvalPoint) -> Self {
        BesselResult {
            log_value,
            value: log_value.exp(),
            path,
            validated: p.x <= VALIDATED_X_MAX && p.nu <= VALIDATED_NU_MAX,
        }
    }

    pub fn overflowed(&self) -> bool {
        self.value.is_infinite()
    }
}

/// `K_ν(x)` by the hybrid algorithm: series below `cfg.small_x_threshold`,
/// fixed-window quadrature at and above it.
pub fn bessel_k(p: EvalPoint, cfg: &QuadratureConfig) -> Result<BesselResult> {
    if p.x <= 0.0 {
        return Err(Error::domain(format!("x must be positive, got {}", p.x)));
    }
    if p.x < cfg.small_x_threshold {
        bessel_k_series(p.x, p.nu, cfg)
    } else {
        bessel_k_integral(p, cfg)
    }
}

/// Convenience wrapper returning `log K_ν(x)` only.
pub fn log_bessel_k(x: f64, nu: f64, cfg: &QuadratureConfig) -> Result<f64> {
    bessel_k(EvalPoint::new(x, nu)?, cfg).map(|r| r.log_value)
}
