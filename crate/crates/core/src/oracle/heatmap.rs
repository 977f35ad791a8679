//! RE heatmaps over a rectangular `(ν, x)` grid.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use super::{dynamic_window_log_bessel_k, oracle_log_bessel_k, relative_error};
use crate::error::{Error, Result};
use crate::special::{bessel_k, fixed_window_log_bessel_k, EvalPoint, QuadratureConfig};

/// `n` linearly spaced points from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl AxisSpec {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min > max || n == 0 {
            return Err(Error::domain(format!("bad axis [{min}, {max}] with {n} points")));
        }
        if n == 1 && min != max {
            return Err(Error::domain("a single-point axis needs min == max"));
        }
        Ok(AxisSpec { min, max, n })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| if i == self.n - 1 { self.max } else { self.min + i as f64 * step })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapMethod {
    /// The hybrid series/quadrature algorithm.
    Refined,
    /// Fixed-window quadrature at every `x`, including below the threshold.
    PureIntegral,
    /// The reference at `cfg.bins` bins against itself at full resolution.
    OracleVsOracle,
}

impl FromStr for HeatmapMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "refined" => Ok(HeatmapMethod::Refined),
            "pure-integral" => Ok(HeatmapMethod::PureIntegral),
            "oracle" | "oracle-vs-oracle" => Ok(HeatmapMethod::OracleVsOracle),
            _ => Err(Error::Parse(format!("unknown heatmap method '{s}'"))),
        }
    }
}

/// Named regions: `(ν axis, x axis)`.
pub fn region_preset(name: &str) -> Result<(AxisSpec, AxisSpec)> {
    match name {
        "small" => {
            Ok((AxisSpec::new(0.001, 5.0, 100)?, AxisSpec::new(0.001, 0.1, 100)?))
        }
        "full" => {
            Ok((AxisSpec::new(0.001, 20.0, 200)?, AxisSpec::new(0.001, 140.0, 200)?))
        }
        _ => Err(Error::Parse(format!("unknown region '{name}'"))),
    }
}

/// One RE value per `(ν, x)` cell, row-major in ν then x. Cells whose
/// evaluation failed hold NaN and are left out of [`max_re`](Self::max_re).
#[derive(Debug, Clone, PartialEq)]
pub struct RelErrorGrid {
    pub nu: Vec<f64>,
    pub x: Vec<f64>,
    pub re: Vec<f64>,
}

impl RelErrorGrid {
    pub fn get(&self, i_nu: usize, i_x: usize) -> f64 {
        self.re[i_nu * self.x.len() + i_x]
    }

    pub fn max_re(&self) -> f64 {
        self.re.iter().copied().filter(|v| !v.is_nan()).fold(0.0, f64::max)
    }

    /// `(ν, x, RE)` of the worst valid cell.
    pub fn argmax(&self) -> Option<(f64, f64, f64)> {
        let (k, re) = self
            .re
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        Some((self.nu[k / self.x.len()], self.x[k % self.x.len()], re))
    }

    pub fn invalid_cells(&self) -> usize {
        self.re.iter().filter(|v| v.is_nan()).count()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["nu", "x", "re"])?;
        for (i, nu) in self.nu.iter().enumerate() {
            for (j, x) in self.x.iter().enumerate() {
                let re = self.re[i * self.x.len() + j];
                out.write_record([format!("{nu:.16e}"), format!("{x:.16e}"), format!("{re:.16e}")])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn cell(p: EvalPoint, method: HeatmapMethod, cfg: &QuadratureConfig, bins: usize) -> Result<f64> {
    let (reference, output) = match method {
        HeatmapMethod::Refined => {
            (oracle_log_bessel_k(&p, bins)?, bessel_k(p, cfg)?.log_value)
        }
        HeatmapMethod::PureIntegral => (
            oracle_log_bessel_k(&p, bins)?,
            fixed_window_log_bessel_k(p.x(), p.nu(), cfg)?,
        ),
        HeatmapMethod::OracleVsOracle => (
            dynamic_window_log_bessel_k(&p, bins)?,
            dynamic_window_log_bessel_k(&p, cfg.bins)?,
        ),
    };
    if !(reference.is_finite() && output.is_finite()) {
        return Err(Error::domain("non-finite value"));
    }
    Ok(relative_error(reference, output))
}

/// RE of `method` against the reference at `oracle_bins` bins over the grid.
/// Cells are evaluated in parallel on the current rayon pool.
pub fn error_heatmap(
    nu_axis: AxisSpec,
    x_axis: AxisSpec,
    method: HeatmapMethod,
    cfg: &QuadratureConfig,
    oracle_bins: usize,
) -> Result<RelErrorGrid> {
    cfg.validate()?;
    if x_axis.min <= 0.0 {
        return Err(Error::domain("x axis must be positive"));
    }
    let nu = nu_axis.points();
    let x = x_axis.points();
    let re = (0..nu.len() * x.len())
        .into_par_iter()
        .map(|k| {
            let p = EvalPoint::new(x[k % x.len()], nu[k / x.len()]);
            p.and_then(|p| cell(p, method, cfg, oracle_bins)).unwrap_or(f64::NAN)
        })
        .collect();
    Ok(RelErrorGrid { nu, x, re })
}
