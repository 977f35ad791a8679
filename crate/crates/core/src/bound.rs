//! Empirical search for the fixed upper integration bound.
//!
//! For each candidate `L` the fixed-window quadrature over `[0, L]` is
//! compared with the reference on a grid, and the smallest `L` whose worst
//! absolute error in `log K` meets the tolerance wins.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::oracle::oracle_log_bessel_k;
use crate::special::{EvalPoint, IntegralKernel, QuadratureConfig};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_AUDIT_BINS: usize = 1 << 12;
pub const DEFAULT_CANDIDATES: [f64; 8] = [5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0];
/// Reference resolution for the audit; already correctly rounded here.
pub const AUDIT_ORACLE_BINS: usize = 1024;

/// Audit region and its sampling.
///
/// `x` takes `nx` linear points over `[x_min, x_max]`, with points below the
/// series threshold raised to it. `ν` takes `n_nu` points `nu_min + k Δ`,
/// `k = 1..=n_nu`, so `nu_min` itself is excluded. `extra_log_x` log-spaced
/// points over `[0.1, 1]` (clipped to the region) densify the slow-decay
/// corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nu_min: f64,
    pub nu_max: f64,
    pub nx: usize,
    pub n_nu: usize,
    pub extra_log_x: usize,
    pub small_x_threshold: f64,
}

impl Default for RegionSpec {
    fn default() -> Self {
        RegionSpec {
            x_min: 0.0,
            x_max: 140.0,
            nu_min: 0.0,
            nu_max: 20.0,
            nx: 141,
            n_nu: 40,
            extra_log_x: 50,
            small_x_threshold: 0.1,
        }
    }
}

impl RegionSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.nu_min, self.nu_max].iter().all(|v| v.is_finite());
        if !finite || !(self.x_max > self.x_min && self.x_min >= 0.0) {
            return Err(Error::domain("region needs 0 <= x_min < x_max"));
        }
        if !(self.nu_max > self.nu_min && self.nu_min >= 0.0) {
            return Err(Error::domain("region needs 0 <= nu_min < nu_max"));
        }
        if self.nx < 2 || self.n_nu < 1 {
            return Err(Error::domain("region needs at least 2 x points and 1 nu point"));
        }
        if self.x_max < self.small_x_threshold {
            return Err(Error::domain("region lies entirely below the series threshold"));
        }
        Ok(())
    }

    pub fn x_points(&self) -> Vec<f64> {
        let step = (self.x_max - self.x_min) / (self.nx - 1) as f64;
        let mut xs: Vec<f64> = (0..self.nx)
            .map(|i| if i == self.nx - 1 { self.x_max } else { self.x_min + i as f64 * step })
            .map(|x| x.max(self.small_x_threshold))
            .collect();
        let lo = self.x_min.max(self.small_x_threshold).max(0.1);
        let hi = self.x_max.min(1.0);
        if self.extra_log_x >= 2 && lo < hi {
            let (a, b) = (lo.ln(), hi.ln());
            let n = self.extra_log_x - 1;
            xs.extend((0..=n).map(|i| (a + (b - a) * i as f64 / n as f64).exp()));
        }
        xs
    }

    pub fn nu_points(&self) -> Vec<f64> {
        let step = (self.nu_max - self.nu_min) / self.n_nu as f64;
        (1..=self.n_nu)
            .map(|k| if k == self.n_nu { self.nu_max } else { self.nu_min + k as f64 * step })
            .collect()
    }
}

/// Outcome of the search: the chosen bound and `(L, max AE)` per candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub bound: f64,
    pub curve: Vec<(f64, f64)>,
}

pub fn write_curve_csv<W: Write>(curve: &[(f64, f64)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["L", "max_ae"])?;
    for (l, ae) in curve {
        out.write_record([format!("{l:.16e}"), format!("{ae:.16e}")])?;
    }
    out.flush()?;
    Ok(())
}

/// Reference values for every grid point, ν-major.
fn reference_grid(region: &RegionSpec) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let xs = region.x_points();
    let nus = region.nu_points();
    let reference = (0..nus.len() * xs.len())
        .into_par_iter()
        .map(|k| {
            let p = EvalPoint::new(xs[k % xs.len()], nus[k / xs.len()])?;
            oracle_log_bessel_k(&p, AUDIT_ORACLE_BINS)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((xs, nus, reference))
}

/// Worst `|reference - fixed window|` over the grid for window `[0, upper]`.
fn max_abs_error(
    xs: &[f64],
    nus: &[f64],
    reference: &[f64],
    upper: f64,
    bins: usize,
) -> Result<f64> {
    let cfg = QuadratureConfig::default().with_upper(upper).with_bins(bins);
    let per_nu = nus
        .par_iter()
        .enumerate()
        .map(|(i, &nu)| {
            let kernel = IntegralKernel::new(nu, &cfg)?;
            Ok(xs
                .iter()
                .enumerate()
                .map(|(j, &x)| (reference[i * xs.len() + j] - kernel.log_k(x)).abs())
                // NaN would mean a failed evaluation; let it win the max.
                .fold(0.0, |m: f64, v| if v.is_nan() || v > m { v } else { m }))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_nu.into_iter().fold(0.0, |m, v| if v.is_nan() || v > m { v } else { m }))
}

/// Smallest candidate upper bound whose fixed-window quadrature with `bins`
/// panels stays within `tol` of the reference in `log K` over the region.
/// Every candidate is audited so the report carries the full curve.
pub fn find_upper_bound(
    region: &RegionSpec,
    tol: f64,
    candidates: &[f64],
    bins: usize,
) -> Result<BoundReport> {
    region.validate()?;
    if !(tol > 0.0) {
        return Err(Error::domain("tol must be positive"));
    }
    if candidates.is_empty() || candidates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("candidates must be non-empty and strictly ascending"));
    }
    if !(candidates[0] > 0.0) {
        return Err(Error::domain("candidates must be positive"));
    }
    let (xs, nus, reference) = reference_grid(region)?;
    let curve = candidates
        .iter()
        .map(|&l| Ok((l, max_abs_error(&xs, &nus, &reference, l, bins)?)))
        .collect::<Result<Vec<_>>>()?;
    match curve.iter().find(|(_, ae)| *ae <= tol) {
        Some(&(bound, _)) => Ok(BoundReport { bound, curve }),
        None => Err(Error::NoBoundFound { tol, curve }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let r = RegionSpec::default();
        let xs = r.x_points();
        assert_eq!(xs.len(), 141 + 50);
        assert_eq!(xs[0], 0.1, "x = 0 is raised to the threshold");
        assert_eq!(xs[1], 1.0);
        assert_eq!(xs[140], 140.0);
        assert!((xs[141] - 0.1).abs() < 1e-15 && (xs[190] - 1.0).abs() < 1e-15);
        let nus = r.nu_points();
        assert_eq!(nus.len(), 40);
        assert_eq!(nus[0], 0.5);
        assert_eq!(nus[39], 20.0);
    }

    #[test]
    fn region_without_small_corner_has_no_extra_points() {
        let r = RegionSpec { x_min: 50.0, nx: 10, ..Default::default() };
        assert_eq!(r.x_points().len(), 10);
    }

    #[test]
    fn rejects_bad_input() {
        let r = RegionSpec { x_max: -1.0, ..Default::default() };
        assert!(find_upper_bound(&r, 1e-9, &[9.0], 64).is_err());
        let small = RegionSpec { nx: 3, n_nu: 2, extra_log_x: 0, ..Default::default() };
        assert!(find_upper_bound(&small, 1e-9, &[9.0, 8.0], 64).is_err());
        assert!(find_upper_bound(&small, 0.0, &[9.0], 64).is_err());
        assert!(find_upper_bound(&small, 1e-9, &[], 64).is_err());
    }

    #[test]
    fn large_x_region_needs_short_window() {
        let r = RegionSpec {
            x_min: 50.0,
            x_max: 140.0,
            nu_min: 0.0,
            nu_max: 1.0,
            nx: 10,
            n_nu: 4,
            extra_log_x: 0,
            ..Default::default()
        };
        let rep = find_upper_bound(&r, 1e-9, &DEFAULT_CANDIDATES, 1024).unwrap();
        assert!(rep.bound <= 9.0);
        assert_eq!(rep.curve.len(), DEFAULT_CANDIDATES.len());
    }

    #[test]
    fn too_short_window_reports_curve() {
        let r = RegionSpec { nx: 3, n_nu: 2, extra_log_x: 0, ..Default::default() };
        match find_upper_bound(&r, 1e-9, &[1.0], 256) {
            Err(Error::NoBoundFound { curve, .. }) => {
                assert_eq!(curve.len(), 1);
                assert!(curve[0].1 > 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn curve_csv() {
        let mut buf = Vec::new();
        write_curve_csv(&[(9.0, 1e-12)], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "L,max_ae\n9.0000000000000000e0,9.9999999999999998e-13\n");
    }
}
