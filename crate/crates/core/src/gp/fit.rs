//! Maximum-likelihood fitting of `(σ², β, ν)` and seeded replicate studies.

use std::io::Write;

use rayon::prelude::*;

use super::optim::{nelder_mead, SimplexOptions};
use super::{log_likelihood, simulate, Observations};
use crate::covariance::{LocationSet, MaternParams};
use crate::error::{Error, Result};
use crate::special::QuadratureConfig;

/// Box constraints on `(σ², β, ν)`, all strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBounds {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Default for ParamBounds {
    fn default() -> Self {
        ParamBounds { lo: [0.01, 0.005, 0.1], hi: [10.0, 1.0, 5.0] }
    }
}

impl ParamBounds {
    pub fn validate(&self) -> Result<()> {
        for k in 0..3 {
            if !(self.lo[k] > 0.0 && self.lo[k] < self.hi[k] && self.hi[k].is_finite()) {
                return Err(Error::domain(format!(
                    "bounds must satisfy 0 < lo < hi < inf, got [{}, {}]",
                    self.lo[k], self.hi[k]
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, t: &MaternParams) -> bool {
        let v = [t.sigma_sq, t.beta, t.nu];
        (0..3).all(|k| v[k] >= self.lo[k] && v[k] <= self.hi[k])
    }
}

/// Default start: unit variance, short range, exponential smoothness.
pub fn default_start() -> MaternParams {
    MaternParams { sigma_sq: 1.0, beta: 0.01, nu: 0.5 }
}

/// One objective evaluation. `llh` is `-∞` when the covariance could not be
/// factorized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub eval: usize,
    pub theta: MaternParams,
    pub llh: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta_hat: MaternParams,
    pub llh: f64,
    /// Objective evaluations.
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

impl FitResult {
    /// `eval,sigma_sq,beta,nu,llh` rows, then `RESULT,σ̂²,β̂,ν̂,llh`.
    pub fn write_trace<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "eval,sigma_sq,beta,nu,llh")?;
        for r in &self.trace {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.eval, r.theta.sigma_sq, r.theta.beta, r.theta.nu, r.llh
            )?;
        }
        let t = &self.theta_hat;
        writeln!(w, "RESULT,{:.16e},{:.16e},{:.16e},{:.16e}", t.sigma_sq, t.beta, t.nu, self.llh)?;
        Ok(())
    }
}

fn from_log(v: &[f64]) -> MaternParams {
    MaternParams { sigma_sq: v[0].exp(), beta: v[1].exp(), nu: v[2].exp() }
}

/// Maximize the log-likelihood over the box with a simplex search on
/// `log θ`. Stops when the simplex spread in llh drops below `opts.f_tol` or
/// after `opts.max_evals` evaluations.
pub fn fit_mle(
    obs: &Observations,
    start: &MaternParams,
    bounds: &ParamBounds,
    cfg: &QuadratureConfig,
    tile_size: usize,
    opts: &SimplexOptions,
) -> Result<FitResult> {
    bounds.validate()?;
    start.validate()?;
    if !bounds.contains(start) {
        return Err(Error::domain("start point lies outside the bounds"));
    }
    cfg.validate()?;
    let lo: Vec<f64> = bounds.lo.iter().map(|v| v.ln()).collect();
    let hi: Vec<f64> = bounds.hi.iter().map(|v| v.ln()).collect();
    let x0 = [start.sigma_sq.ln(), start.beta.ln(), start.nu.ln()];

    let mut trace = Vec::new();
    let res = nelder_mead(
        |v| {
            let theta = from_log(v);
            let llh = log_likelihood(obs, &theta, cfg, tile_size).unwrap_or(f64::NEG_INFINITY);
            trace.push(TraceRow { eval: trace.len() + 1, theta, llh });
            -llh
        },
        &x0,
        &lo,
        &hi,
        opts,
    );
    let theta_hat = from_log(&res.x);
    Ok(FitResult { theta_hat, llh: -res.f, iterations: res.evals, converged: res.converged, trace })
}

/// One line of a replicate study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateRow {
    pub seed: u64,
    pub theta_hat: MaternParams,
    pub llh: f64,
    pub iterations: usize,
}

/// Settings shared by every replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateSpec {
    pub theta_true: MaternParams,
    /// Quadrature used to simulate the fields.
    pub sim_cfg: QuadratureConfig,
    /// Quadrature used inside the likelihood during fitting.
    pub fit_cfg: QuadratureConfig,
    pub start: MaternParams,
    pub bounds: ParamBounds,
    pub opts: SimplexOptions,
    pub tile_size: usize,
}

/// Simulate on `locs` with each seed, fit, and collect estimates in seed
/// order. Replicates run in parallel.
pub fn replicate_study(locs: &LocationSet, seeds: &[u64], spec: &ReplicateSpec) -> Result<Vec<ReplicateRow>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let obs = simulate(locs, &spec.theta_true, seed, &spec.sim_cfg, spec.tile_size)?;
            let fit = fit_mle(&obs, &spec.start, &spec.bounds, &spec.fit_cfg, spec.tile_size, &spec.opts)?;
            Ok(ReplicateRow { seed, theta_hat: fit.theta_hat, llh: fit.llh, iterations: fit.iterations })
        })
        .collect()
}

pub fn write_replicates<W: Write>(rows: &[ReplicateRow], mut w: W) -> Result<()> {
    writeln!(w, "seed,sigma_sq_hat,beta_hat,nu_hat,llh,iterations")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.seed, r.theta_hat.sigma_sq, r.theta_hat.beta, r.theta_hat.nu, r.llh, r.iterations
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::synthetic_locations;

    #[test]
    fn start_at_truth_never_loses_ground() {
        let locs = synthetic_locations(49, 4).unwrap();
        let truth = MaternParams::new(1.0, 0.1, 0.5).unwrap();
        let cfg = QuadratureConfig::default();
        let obs = simulate(&locs, &truth, 9, &cfg, 16).unwrap();
        let l0 = log_likelihood(&obs, &truth, &cfg, 16).unwrap();
        let fit = fit_mle(&obs, &truth, &ParamBounds::default(), &cfg, 16, &SimplexOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.llh >= l0);
        assert_eq!(fit.iterations, fit.trace.len());
        assert_eq!(fit.trace[0].theta.beta, truth.beta.ln().exp());
        let best = fit.trace.iter().map(|r| r.llh).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best, fit.llh);
    }

    #[test]
    fn rejects_bad_start() {
        let locs = synthetic_locations(4, 0).unwrap();
        let obs = Observations::new(locs, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let out = MaternParams::new(20.0, 0.1, 0.5).unwrap();
        let r = fit_mle(&obs, &out, &ParamBounds::default(), &QuadratureConfig::default(), 4, &SimplexOptions::default());
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn trace_format() {
        let t = MaternParams::new(1.0, 0.5, 0.25).unwrap();
        let fit = FitResult {
            theta_hat: t,
            llh: -1.5,
            iterations: 1,
            converged: true,
            trace: vec![TraceRow { eval: 1, theta: t, llh: f64::NEG_INFINITY }],
        };
        let mut buf = Vec::new();
        fit.write_trace(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "eval,sigma_sq,beta,nu,llh");
        assert!(lines[1].ends_with(",-inf"));
        assert!(lines[2].starts_with("RESULT,1.0000000000000000e0,"));
    }
}
