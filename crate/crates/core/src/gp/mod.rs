//! Gaussian-process workflow on Matérn covariances: simulation, exact
//! log-likelihood, maximum-likelihood fitting and kriging prediction.

pub mod fit;
pub mod linalg;
pub mod optim;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;

use crate::covariance::{
    distance, generate_covariance, normalize_locations, LocationSet, MaternKernel, MaternParams,
};
use crate::error::{Error, Result};
use crate::special::QuadratureConfig;
pub use fit::{
    default_start, fit_mle, replicate_study, write_replicates, FitResult, ParamBounds, ReplicateRow,
    ReplicateSpec, TraceRow,
};
pub use linalg::Cholesky;

/// Zero-mean field values at locations.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub locs: LocationSet,
    pub z: Vec<f64>,
}

impl Observations {
    pub fn new(locs: LocationSet, z: Vec<f64>) -> Result<Self> {
        if locs.len() != z.len() {
            return Err(Error::domain(format!(
                "{} locations but {} observations",
                locs.len(),
                z.len()
            )));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("non-finite observation".into()));
        }
        Ok(Observations { locs, z })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

/// Cholesky factor of `Σ(θ)` over `locs`.
pub fn factor_covariance(
    locs: &LocationSet,
    theta: &MaternParams,
    cfg: &QuadratureConfig,
    tile_size: usize,
) -> Result<Cholesky> {
    Cholesky::factor(generate_covariance(locs, theta, cfg, tile_size)?)
}

/// `-½ [N log 2π + log|Σ| + zᵀ Σ⁻¹ z]`, via one Cholesky factorization.
pub fn log_likelihood(
    obs: &Observations,
    theta: &MaternParams,
    cfg: &QuadratureConfig,
    tile_size: usize,
) -> Result<f64> {
    let chol = factor_covariance(&obs.locs, theta, cfg, tile_size)?;
    let mut w = obs.z.clone();
    chol.solve_lower(&mut w);
    let quad: f64 = w.iter().map(|v| v * v).sum();
    let n = obs.len() as f64;
    Ok(-0.5 * (n * (2.0 * std::f64::consts::PI).ln() + chol.log_det() + quad))
}

/// Draw `z = L u`, `u ~ N(0, I)` from a ChaCha stream seeded with `seed`.
pub fn simulate(
    locs: &LocationSet,
    theta: &MaternParams,
    seed: u64,
    cfg: &QuadratureConfig,
    tile_size: usize,
) -> Result<Observations> {
    let chol = factor_covariance(locs, theta, cfg, tile_size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<f64> = (0..locs.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    Observations::new(locs.clone(), chol.mul_lower(&u))
}

/// Kriging mean `Σ_*ᵀ Σ⁻¹ z` at `test` locations.
pub fn predict(
    train: &Observations,
    theta: &MaternParams,
    test: &LocationSet,
    cfg: &QuadratureConfig,
    tile_size: usize,
) -> Result<Vec<f64>> {
    let chol = factor_covariance(&train.locs, theta, cfg, tile_size)?;
    let mut alpha = train.z.clone();
    chol.solve(&mut alpha);
    let kernel = MaternKernel::new(theta, cfg)?;
    let tr = train.locs.coords();
    Ok(test
        .coords()
        .par_iter()
        .map(|&p| tr.iter().zip(&alpha).map(|(&q, &a)| kernel.eval(distance(p, q)) * a).sum())
        .collect())
}

/// Mean squared prediction error.
pub fn mspe(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    if predicted.len() != truth.len() || predicted.is_empty() {
        return Err(Error::domain("prediction and truth lengths differ or are empty"));
    }
    Ok(predicted.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / predicted.len() as f64)
}

/// `n` points from a jittered square grid over the unit square: the smallest
/// `side × side` grid with `side² ≥ n`, filled row by row, each point moved
/// uniformly within ±40% of a cell. Normalized afterwards.
pub fn synthetic_locations(n: usize, seed: u64) -> Result<LocationSet> {
    if n == 0 {
        return Err(Error::domain("point count must be at least 1"));
    }
    let mut side = (n as f64).sqrt() as usize;
    while side * side < n {
        side += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Uniform::new(-0.4, 0.4).map_err(|e| Error::domain(e.to_string()))?;
    let s = side as f64;
    let coords = (0..n)
        .map(|k| {
            let x = ((k / side) as f64 + 0.5 + jitter.sample(&mut rng)) / s;
            let y = ((k % side) as f64 + 0.5 + jitter.sample(&mut rng)) / s;
            [x, y]
        })
        .collect();
    normalize_locations(&LocationSet::new(coords)?)
}
