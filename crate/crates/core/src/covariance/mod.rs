//! Matérn covariance matrices over 2D locations, generated tile by tile.
//!
//! ```text
//! C(r) = σ² / (2^{ν-1} Γ(ν)) · (r/β)^ν · K_ν(r/β),    C(0) = σ²
//! ```

pub mod io;
pub mod locations;

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::special::{bessel_k, bessel_k_series, EvalPoint, IntegralKernel, QuadratureConfig};
pub use locations::{
    morton_key, morton_order, normalize_locations, permute, LocationOrdering, LocationSet,
    MORTON_BITS,
};

pub const DEFAULT_TILE_SIZE: usize = 256;

/// Below this scaled distance `u^ν K_ν(u)` has reached its `u → 0` limit in
/// binary64 and the entry is `σ²`.
const ZERO_DISTANCE_LIMIT: f64 = 1e-100;

/// `θ = (σ², β, ν)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaternParams {
    pub sigma_sq: f64,
    pub beta: f64,
    pub nu: f64,
}

impl MaternParams {
    pub fn new(sigma_sq: f64, beta: f64, nu: f64) -> Result<Self> {
        let t = MaternParams { sigma_sq, beta, nu };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma_sq", self.sigma_sq), ("beta", self.beta), ("nu", self.nu)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// `log(σ² / (2^{ν-1} Γ(ν)))`.
    fn log_prefactor(&self) -> f64 {
        self.sigma_sq.ln() - (self.nu - 1.0) * std::f64::consts::LN_2 - ln_gamma(self.nu)
    }
}

#[inline]
pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// One Matérn covariance value. Evaluated in the log domain,
/// `exp(log c + ν log u + log K_ν(u))`, so the small-`u` limit stays finite.
pub fn matern(r: f64, theta: &MaternParams, cfg: &QuadratureConfig) -> Result<f64> {
    theta.validate()?;
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("distance must be finite and nonnegative, got {r}")));
    }
    let u = r / theta.beta;
    if r == 0.0 || u < ZERO_DISTANCE_LIMIT {
        return Ok(theta.sigma_sq);
    }
    let log_k = bessel_k(EvalPoint::new(u, theta.nu)?, cfg)?.log_value;
    Ok((theta.log_prefactor() + theta.nu * u.ln() + log_k).exp())
}

/// [`matern`] with the order-dependent work done once: the prefactor and the
/// quadrature tables for `ν`. Bitwise identical to [`matern`].
#[derive(Debug, Clone)]
pub struct MaternKernel {
    theta: MaternParams,
    log_c: f64,
    cfg: QuadratureConfig,
    integral: IntegralKernel,
}

impl MaternKernel {
    pub fn new(theta: &MaternParams, cfg: &QuadratureConfig) -> Result<Self> {
        theta.validate()?;
        cfg.validate()?;
        Ok(MaternKernel {
            theta: *theta,
            log_c: theta.log_prefactor(),
            cfg: *cfg,
            integral: IntegralKernel::new(theta.nu, cfg)?,
        })
    }

    pub fn theta(&self) -> &MaternParams {
        &self.theta
    }

    /// Covariance at distance `r >= 0`.
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        let u = r / self.theta.beta;
        if r == 0.0 || u < ZERO_DISTANCE_LIMIT {
            return self.theta.sigma_sq;
        }
        let log_k = if u < self.cfg.small_x_threshold {
            match bessel_k_series(u, self.theta.nu, &self.cfg) {
                Ok(k) => k.log_value,
                Err(_) => f64::NAN,
            }
        } else {
            self.integral.log_k(u)
        };
        (self.log_c + self.theta.nu * u.ln() + log_k).exp()
    }
}

/// Column-major `rows.len() × cols.len()` block of covariances.
pub fn generate_tile(rows: &[[f64; 2]], cols: &[[f64; 2]], kernel: &MaternKernel) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows.len() * cols.len());
    for c in cols {
        for r in rows {
            out.push(kernel.eval(distance(*r, *c)));
        }
    }
    out
}

/// [`generate_tile`] of `points` against itself: the strict upper half is
/// mirrored from the lower rather than recomputed, which gives the same bits
/// because [`distance`] is symmetric.
pub fn generate_symmetric_tile(points: &[[f64; 2]], kernel: &MaternKernel) -> Vec<f64> {
    let m = points.len();
    let mut out = vec![0.0; m * m];
    for j in 0..m {
        for i in j..m {
            let v = kernel.eval(distance(points[i], points[j]));
            out[j * m + i] = v;
            out[i * m + j] = v;
        }
    }
    out
}

/// Dense symmetric covariance matrix, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    n: usize,
    tile_size: usize,
    data: Vec<f64>,
}

impl CovarianceMatrix {
    pub fn from_column_major(n: usize, tile_size: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Parse(format!("expected {} entries, got {}", n * n, data.len())));
        }
        Ok(CovarianceMatrix { n, tile_size: tile_size.max(1), data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tile_size(&self) -> usize {
        self.tile_size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Number of tile rows (and columns).
    pub fn tiles_per_side(&self) -> usize {
        self.n.div_ceil(self.tile_size)
    }

    /// Copy of tile `(ti, tj)`, column-major.
    pub fn tile(&self, ti: usize, tj: usize) -> Vec<f64> {
        let (r0, r1) = tile_range(ti, self.tile_size, self.n);
        let (c0, c1) = tile_range(tj, self.tile_size, self.n);
        (c0..c1).flat_map(|j| (r0..r1).map(move |i| (i, j))).map(|(i, j)| self.get(i, j)).collect()
    }
}

fn tile_range(t: usize, ts: usize, n: usize) -> (usize, usize) {
    (t * ts, ((t + 1) * ts).min(n))
}

fn zeroed(n: usize) -> Result<Vec<f64>> {
    let len = n.checked_mul(n).ok_or(Error::Allocation(usize::MAX))?;
    let mut v = Vec::new();
    v.try_reserve_exact(len).map_err(|_| Error::Allocation(len.saturating_mul(8)))?;
    v.resize(len, 0.0);
    Ok(v)
}

/// Lower-triangular tile coordinates `(ti, tj)`, `ti >= tj`.
fn lower_tile(c: &[[f64; 2]], ti: usize, tj: usize, ts: usize, kernel: &MaternKernel) -> Vec<f64> {
    let (r0, r1) = tile_range(ti, ts, c.len());
    if ti == tj {
        return generate_symmetric_tile(&c[r0..r1], kernel);
    }
    let (c0, c1) = tile_range(tj, ts, c.len());
    generate_tile(&c[r0..r1], &c[c0..c1], kernel)
}

fn lower_tiles(n: usize, ts: usize) -> Vec<(usize, usize)> {
    let nt = n.div_ceil(ts);
    (0..nt).flat_map(|tj| (tj..nt).map(move |ti| (ti, tj))).collect()
}

/// Assemble `Σ(θ)` from its lower-triangular tiles, generated in parallel on
/// the current rayon pool and mirrored into the upper triangle. The result
/// does not depend on the number of workers.
pub fn generate_covariance(
    locs: &LocationSet,
    theta: &MaternParams,
    cfg: &QuadratureConfig,
    tile_size: usize,
) -> Result<CovarianceMatrix> {
    if locs.is_empty() {
        return Err(Error::Degenerate("no locations".into()));
    }
    if tile_size == 0 {
        return Err(Error::domain("tile_size must be at least 1"));
    }
    let kernel = MaternKernel::new(theta, cfg)?;
    let n = locs.len();
    let c = locs.coords();
    let mut data = zeroed(n)?;
    let tiles: Vec<((usize, usize), Vec<f64>)> = lower_tiles(n, tile_size)
        .into_par_iter()
        .map(|(ti, tj)| {
            ((ti, tj), lower_tile(c, ti, tj, tile_size, &kernel))
        })
        .collect();
    for ((ti, tj), tile) in tiles {
        let (r0, r1) = tile_range(ti, tile_size, n);
        let (c0, _) = tile_range(tj, tile_size, n);
        let m = r1 - r0;
        for (k, &v) in tile.iter().enumerate() {
            let (i, j) = (r0 + k % m, c0 + k / m);
            data[j * n + i] = v;
            data[i * n + j] = v;
        }
    }
    Ok(CovarianceMatrix { n, tile_size, data })
}

/// Reference construction: one [`matern`] call per entry, no tiling.
pub fn generate_covariance_entrywise(
    locs: &LocationSet,
    theta: &MaternParams,
    cfg: &QuadratureConfig,
) -> Result<CovarianceMatrix> {
    let n = locs.len();
    let c = locs.coords();
    let mut data = zeroed(n)?;
    for j in 0..n {
        for i in 0..n {
            data[j * n + i] = matern(distance(c[i], c[j]), theta, cfg)?;
        }
    }
    Ok(CovarianceMatrix { n, tile_size: n.max(1), data })
}

/// FNV-1a hash of every lower tile's bytes, in tile order. Used to compare
/// outputs across worker counts without holding a large matrix.
pub fn lower_tile_digests(
    locs: &LocationSet,
    theta: &MaternParams,
    cfg: &QuadratureConfig,
    tile_size: usize,
) -> Result<Vec<u64>> {
    if tile_size == 0 {
        return Err(Error::domain("tile_size must be at least 1"));
    }
    let kernel = MaternKernel::new(theta, cfg)?;
    let n = locs.len();
    let c = locs.coords();
    Ok(lower_tiles(n, tile_size)
        .into_par_iter()
        .map(|(ti, tj)| {
            fnv1a(&lower_tile(c, ti, tj, tile_size, &kernel))
        })
        .collect())
}

/// Number of entries in the lower tiles of an order-`n` matrix.
pub fn lower_tile_entries(n: usize, tile_size: usize) -> usize {
    lower_tiles(n, tile_size)
        .iter()
        .map(|&(ti, tj)| {
            let (r0, r1) = tile_range(ti, tile_size, n);
            let (c0, c1) = tile_range(tj, tile_size, n);
            (r1 - r0) * (c1 - c0)
        })
        .sum()
}

fn fnv1a(values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Run `f` on a dedicated pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if workers == 0 {
        return Err(Error::domain("workers must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn random_locs(n: usize, seed: u64) -> LocationSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LocationSet::new((0..n).map(|_| [rng.random(), rng.random()]).collect()).unwrap()
    }

    #[test]
    fn matern_examples() {
        let t = MaternParams::new(1.7, 0.3, 2.2).unwrap();
        assert_eq!(matern(0.0, &t, &cfg()).unwrap(), 1.7);
        let t = MaternParams::new(1.0, 0.5, 0.5).unwrap();
        let v = matern(0.5, &t, &cfg()).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-12, "{v}");
        // ν = 3/2: σ² (1 + u) e^{-u}.
        let t = MaternParams::new(2.0, 0.1, 1.5).unwrap();
        let v = matern(0.3, &t, &cfg()).unwrap();
        let exact = 2.0 * 4.0 * (-3f64).exp();
        assert!((v / exact - 1.0).abs() < 1e-12, "{v} vs {exact}");
    }

    #[test]
    fn matern_series_side_and_limit() {
        // u = 0.05 uses the series; ν = 1/2 closed form again.
        let t = MaternParams::new(1.0, 1.0, 0.5).unwrap();
        let v = matern(0.05, &t, &cfg()).unwrap();
        assert!((v / (-0.05f64).exp() - 1.0).abs() < 1e-14);
        let v = matern(1e-200, &MaternParams::new(3.0, 1.0, 2.0).unwrap(), &cfg()).unwrap();
        assert_eq!(v, 3.0);
        let v = matern(1e-9, &MaternParams::new(3.0, 1.0, 2.0).unwrap(), &cfg()).unwrap();
        assert!((v / 3.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matern_rejects_bad_input() {
        assert!(MaternParams::new(0.0, 1.0, 1.0).is_err());
        assert!(MaternParams::new(1.0, f64::NAN, 1.0).is_err());
        let t = MaternParams::new(1.0, 1.0, 1.0).unwrap();
        assert!(matern(-1.0, &t, &cfg()).is_err());
    }

    #[test]
    fn kernel_matches_scalar_bitwise() {
        let t = MaternParams::new(1.3, 0.07, 0.8).unwrap();
        let k = MaternKernel::new(&t, &cfg()).unwrap();
        for r in [0.0, 1e-3, 0.006, 0.007, 0.02, 0.5, 1.4] {
            assert_eq!(k.eval(r).to_bits(), matern(r, &t, &cfg()).unwrap().to_bits(), "r={r}");
        }
    }

    #[test]
    fn small_tiles() {
        let t = MaternParams::new(2.0, 0.2, 1.0).unwrap();
        let k = MaternKernel::new(&t, &cfg()).unwrap();
        assert_eq!(generate_tile(&[[0.3, 0.3]], &[[0.3, 0.3]], &k), vec![2.0]);
        let p = [[0.1, 0.2], [0.5, 0.9]];
        let tile = generate_tile(&p, &p, &k);
        assert_eq!(tile[0], 2.0);
        assert_eq!(tile[3], 2.0);
        assert_eq!(tile[1].to_bits(), tile[2].to_bits());
        let q = [[0.1, 0.2], [0.5, 0.9], [0.7, 0.1]];
        let tile = generate_tile(&q, &q, &k);
        for j in 0..3 {
            for i in 0..3 {
                let s = matern(distance(q[i], q[j]), &t, &cfg()).unwrap();
                assert_eq!(tile[i + 3 * j].to_bits(), s.to_bits());
            }
        }
        assert_eq!(generate_symmetric_tile(&q, &k), tile);
    }

    #[test]
    fn tiled_equals_entrywise_for_all_tile_sizes() {
        let locs = random_locs(120, 3);
        let t = MaternParams::new(1.0, 0.1, 0.5).unwrap();
        let reference = generate_covariance_entrywise(&locs, &t, &cfg()).unwrap();
        for ts in [1, 7, 64, 256] {
            let m = generate_covariance(&locs, &t, &cfg(), ts).unwrap();
            assert!(m.as_slice().iter().zip(reference.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn symmetric_with_exact_diagonal() {
        let locs = random_locs(50, 11);
        let t = MaternParams::new(1.5, 0.2, 1.3).unwrap();
        let m = generate_covariance(&locs, &t, &cfg(), 16).unwrap();
        for i in 0..50 {
            assert_eq!(m.get(i, i), 1.5);
            for j in 0..i {
                assert_eq!(m.get(i, j).to_bits(), m.get(j, i).to_bits());
            }
        }
        assert_eq!(m.tiles_per_side(), 4);
        assert_eq!(m.tile(3, 0).len(), 2 * 16);
    }

    #[test]
    fn single_location() {
        let locs = random_locs(1, 0);
        let t = MaternParams::new(0.8, 0.1, 0.5).unwrap();
        assert_eq!(generate_covariance(&locs, &t, &cfg(), 256).unwrap().as_slice(), &[0.8]);
    }

    #[test]
    fn permutation_equivariance() {
        let locs = normalize_locations(&random_locs(80, 5)).unwrap();
        let t = MaternParams::new(1.0, 0.1, 1.0).unwrap();
        let m = generate_covariance(&locs, &t, &cfg(), 32).unwrap();
        let (sorted, perm) = morton_order(&locs, MORTON_BITS).unwrap();
        let ms = generate_covariance(&sorted, &t, &cfg(), 32).unwrap();
        for j in 0..80 {
            for i in 0..80 {
                assert_eq!(ms.get(i, j).to_bits(), m.get(perm[i], perm[j]).to_bits());
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let locs = random_locs(150, 9);
        let t = MaternParams::new(1.0, 0.1, 0.5).unwrap();
        let one = with_workers(1, || generate_covariance(&locs, &t, &cfg(), 16)).unwrap().unwrap();
        let three = with_workers(3, || generate_covariance(&locs, &t, &cfg(), 16)).unwrap().unwrap();
        assert_eq!(one, three);
        let d1 = with_workers(1, || lower_tile_digests(&locs, &t, &cfg(), 16)).unwrap().unwrap();
        let d3 = with_workers(3, || lower_tile_digests(&locs, &t, &cfg(), 16)).unwrap().unwrap();
        assert_eq!(d1, d3);
        // (n² + diagonal-tile entries) / 2 with nine full tiles and one 6×6.
        assert_eq!(lower_tile_entries(150, 16), (150 * 150 + 9 * 256 + 36) / 2);
    }

    #[test]
    fn half_order_matrix_matches_exponential() {
        let locs = random_locs(60, 21);
        let t = MaternParams::new(1.0, 0.1, 0.5).unwrap();
        let m = generate_covariance(&locs, &t, &cfg(), 64).unwrap();
        let c = locs.coords();
        for j in 0..60 {
            for i in 0..60 {
                let e = (-distance(c[i], c[j]) / 0.1).exp();
                assert!((m.get(i, j) / e - 1.0).abs() <= 1e-7);
            }
        }
    }
}
