use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use besselk::bound::{find_upper_bound, write_curve_csv, RegionSpec};
use besselk::covariance::io::{read_locations_path, write_locations, write_matrix_binary, write_matrix_csv};
use besselk::covariance::{
    generate_covariance, lower_tile_digests, lower_tile_entries, with_workers, MaternParams,
};
use besselk::gp::optim::SimplexOptions;
use besselk::gp::{
    fit_mle, mspe, predict, replicate_study, simulate, synthetic_locations, write_replicates, Observations,
    ParamBounds, ReplicateSpec,
};
use besselk::oracle::heatmap::region_preset;
use besselk::oracle::{error_heatmap, AxisSpec, HeatmapMethod};
use besselk::special::{bessel_k, EvalPoint};
use besselk::{Error, Result};
use clap::{Args, ValueEnum};

use crate::config::{parse_list, RunConfig};

/// A library error, or a failure the CLI detects itself.
#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ThetaFlags {
    /// Marginal variance.
    #[arg(long, default_value_t = 1.0)]
    pub sigma_sq: f64,
    /// Range.
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    /// Smoothness.
    #[arg(long, default_value_t = 0.5)]
    pub nu: f64,
}

impl ThetaFlags {
    fn params(&self) -> Result<MaternParams> {
        MaternParams::new(self.sigma_sq, self.beta, self.nu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatrixFormat {
    Csv,
    Binary,
}

/// File when given, otherwise standard output.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn required(flag: Option<PathBuf>, fallback: Option<&PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| fallback.cloned()).ok_or_else(|| Error::Domain(format!("missing --{name}")))
}

pub fn eval(x: f64, nu: f64, cfg: &RunConfig) -> Result<()> {
    let r = bessel_k(EvalPoint::new(x, nu)?, &cfg.quad)?;
    if !r.validated {
        eprintln!("warning: ({x}, {nu}) lies outside the validated region x <= 140, nu <= 20");
    }
    println!("K= {:.16e} logK= {:.16e} path= {}", r.value, r.log_value, r.path.as_str());
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct HeatmapArgs {
    #[arg(long, default_value = "refined")]
    pub method: String,
    /// `small` or `full`; axis flags override single fields.
    #[arg(long, default_value = "small")]
    pub region: String,
    #[arg(long)]
    pub nu_min: Option<f64>,
    #[arg(long)]
    pub nu_max: Option<f64>,
    #[arg(long)]
    pub nu_n: Option<usize>,
    #[arg(long)]
    pub x_min: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub x_n: Option<usize>,
    /// Reference resolution.
    #[arg(long, default_value_t = 1024)]
    pub oracle_bins: usize,
    /// CSV of every cell.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn heatmap(a: &HeatmapArgs, cfg: &RunConfig) -> Result<()> {
    let method: HeatmapMethod = a.method.parse()?;
    let (nu0, x0) = region_preset(&a.region)?;
    let nu_axis = AxisSpec::new(a.nu_min.unwrap_or(nu0.min), a.nu_max.unwrap_or(nu0.max), a.nu_n.unwrap_or(nu0.n))?;
    let x_axis = AxisSpec::new(a.x_min.unwrap_or(x0.min), a.x_max.unwrap_or(x0.max), a.x_n.unwrap_or(x0.n))?;
    let grid = with_workers(cfg.workers, || error_heatmap(nu_axis, x_axis, method, &cfg.quad, a.oracle_bins))??;
    if let Some(p) = &a.out {
        grid.write_csv(BufWriter::new(File::create(p)?))?;
    }
    match grid.argmax() {
        Some((nu, x, re)) => println!(
            "maxRE= {re:.6} nu= {nu:.6} x= {x:.6} cells= {} invalid= {}",
            grid.re.len(),
            grid.invalid_cells()
        ),
        None => println!("maxRE= nan cells= {} invalid= {}", grid.re.len(), grid.invalid_cells()),
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct FindBoundArgs {
    /// Absolute tolerance on log K.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Ascending candidate bounds.
    #[arg(long, default_value = "5,6,7,8,9,10,11,12")]
    pub candidates: String,
    /// Panels used by the audited quadrature.
    #[arg(long, default_value_t = 4096)]
    pub bins: usize,
    #[arg(long, default_value_t = 140.0)]
    pub x_max: f64,
    #[arg(long, default_value_t = 20.0)]
    pub nu_max: f64,
    /// CSV `L,max_ae` per candidate.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

pub fn find_bound(a: &FindBoundArgs, cfg: &RunConfig) -> Result<()> {
    let candidates: Vec<f64> = parse_list(&a.candidates)?;
    let region = RegionSpec { x_max: a.x_max, nu_max: a.nu_max, ..RegionSpec::default() };
    let workers = a.workers.unwrap_or(cfg.workers);
    let outcome = with_workers(workers, || find_upper_bound(&region, a.tol, &candidates, a.bins))?;
    let curve = match &outcome {
        Ok(r) => &r.curve,
        Err(Error::NoBoundFound { curve, .. }) => curve,
        Err(_) => &Vec::new(),
    };
    if let Some(p) = &a.curve {
        write_curve_csv(curve, BufWriter::new(File::create(p)?))?;
    }
    let report = outcome?;
    println!("{}", report.bound);
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct GenCovArgs {
    /// CSV with header `x,y` (a `z` column is ignored).
    #[arg(long)]
    pub locations: Option<PathBuf>,
    #[command(flatten)]
    pub theta: ThetaFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MatrixFormat::Csv)]
    pub format: MatrixFormat,
}

pub fn gen_cov(a: &GenCovArgs, cfg: &RunConfig) -> Result<()> {
    let path = required(a.locations.clone(), cfg.input.as_ref(), "locations")?;
    let (locs, _) = read_locations_path(&path)?;
    let theta = a.theta.params()?;
    let m = with_workers(cfg.workers, || generate_covariance(&locs, &theta, &cfg.quad, cfg.tile_size))??;
    let out = a.out.clone().or_else(|| cfg.output.clone());
    match a.format {
        MatrixFormat::Csv => write_matrix_csv(&m, sink(out.as_deref())?),
        MatrixFormat::Binary => {
            let p = out.ok_or_else(|| Error::Domain("binary output needs --out".into()))?;
            write_matrix_binary(&m, File::create(p)?)
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Synthetic jittered-grid locations in the unit square.
    #[arg(long, conflicts_with = "locations")]
    pub n: Option<usize>,
    /// Existing `x,y` locations instead of a synthetic set.
    #[arg(long)]
    pub locations: Option<PathBuf>,
    #[command(flatten)]
    pub theta: ThetaFlags,
    /// CSV `x,y,z`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Locations come from `--n` (jittered with the run seed) or a file.
pub fn simulate_cmd(a: &SimulateArgs, cfg: &RunConfig) -> Result<()> {
    let locs = match (a.n, a.locations.clone().or_else(|| cfg.input.clone())) {
        (Some(n), _) => synthetic_locations(n, cfg.seed)?,
        (None, Some(p)) => read_locations_path(&p)?.0,
        (None, None) => return Err(Error::Domain("give --n or --locations".into())),
    };
    let theta = a.theta.params()?;
    let obs = with_workers(cfg.workers, || simulate(&locs, &theta, cfg.seed, &cfg.quad, cfg.tile_size))??;
    let out = a.out.clone().or_else(|| cfg.output.clone());
    write_locations(&obs.locs, Some(&obs.z), sink(out.as_deref())?)
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// CSV `x,y,z`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub start_sigma_sq: f64,
    #[arg(long, default_value_t = 0.01)]
    pub start_beta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub start_nu: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_evals: usize,
    /// Stop once the simplex spread in llh falls below this.
    #[arg(long, default_value_t = 1e-6)]
    pub f_tol: f64,
    /// Trace CSV; standard output when absent.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

fn read_observations(path: &Path) -> Result<Observations> {
    let (locs, z) = read_locations_path(path)?;
    let z = z.ok_or_else(|| Error::Parse(format!("{}: no z column", path.display())))?;
    Observations::new(locs, z)
}

pub fn fit(a: &FitArgs, cfg: &RunConfig) -> Result<()> {
    let obs = read_observations(&required(a.data.clone(), cfg.input.as_ref(), "data")?)?;
    let start = MaternParams::new(a.start_sigma_sq, a.start_beta, a.start_nu)?;
    let opts = SimplexOptions { f_tol: a.f_tol, max_evals: a.max_evals, ..SimplexOptions::default() };
    let res = with_workers(cfg.workers, || {
        fit_mle(&obs, &start, &ParamBounds::default(), &cfg.quad, cfg.tile_size, &opts)
    })??;
    let trace = a.trace.clone().or_else(|| cfg.output.clone());
    res.write_trace(sink(trace.as_deref())?)?;
    if trace.is_some() {
        let t = res.theta_hat;
        println!(
            "RESULT sigma_sq= {:.16e} beta= {:.16e} nu= {:.16e} llh= {:.16e} iterations= {} converged= {}",
            t.sigma_sq, t.beta, t.nu, res.llh, res.iterations, res.converged
        );
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    /// Training CSV `x,y,z`.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Test CSV `x,y`, or `x,y,z` to also report MSPE.
    #[arg(long)]
    pub test: PathBuf,
    #[command(flatten)]
    pub theta: ThetaFlags,
    /// CSV `x,y,z` of predictions.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn predict_cmd(a: &PredictArgs, cfg: &RunConfig) -> Result<()> {
    let train = read_observations(&required(a.train.clone(), cfg.input.as_ref(), "train")?)?;
    let (test, truth) = read_locations_path(&a.test)?;
    let theta = a.theta.params()?;
    let pred = with_workers(cfg.workers, || predict(&train, &theta, &test, &cfg.quad, cfg.tile_size))??;
    let out = a.out.clone().or_else(|| cfg.output.clone());
    write_locations(&test, Some(&pred), sink(out.as_deref())?)?;
    if let Some(t) = truth {
        let line = format!("mspe= {:.16e}", mspe(&pred, &t)?);
        if out.is_some() { println!("{line}") } else { eprintln!("{line}") }
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct ReplicateArgs {
    #[arg(long, default_value_t = 900)]
    pub n: usize,
    #[command(flatten)]
    pub theta: ThetaFlags,
    /// Number of replicates; seeds run from `--seed`.
    #[arg(long, default_value_t = 20)]
    pub replicates: u64,
    /// Panels used to simulate; `--bins` sets the fitting quadrature.
    #[arg(long, default_value_t = 40)]
    pub sim_bins: usize,
    #[arg(long, default_value_t = 1000)]
    pub max_evals: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Locations are fixed (jitter seed 0); each replicate draws a new field.
pub fn replicate(a: &ReplicateArgs, cfg: &RunConfig) -> Result<()> {
    let locs = synthetic_locations(a.n, 0)?;
    let spec = ReplicateSpec {
        theta_true: a.theta.params()?,
        sim_cfg: cfg.quad.with_bins(a.sim_bins),
        fit_cfg: cfg.quad,
        start: besselk::gp::default_start(),
        bounds: ParamBounds::default(),
        opts: SimplexOptions { max_evals: a.max_evals, ..SimplexOptions::default() },
        tile_size: cfg.tile_size,
    };
    let seeds: Vec<u64> = (cfg.seed..cfg.seed + a.replicates).collect();
    let rows = with_workers(cfg.workers, || replicate_study(&locs, &seeds, &spec))??;
    let out = a.out.clone().or_else(|| cfg.output.clone());
    write_replicates(&rows, sink(out.as_deref())?)
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 4000)]
    pub n: usize,
    /// Worker counts to time, e.g. `1,2,4`.
    #[arg(long, default_value = "1")]
    pub workers: String,
    #[arg(long)]
    pub tile_size: Option<usize>,
    #[command(flatten)]
    pub theta: ThetaFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Time lower-tile generation per worker count. Tiles are hashed rather than
/// stored, so large `n` fits in memory; differing hashes across worker
/// counts are reported as an internal failure.
pub fn bench(a: &BenchArgs, cfg: &RunConfig) -> std::result::Result<(), Failure> {
    let workers: Vec<usize> = parse_list(&a.workers)?;
    let locs = synthetic_locations(a.n, cfg.seed)?;
    let theta = a.theta.params()?;
    let ts = a.tile_size.unwrap_or(cfg.tile_size);
    let entries = lower_tile_entries(a.n, ts) as f64;
    let mut w = sink(a.out.as_deref())?;
    writeln!(w, "workers,n,seconds,entries_per_sec").map_err(Error::from)?;
    let mut first: Option<Vec<u64>> = None;
    for &k in &workers {
        let t0 = Instant::now();
        let digests = with_workers(k, || lower_tile_digests(&locs, &theta, &cfg.quad, ts))??;
        let secs = t0.elapsed().as_secs_f64();
        writeln!(w, "{k},{},{secs:.6e},{:.6e}", a.n, entries / secs).map_err(Error::from)?;
        w.flush().map_err(Error::from)?;
        match &first {
            None => first = Some(digests),
            Some(d) if *d != digests => {
                return Err(Failure::Internal(format!("tile output differs at {k} workers")));
            }
            Some(_) => {}
        }
    }
    Ok(())
}
