//! Run settings: built-in defaults, overridden by a `key = value` file,
//! overridden by flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use besselk::covariance::DEFAULT_TILE_SIZE;
use besselk::special::QuadratureConfig;
use besselk::{Error, Result};
use clap::Args;

/// Flags shared by most subcommands. Unset flags fall through to the config
/// file, then to the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonFlags {
    /// Trapezoid panels on the fixed window.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Lower end of the fixed window.
    #[arg(long)]
    pub t_lower: Option<f64>,
    /// Upper end of the fixed window.
    #[arg(long)]
    pub t_upper: Option<f64>,
    /// Arguments below this use the series path.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Maximum series terms.
    #[arg(long)]
    pub series_cap: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub tile_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub quad: QuadratureConfig,
    pub workers: usize,
    pub tile_size: usize,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            quad: QuadratureConfig::default(),
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            tile_size: DEFAULT_TILE_SIZE,
            seed: 0,
            input: None,
            output: None,
        }
    }
}

/// Parsed `key = value` pairs. Keys accept `-` or `_`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile(BTreeMap<String, String>);

const KEYS: [&str; 10] =
    ["bins", "t_lower", "t_upper", "threshold", "series_cap", "workers", "tile_size", "seed", "input", "output"];

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value", no + 1)))?;
            let key = k.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Parse(format!("config line {}: unknown key '{}'", no + 1, k.trim())));
            }
            map.insert(key, v.trim().to_string());
        }
        Ok(ConfigFile(map))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.0
            .get(key)
            .map(|v| v.parse::<T>().map_err(|_| Error::Parse(format!("config key {key}: bad value '{v}'"))))
            .transpose()
    }
}

impl RunConfig {
    /// Flag, else file, else default; then validate.
    pub fn resolve(flags: &CommonFlags, file: &ConfigFile) -> Result<Self> {
        let d = RunConfig::default();
        let quad = QuadratureConfig {
            t_lower: pick(flags.t_lower, file.get("t_lower")?, d.quad.t_lower),
            t_upper: pick(flags.t_upper, file.get("t_upper")?, d.quad.t_upper),
            bins: pick(flags.bins, file.get("bins")?, d.quad.bins),
            small_x_threshold: pick(flags.threshold, file.get("threshold")?, d.quad.small_x_threshold),
            series_cap: pick(flags.series_cap, file.get("series_cap")?, d.quad.series_cap),
            eps_machine: d.quad.eps_machine,
        };
        quad.validate()?;
        let cfg = RunConfig {
            quad,
            workers: pick(flags.workers, file.get("workers")?, d.workers),
            tile_size: pick(flags.tile_size, file.get("tile_size")?, d.tile_size),
            seed: pick(flags.seed, file.get("seed")?, d.seed),
            input: file.get("input")?,
            output: file.get("output")?,
        };
        if cfg.workers == 0 {
            return Err(Error::Domain("workers must be at least 1".into()));
        }
        if cfg.tile_size == 0 {
            return Err(Error::Domain("tile_size must be at least 1".into()));
        }
        Ok(cfg)
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Comma-separated list, e.g. `1,2,4`.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| Error::Parse(format!("bad list element '{p}'"))))
        .collect()
}
