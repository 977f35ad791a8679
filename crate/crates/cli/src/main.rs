//! `besselk`: evaluate K_ν(x), audit its accuracy, and run Matérn
//! Gaussian-process workflows from the command line.
//!
//! Exit codes: 0 success, 1 internal failure, 2 bad input or domain error,
//! 3 no integration bound found, 4 I/O failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use besselk::Error;
use clap::{Parser, Subcommand};

use commands::Failure;
use config::{CommonFlags, ConfigFile, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "besselk", version, about = "Modified Bessel K and Matérn Gaussian-process tools")]
struct Cli {
    /// `key = value` settings file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Print K_ν(x), log K_ν(x) and the path used.
    Eval {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        nu: f64,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Relative-error grid against the reference oracle.
    Heatmap {
        #[command(flatten)]
        args: commands::HeatmapArgs,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Smallest fixed upper integration bound meeting a tolerance.
    FindBound {
        #[command(flatten)]
        args: commands::FindBoundArgs,
    },
    /// Matérn covariance matrix for a location file.
    GenCov {
        #[command(flatten)]
        args: commands::GenCovArgs,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Draw a zero-mean Gaussian field.
    Simulate {
        #[command(flatten)]
        args: commands::SimulateArgs,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Maximum-likelihood estimate of (σ², β, ν).
    Fit {
        #[command(flatten)]
        args: commands::FitArgs,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Kriging predictions at test locations.
    Predict {
        #[command(flatten)]
        args: commands::PredictArgs,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Seeded simulate-and-fit study on a synthetic location set.
    Replicate {
        #[command(flatten)]
        args: commands::ReplicateArgs,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Matrix-generation throughput per worker count.
    Bench {
        #[command(flatten)]
        args: commands::BenchArgs,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let resolve = |c: &CommonFlags| RunConfig::resolve(c, &file);
    match &cli.cmd {
        Cmd::Eval { x, nu, common } => commands::eval(*x, *nu, &resolve(common)?)?,
        Cmd::Heatmap { args, common } => commands::heatmap(args, &resolve(common)?)?,
        Cmd::FindBound { args } => commands::find_bound(args, &resolve(&CommonFlags::default())?)?,
        Cmd::GenCov { args, common } => commands::gen_cov(args, &resolve(common)?)?,
        Cmd::Simulate { args, common } => commands::simulate_cmd(args, &resolve(common)?)?,
        Cmd::Fit { args, common } => commands::fit(args, &resolve(common)?)?,
        Cmd::Predict { args, common } => commands::predict_cmd(args, &resolve(common)?)?,
        Cmd::Replicate { args, common } => commands::replicate(args, &resolve(common)?)?,
        Cmd::Bench { args } => commands::bench(args, &resolve(&CommonFlags::default())?)?,
    }
    Ok(())
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Internal(_) => 1,
        Failure::Core(e) => match e {
            Error::Domain(_)
            | Error::Parse(_)
            | Error::Degenerate(_)
            | Error::DuplicateLocation { .. }
            | Error::NotPositiveDefinite(_) => 2,
            Error::NoBoundFound { .. } => 3,
            Error::Io(_) => 4,
            Error::NoSignChange(_) | Error::IterationCap(_) | Error::Allocation(_) => 1,
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Internal(msg) => eprintln!("error: {msg}"),
                Failure::Core(Error::NoBoundFound { tol, curve }) => {
                    eprintln!("error: no candidate bound satisfies max AE <= {tol:e}");
                    for (l, ae) in curve {
                        eprintln!("  L= {l} max_ae= {ae:e}");
                    }
                }
                Failure::Core(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(exit_code(&f))
        }
    }
}
