//! `barycenter`: approximate, recover, improve and exact discrete Wasserstein
//! barycenters from measure files.
//!
//! Results go to stdout (or `--out`) as measure files; reports are appended
//! as `# key: value` comment lines, so stdout always parses as a measure.

mod commands;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use barycenter_core::error::Error;
use barycenter_core::scalar::{Rational, DEFAULT_TOLERANCE};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "barycenter", version, about = "Discrete Wasserstein barycenters via linear programming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Comma-separated weights, one per measure (default uniform).
    #[arg(long, global = true, value_delimiter = ',')]
    lambda: Option<Vec<String>>,
    #[arg(long, global = true, value_enum, default_value_t = Arith::Rational)]
    arith: Arith,
    /// Comparison tolerance; only used in float mode.
    #[arg(long, global = true, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
    /// Solve small recovery cells exactly.
    #[arg(long, global = true, value_enum, default_value_t = Switch::On)]
    mini_exact: Switch,
    /// Largest number of support combinations the exact solver enumerates.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    centroid_cap: usize,
    #[arg(long, global = true, default_value_t = 100)]
    max_iter: usize,
    /// Write the resulting measure (or image) here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the transport plan here.
    #[arg(long, global = true)]
    transport_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Arith {
    Rational,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal barycenter restricted to the union of the input supports.
    Approx {
        #[arg(required = true)]
        measures: Vec<PathBuf>,
    },
    /// Turn a candidate and its transport into a non-mass-splitting one.
    Recover {
        #[arg(required = true)]
        measures: Vec<PathBuf>,
        /// Candidate barycenter.
        #[arg(long)]
        input: PathBuf,
        /// Transport from the candidate; an optimal one is computed if absent.
        #[arg(long)]
        transport: Option<PathBuf>,
    },
    /// Alternate optimal solves and recovery until a fixpoint.
    Improve {
        #[arg(required = true)]
        measures: Vec<PathBuf>,
    },
    /// Exact barycenter over the support of all weighted centroids.
    Exact {
        #[arg(required = true)]
        measures: Vec<PathBuf>,
    },
    /// Weighted sum of squared Wasserstein distances from a candidate.
    Cost {
        candidate: PathBuf,
        #[arg(required = true)]
        measures: Vec<PathBuf>,
    },
    /// Draw a planar measure as a PGM image.
    Render {
        measure: PathBuf,
        #[arg(long, default_value_t = 1)]
        refine: usize,
        /// Canvas size in unit cells, `WxH`.
        #[arg(long, value_parser = parse_canvas)]
        canvas: (usize, usize),
        #[arg(long, default_value_t = 255)]
        max_value: u16,
        /// Write `P5` instead of `P2`.
        #[arg(long)]
        binary: bool,
    },
    /// Recompute the reference values of the built-in examples and compare
    /// them with the brute-force oracle.
    Verify,
}

fn parse_canvas(text: &str) -> Result<(usize, usize), String> {
    let (w, h) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, found {text:?}"))?;
    let side = |s: &str| {
        s.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| format!("invalid canvas side {s:?}"))
    };
    Ok((side(w)?, side(h)?))
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: Error },
    #[error(transparent)]
    Core(#[from] Error),
    #[error("oracle disagreement: {0}")]
    Mismatch(String),
}

impl CliError {
    pub fn in_file(path: &std::path::Path) -> impl FnOnce(Error) -> CliError + '_ {
        move |source| CliError::File {
            path: path.to_path_buf(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::File { source, .. } | CliError::Core(source) => match source {
                Error::TooLarge { .. } | Error::OracleLimit(_) => 3,
                Error::Solver(_) | Error::MalformedProgram(_) => 4,
                _ => 2,
            },
            CliError::Mismatch(_) => 4,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.common.arith {
        Arith::Rational => commands::run::<Rational>(&cli.command, &cli.common),
        Arith::Float => commands::run::<f64>(&cli.command, &cli.common),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
