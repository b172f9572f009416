//! `kaleido`: integrable mass families, Coxeter sectors and billiard spectra
//! from the command line.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Settings;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "kaleido", version, about, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every command.
#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML file with settings; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (directory for `stats`). Without it results go to stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Output format, `csv` or `json` [default: per command].
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Name the nearest Coxeter kaleidoscope of an ordered mass sequence.
    Classify {
        /// Comma-separated masses.
        #[arg(long, value_delimiter = ',')]
        masses: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Sample the one-parameter mass family of a Coxeter group.
    Family {
        /// Group name: A3, C3, H3, F4, A<n>, C<n>, H4, I2(q).
        #[arg(long)]
        spec: Option<String>,
        /// Number of ratios r = m2/m1 across the feasible range [default: 200].
        #[arg(long)]
        grid: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Spherical-triangle geometry of an ordering sector.
    Geometry {
        #[arg(long, value_delimiter = ',')]
        masses: Option<Vec<f64>>,
        /// Particle order such as `1342` or `1,3,4,2` [default: 1234].
        #[arg(long)]
        ordering: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Reflection group generated by the identity-sector walls.
    Group {
        /// Group name (uses a member of its mass family).
        #[arg(long, conflicts_with = "masses")]
        spec: Option<String>,
        #[arg(long, value_delimiter = ',')]
        masses: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Exact spectrum of a Coxeter sector.
    Exact {
        #[arg(long)]
        spec: Option<String>,
        /// Energy cutoff in units of ħω [default: 30].
        #[arg(long)]
        e_max: Option<f64>,
        /// List allowed λ with degeneracies up to this value instead of energies.
        #[arg(long)]
        lambda_max: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Numerical Dirichlet spectrum of one ordering sector.
    Billiard {
        #[arg(long, value_delimiter = ',')]
        masses: Option<Vec<f64>>,
        #[arg(long)]
        ordering: Option<String>,
        /// Largest basis index [default: 40].
        #[arg(long)]
        n_max: Option<u32>,
        /// Gauss points per direction [default: 3·n_max].
        #[arg(long)]
        quadrature_order: Option<usize>,
        /// Number of levels to report [default: 50].
        #[arg(long = "k", alias = "k-levels")]
        k_levels: Option<usize>,
        /// Also solve at this smaller n_max and report per-level changes.
        #[arg(long)]
        refine_from: Option<u32>,
        /// Convergence tolerance on effective λ [default: 0.02].
        #[arg(long)]
        tolerance: Option<f64>,
        /// Chart centre: canonical, circumcenter or centroid [default: canonical].
        #[arg(long)]
        chart: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Spacing statistics for every distinct sector of a mass set.
    Stats {
        #[arg(long, value_delimiter = ',')]
        masses: Option<Vec<f64>>,
        /// Largest basis index [default: 40].
        #[arg(long)]
        n_max: Option<u32>,
        /// Coarser n_max of the convergence check [default: n_max - 10].
        #[arg(long)]
        refine_from: Option<u32>,
        /// Levels solved per sector [default: 400].
        #[arg(long = "k", alias = "k-levels")]
        k_levels: Option<usize>,
        /// Histogram bins [default: 24].
        #[arg(long)]
        bins: Option<usize>,
        /// Convergence tolerance on effective λ [default: 0.02].
        #[arg(long)]
        tolerance: Option<f64>,
        /// Chart centre [default: circumcenter].
        #[arg(long)]
        chart: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Two-term Weyl estimate of the level count of a sector.
    Weyl {
        #[arg(long, value_delimiter = ',')]
        masses: Option<Vec<f64>>,
        #[arg(long)]
        ordering: Option<String>,
        /// Largest eigenvalue Ẽ sampled [default: 10000].
        #[arg(long)]
        e_max: Option<f64>,
        /// Number of samples [default: 101].
        #[arg(long)]
        points: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Classify { .. } => "classify",
            Command::Family { .. } => "family",
            Command::Geometry { .. } => "geometry",
            Command::Group { .. } => "group",
            Command::Exact { .. } => "exact",
            Command::Billiard { .. } => "billiard",
            Command::Stats { .. } => "stats",
            Command::Weyl { .. } => "weyl",
        }
    }

    /// Flag values as settings, plus the shared options.
    fn flags(self) -> (Settings, Common) {
        let mut s = Settings::default();
        let common = match self {
            Command::Classify { masses, common } => {
                s.masses = masses;
                common
            }
            Command::Family { spec, grid, common } => {
                (s.spec, s.grid) = (spec, grid);
                common
            }
            Command::Geometry {
                masses,
                ordering,
                common,
            } => {
                (s.masses, s.ordering) = (masses, ordering);
                common
            }
            Command::Group { spec, masses, common } => {
                (s.spec, s.masses) = (spec, masses);
                common
            }
            Command::Exact {
                spec,
                e_max,
                lambda_max,
                common,
            } => {
                (s.spec, s.e_max, s.lambda_max) = (spec, e_max, lambda_max);
                common
            }
            Command::Billiard {
                masses,
                ordering,
                n_max,
                quadrature_order,
                k_levels,
                refine_from,
                tolerance,
                chart,
                common,
            } => {
                (s.masses, s.ordering, s.n_max, s.quadrature_order) = (masses, ordering, n_max, quadrature_order);
                (s.k_levels, s.refine_from, s.tolerance, s.chart) = (k_levels, refine_from, tolerance, chart);
                common
            }
            Command::Stats {
                masses,
                n_max,
                refine_from,
                k_levels,
                bins,
                tolerance,
                chart,
                common,
            } => {
                (s.masses, s.n_max, s.refine_from, s.k_levels) = (masses, n_max, refine_from, k_levels);
                (s.bins, s.tolerance, s.chart) = (bins, tolerance, chart);
                common
            }
            Command::Weyl {
                masses,
                ordering,
                e_max,
                points,
                common,
            } => {
                (s.masses, s.ordering, s.e_max, s.points) = (masses, ordering, e_max, points);
                common
            }
        };
        s.output = common.output.clone();
        s.format = common.format.clone();
        (s, common)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let name = cli.command.name();
    let (flags, common) = cli.command.flags();
    let settings = match &common.config {
        Some(path) => flags.over(config::load(path, name)?),
        None => flags,
    };
    let started = std::time::SystemTime::now();
    let clock = std::time::Instant::now();
    let result = commands::dispatch(name, &settings)?;
    output::emit(name, &settings, result, started, clock.elapsed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kaleido: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
