//! `qfreq`: frequency profiles, singular points, covering counts and discrete
//! minimizers of Q-valued maps given as algebraic curves.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qfreq::graph_dirichlet::Weights;

use config::{CoveringArgs, CurveArgs, OutArgs, ProfileArgs, RunConfig};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numeric(String),
    Invariant(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numeric(_) => 2,
            Failure::Invariant(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) | Failure::Invariant(m) => m,
        }
    }
}

impl From<qfreq::Error> for Failure {
    fn from(e: qfreq::Error) -> Self {
        match e {
            qfreq::Error::InternalLogic(_) => Failure::Invariant(e.to_string()),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qfreq", version, about = "Frequency function and singular points of Q-valued maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WeightArg {
    Cot,
    Uniform,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Radial profile of D, H and I; writes profile.csv and profile.gp.
    Frequency {
        #[command(flatten)]
        curve: CurveArgs,
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Classifies branch points; writes singular.csv.
    Singular {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, value_parser = config::parse_pair, default_value = "0,0", allow_hyphen_values = true)]
        center: num_complex::Complex64,
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Covering count of Q-points in B_1/2; writes covering.csv.
    Count {
        #[command(flatten)]
        curve: CurveArgs,
        #[command(flatten)]
        covering: CoveringArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monotonicity, growth and Poincare checks; writes verify.csv.
    Verify {
        #[command(flatten)]
        curve: CurveArgs,
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, hide = true)]
        corrupt_profile: bool,
    },
    /// Discrete Dirichlet minimizer with the curve's boundary trace.
    Minimize {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, default_value_t = 40)]
        resolution: usize,
        #[arg(long, default_value_t = 500)]
        max_iterations: usize,
        #[arg(long, value_enum, default_value_t = WeightArg::Cot)]
        weights: WeightArg,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("QFREQ_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("QFREQ_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Numeric(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Frequency { curve, profile, out } => {
            commands::frequency(&RunConfig::builder(&curve, &out)?.with_profile(&profile)?)
        }
        Command::Singular {
            curve,
            center,
            radius,
            out,
        } => {
            let mut config = RunConfig::builder(&curve, &out)?;
            config.center = center;
            commands::singular(&config, radius)
        }
        Command::Count { curve, covering, out } => {
            commands::count(&RunConfig::builder(&curve, &out)?.with_covering(&covering)?)
        }
        Command::Verify {
            curve,
            profile,
            out,
            corrupt_profile,
        } => commands::verify(&RunConfig::builder(&curve, &out)?.with_profile(&profile)?, corrupt_profile),
        Command::Minimize {
            curve,
            resolution,
            max_iterations,
            weights,
            out,
        } => {
            let weights = match weights {
                WeightArg::Cot => Weights::Cotangent,
                WeightArg::Uniform => Weights::Uniform,
            };
            commands::minimize_cmd(&RunConfig::builder(&curve, &out)?, resolution, max_iterations, weights)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            if let Failure::Usage(_) = failure {
                eprintln!("usage: qfreq <frequency|singular|count|verify|minimize> [--curve FILE | --example f|g|hom] ...");
            }
            ExitCode::from(failure.code())
        }
    }
}
