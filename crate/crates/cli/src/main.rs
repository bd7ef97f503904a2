//! `freebm`: exact moments, fractional moments, self-checks, densities and
//! random-matrix simulations from the command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 numerical failure.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use report::Format;

#[derive(Parser)]
#[command(name = "freebm", version, about = "Moments and densities of free multiplicative Brownian motion")]
struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every random choice (simulations and sampled checks).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MomentMode {
    /// Exact polynomials in t.
    Polynomial,
    /// Exact values at a given t.
    AtT,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Stirling,
    Kummer,
    TheoremMain,
    Moments,
    Fractional,
    Density,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Additive,
    Multiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Euler,
    Exponential,
}

#[derive(Subcommand)]
enum Command {
    /// Moments m_n(t) of sc(2 sqrt t) ⊞ Unif[-t, 0].
    Moments {
        #[arg(long, default_value_t = 4)]
        n_max: usize,
        #[arg(long, value_enum, default_value_t = MomentMode::Polynomial)]
        mode: MomentMode,
        /// Evaluation point for `--mode at-t`, as `p/q` or a decimal.
        #[arg(long)]
        t: Option<String>,
        /// Also run the ODE recursion and print the difference.
        #[arg(long)]
        oracle: bool,
    },
    /// Moments of nu_t: integer orders via Laguerre and 1F1, or one complex order.
    Nu {
        /// Largest integer order.
        #[arg(long, conflicts_with = "alpha", required_unless_present = "alpha")]
        n: Option<usize>,
        /// Complex order written as `a+bi`.
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        t: f64,
    },
    /// Run self-check suites; exits 1 if any check fails.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 25)]
        l_max: usize,
        #[arg(long, default_value_t = 25)]
        m_max: usize,
        /// Largest order in the pushforward-moment suite.
        #[arg(long, default_value_t = 25)]
        n_max: usize,
        /// Times for the pushforward-moment suite, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 1.0, 4.0])]
        t: Vec<f64>,
    },
    /// Density of sc(2 sqrt t) ⊞ Unif[-t/2, t/2] on a grid, or of nu_t with `--exp`.
    Density {
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, default_value_t = 2000)]
        points: usize,
        #[arg(long, default_value_t = 1e-3)]
        eta: f64,
        /// Push the density forward under x -> e^x.
        #[arg(long)]
        exp: bool,
        /// Support annotation file; defaults to `<out>.support.json` when `--out` is given.
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Monte Carlo spectra of the matrix models against the exact moments.
    Simulate {
        #[arg(value_enum)]
        model: Model,
        /// Matrix sizes, comma separated.
        #[arg(long = "N", value_delimiter = ',', default_values_t = vec![200])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Increments of the multiplicative model.
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = Scheme::Euler)]
        scheme: Scheme,
        #[arg(long, default_value_t = 4)]
        n_max: usize,
    },
}

/// Exit code of a failed run.
fn failure_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<freebm::Error>() {
        Some(e) if e.is_numerical() => 3,
        _ => 2,
    }
}

/// Parses `args` (program name first), runs the command, and returns the
/// process exit code.
fn execute<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return u8::try_from(err.exit_code()).unwrap_or(2);
        }
    };
    match commands::run(&cli) {
        Ok(failed) => u8::from(failed),
        Err(err) => {
            eprintln!("error: {err:#}");
            failure_code(&err)
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(execute(std::env::args_os()))
}
