use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use escape_rate::simulate::SimulationConfig;
use escape_rate_cli::report::{self, Format};
use escape_rate_cli::{config, Failure, DEFAULT_MAX_WORDS};
use serde::Serialize;

/// Rate of escape of random walks on free products.
#[derive(Parser)]
#[command(name = "escape-rate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Model configuration (JSON).
    config: PathBuf,
    /// Stopping tolerance of the fixed-point iteration.
    #[arg(long, default_value_t = 1e-13)]
    tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_iter: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for xi and evaluate every applicable drift formula.
    Compute(Common),
    /// Monte Carlo estimates of the drift and related rates.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20_000)]
        steps: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Exact series identities, enumeration trend and formula agreement.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Series order for the identity checks (at most 12).
        #[arg(long, default_value_t = 10)]
        order: usize,
        /// Word limit for the exact enumeration.
        #[arg(long, default_value_t = DEFAULT_MAX_WORDS)]
        max_words: usize,
    },
}

fn render<T: Serialize>(r: &T, format: Format, text: impl Fn(&T) -> String) -> String {
    match format {
        Format::Json => report::to_json(r),
        Format::Csv => report::to_csv(r),
        Format::Text => text(r),
    }
}

fn emit(s: &str) {
    let mut out = std::io::stdout().lock();
    // A closed pipe is not worth a panic.
    let _ = out.write_all(s.as_bytes());
    let _ = out.flush();
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Compute(c) => {
            let opts = escape_rate_cli::solver_options(c.tol, c.max_iter)?;
            let cfg = config::load_file(&c.config)?;
            let r = escape_rate_cli::compute(&cfg, opts)?;
            emit(&render(&r, c.format, report::compute_text));
        }
        Command::Simulate {
            common: c,
            steps,
            trials,
            seed,
        } => {
            let opts = escape_rate_cli::solver_options(c.tol, c.max_iter)?;
            let mut sim = SimulationConfig::new(steps, trials, seed);
            sim.threads = escape_rate_cli::threads_from_env()?;
            let cfg = config::load_file(&c.config)?;
            let r = escape_rate_cli::simulate(&cfg, opts, sim)?;
            emit(&render(&r, c.format, report::simulate_text));
        }
        Command::Verify {
            common: c,
            order,
            max_words,
        } => {
            let opts = escape_rate_cli::solver_options(c.tol, c.max_iter)?;
            let cfg = config::load_file(&c.config)?;
            match escape_rate_cli::verify(&cfg, opts, order, max_words) {
                Ok(r) => emit(&render(&r, c.format, report::verify_text)),
                Err(Failure::Verify(r)) => {
                    emit(&render(r.as_ref(), c.format, report::verify_text));
                    return Err(Failure::Verify(r));
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("escape-rate: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
