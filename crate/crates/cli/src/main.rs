mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Exit status for malformed invocations and refused capabilities.
pub const EXIT_USAGE: u8 = 64;
/// Exit status for unreadable or corrupt input data.
pub const EXIT_DATA: u8 = 65;

#[derive(Parser, Debug)]
#[command(name = "chi-verify", version, about = "Decide the threshold-indicator Fourier identity")]
struct Cli {
    /// Worker threads (defaults to the available parallelism).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide the identity for one n and print the verdict as JSON.
    Verify {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        n: u32,
        #[arg(long, value_enum, default_value_t = MethodArg::Cancel)]
        method: MethodArg,
        #[arg(long, env = "CHI_VERIFY_CACHE_DIR")]
        cache_dir: Option<PathBuf>,
        /// Write the built left side as JSON lines.
        #[arg(long)]
        emit_terms: Option<PathBuf>,
    },
    /// Compare every inner chain sum with its conjectured closed form.
    Conjecture {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        n: u32,
        #[arg(long, env = "CHI_VERIFY_CACHE_DIR")]
        cache_dir: Option<PathBuf>,
    },
    /// Inspect, fill or audit the persisted zero cache.
    Cache {
        #[arg(long, env = "CHI_VERIFY_CACHE_DIR")]
        cache_dir: Option<PathBuf>,
        #[command(subcommand)]
        action: CacheAction,
    },
    /// Quadrature check of the integral form for triangular test functions.
    NumericCheck {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=3))]
        n: u32,
        /// Support radii δ_1,…,δ_n with Σδ < 2.
        #[arg(long, value_delimiter = ',', required = true)]
        supports: Vec<f64>,
        /// Grid points per unit length (a power of two).
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Allowed |Σ C(F) − E(O)| relative to Π δ_i.
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
    },
}

#[derive(Subcommand, Debug)]
enum CacheAction {
    /// Entry count and zero/nonzero split.
    Stats,
    /// Record every verdict the n-th chain expansion needs.
    Warm {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        n: u32,
    },
    /// Re-run the LP on a random sample of entries.
    VerifyIntegrity {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Cancel,
    Valuations,
    Both,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w as usize).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let outcome = match cli.command {
        Command::Verify { n, method, cache_dir, emit_terms } => {
            commands::verify(n as usize, method, cache_dir.as_deref(), emit_terms.as_deref())
        }
        Command::Conjecture { n, cache_dir } => commands::conjecture(n as usize, cache_dir.as_deref()),
        Command::Cache { cache_dir, action } => commands::cache(cache_dir.as_deref(), action),
        Command::NumericCheck { n, supports, grid, tol } => commands::numeric_check(n as usize, supports, grid, tol),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code_for(&e))
        }
    }
}
