//! Command-line front end: key material generation, scenario runs, and
//! cost benchmark sweeps.
//!
//! Exit codes: 0 success, 1 invariant failure (a run diverged from its
//! reference pipeline or an adversary action was accepted), 2 input
//! error (unparseable scenario, capacity violation, bad flags).

mod bench;
mod keygen;
mod run;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "pptm",
    about = "Privacy-preserving traffic monitoring: simulator and benchmarks",
    version
)]
struct Cli {
    /// Master seed; overrides the scenario file's seed when set.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// System configuration file (TOML); defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and write per-role key material.
    Keygen(keygen::KeygenArgs),
    /// Run a scenario file and check it against the reference pipeline.
    Run(run::RunArgs),
    /// Sweep (M, N) and emit per-role cost rows as CSV.
    Bench(bench::BenchArgs),
}

pub(crate) const EXIT_INVARIANT: i32 = 1;
pub(crate) const EXIT_INPUT: i32 = 2;

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Keygen(args) => keygen::run(&args, cli.seed, cli.config.as_deref()),
        Command::Run(args) => run::run(&args, cli.seed),
        Command::Bench(args) => bench::run(&args, cli.seed, cli.config.as_deref()),
    };
    match code {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}

/// An error carrying the process exit code it should terminate with.
#[derive(Debug)]
pub(crate) struct CliError {
    message: String,
    code: i32,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: EXIT_INPUT,
        }
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: EXIT_INVARIANT,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.code
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(format!("io: {e}"))
    }
}

/// Load a SystemConfig from TOML or fall back to defaults.
pub(crate) fn load_config(
    path: Option<&std::path::Path>,
) -> Result<pptm::entities::SystemConfig, CliError> {
    match path {
        None => Ok(pptm::entities::SystemConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::input(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str(&text)
                .map_err(|e| CliError::input(format!("cannot parse {}: {e}", p.display())))
        }
    }
}
