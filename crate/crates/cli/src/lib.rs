//! `crms`: reproducible experiments over `crms-core`.
//!
//! Exit codes: 0 success, 1 check failure, 2 configuration or usage error,
//! 3 flow divergence.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::ExperimentConfig;

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Diverged { step: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Diverged { .. } => EXIT_DIVERGED,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Diverged { step } => write!(f, "flow diverged at step {step}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "crms",
    version,
    about = "CRMS geometry and Fueter flow experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Verb,
    /// JSON experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grid size as `N1xN2`.
    #[arg(long, global = true, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Verb {
    /// Check the pointwise CRMS conditions of the configured form.
    Validate,
    /// Build a Darboux frame for the configured form.
    Darboux,
    /// Sweep principal symbols over covectors.
    Symbol,
    /// Run the gradient flow of the action.
    Flow,
    /// Compare the discrete gradient against finite differences.
    Gradcheck,
}

impl Verb {
    fn name(self) -> &'static str {
        match self {
            Verb::Validate => "validate",
            Verb::Darboux => "darboux",
            Verb::Symbol => "symbol",
            Verb::Flow => "flow",
            Verb::Gradcheck => "gradcheck",
        }
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected N1xN2, got {s:?}"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

/// Outcome of a command that ran to completion.
pub(crate) struct Outcome {
    pub passed: bool,
    pub summary: String,
}

/// Run the CLI on `args` (including the program name) and return the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let quiet = cli.quiet;
    match execute(cli) {
        Ok(outcome) => {
            if !quiet {
                println!("{}", outcome.summary);
            }
            if outcome.passed {
                EXIT_SUCCESS
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("crms: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<Outcome, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.output_dir = Some(out);
    }
    if let Some((n1, n2)) = cli.grid {
        config.grid.n1 = n1;
        config.grid.n2 = n2;
    }
    config.validate()?;
    let verb = cli.command;
    if let Some(kind) = &config.experiment {
        if kind != verb.name() {
            return Err(CliError::Usage(format!(
                "config is for experiment {kind:?}, not {:?}",
                verb.name()
            )));
        }
    }
    let out = config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out)?;
    match verb {
        Verb::Validate => commands::validate(&config, &out),
        Verb::Darboux => commands::darboux(&config, &out),
        Verb::Symbol => commands::symbol(&config, &out),
        Verb::Flow => commands::flow(&config, &out),
        Verb::Gradcheck => commands::gradcheck(&config, &out),
    }
}
