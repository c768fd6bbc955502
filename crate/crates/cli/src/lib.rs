//! Library side of the `zkctl` command-line tool.
//!
//! Every command reads one JSON config, writes CSV/JSON results into an
//! output directory and finishes with `manifest.json`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod quadrature;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use error::{CliError, CliResult};
pub use output::RunManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Exact modal evolution of a state.
    Simulate,
    /// Observability constants for one region and truncation.
    Observe,
    /// Observability constants across truncations.
    Sweep,
    /// Certified sparse cover of a frequency family.
    SparseCover,
    /// Near-resonance set classification and point listing.
    Bset,
    /// Badly-approximable certificate for an irrational.
    Diophantine,
    /// Minimal-energy exact control.
    Control,
    /// Rapid-stabilization feedback and closed-loop decay.
    Stabilize,
    /// Invariant suite.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Observe => "observe",
            Command::Sweep => "sweep",
            Command::SparseCover => "sparse-cover",
            Command::Bset => "bset",
            Command::Diophantine => "diophantine",
            Command::Control => "control",
            Command::Stabilize => "stabilize",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    /// Required for every command except `verify`.
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
}

/// Runs one command. The manifest is written even when the command fails;
/// the error is returned afterwards.
pub fn run(inv: &Invocation) -> CliResult<RunManifest> {
    let start = Instant::now();
    let (text, base) = match &inv.config {
        Some(path) => (
            std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?,
            path.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None if inv.command == Command::Verify => ("{}".to_string(), PathBuf::from(".")),
        None => {
            return Err(CliError::Config(format!(
                "`{}` needs --config",
                inv.command.name()
            )))
        }
    };
    let echo: serde_json::Value = config::parse(&text)?;
    let mut env = commands::Env {
        rng: ChaCha8Rng::seed_from_u64(inv.seed),
        base: &base,
        out: output::RunOutput::create(&inv.out)?,
    };
    let result = commands::dispatch(inv.command, &text, &mut env);
    let manifest = env.out.finish(
        inv.command.name(),
        inv.seed,
        echo,
        start.elapsed().as_secs_f64(),
        result.as_ref().err().map(ToString::to_string),
    )?;
    result.map(|()| manifest)
}
