mod control;
mod observe;
mod sets;
mod simulate;
mod verify;

use std::path::Path;

use rand_chacha::ChaCha8Rng;

use crate::config::parse;
use crate::error::CliResult;
use crate::output::RunOutput;
use crate::Command;

/// Everything a command needs besides its own config.
pub struct Env<'a> {
    pub rng: ChaCha8Rng,
    /// Directory that relative paths in the config refer to.
    pub base: &'a Path,
    pub out: RunOutput,
}

pub fn dispatch(command: Command, text: &str, env: &mut Env<'_>) -> CliResult<()> {
    match command {
        Command::Simulate => simulate::run(&parse(text)?, env),
        Command::Observe => observe::observe(&parse(text)?, env),
        Command::Sweep => observe::sweep(&parse(text)?, env),
        Command::SparseCover => sets::sparse_cover(&parse(text)?, env),
        Command::Bset => sets::bset(&parse(text)?, env),
        Command::Diophantine => sets::diophantine(&parse(text)?, env),
        Command::Control => control::control(&parse(text)?, env),
        Command::Stabilize => control::stabilize(&parse(text)?, env),
        Command::Verify => verify::run(&parse(text)?, env),
    }
}
