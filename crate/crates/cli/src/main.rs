use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use zkctl::{run, Command, Invocation};

#[derive(Debug, Parser)]
#[command(
    name = "zkctl",
    version,
    about = "Linear ZK on the 2-torus: spectra, observability, sparse covers, control"
)]
struct Args {
    command: Command,

    /// JSON config for the command.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, default_value = "zk-out")]
    out: PathBuf,

    /// Seed for every random input of the run.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let inv = Invocation {
        command: args.command,
        config: args.config,
        out: args.out,
        seed: args.seed,
    };
    match run(&inv) {
        Ok(manifest) => {
            println!(
                "{}: ok, {} outputs in {}",
                manifest.command,
                manifest.outputs.len(),
                inv.out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("zkctl {}: {e}", inv.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
