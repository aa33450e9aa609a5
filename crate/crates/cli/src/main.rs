//! `mvn`: generate scenes, train denoisers, sweep channel counts and run
//! the gradient checks.
//!
//! Exit codes: 0 on success, 1 on internal or numeric failure, 2 on usage
//! or configuration errors.

mod commands;
mod config;
mod rundir;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use multiview_core::Error;

use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "mvn", version, about = "Multi-view recurrent denoising networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; defaults apply to anything it omits.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory. Must be empty unless --force is given.
    #[arg(long)]
    out: PathBuf,
    /// Master seed, overriding the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for scene-level parallelism.
    #[arg(long)]
    threads: Option<usize>,
    /// Reuse a non-empty output directory.
    #[arg(long)]
    force: bool,
    /// Override a config value by dotted path, e.g. `--set train.epochs=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic scenes (WAV per channel, clean.wav, meta.json).
    Gen(Common),
    /// Train a model and write best.ckpt, last.ckpt and history.csv.
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from this checkpoint; epoch numbering carries on.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Score checkpoints over a range of channel counts into results.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Checkpoint to evaluate; repeat for several models.
        #[arg(long = "checkpoint", required = true)]
        checkpoints: Vec<PathBuf>,
    },
    /// Finite-difference checks of every differentiable operation.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        /// Add a deliberately broken backward rule to show a failure.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

fn set_threads(threads: Option<usize>) -> multiview_core::Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Usage(format!("--threads: {e}")))?;
    }
    Ok(())
}

fn resolve(common: &Common) -> multiview_core::Result<RunConfig> {
    set_threads(common.threads)?;
    RunConfig::resolve(common.config.as_deref(), &common.sets, common.seed)
}

fn run(cli: Cli) -> multiview_core::Result<bool> {
    match cli.command {
        Command::Gen(common) => {
            let config = resolve(&common)?;
            commands::gen(&config, &common.out, common.force)?;
        }
        Command::Train { common, resume } => {
            let config = resolve(&common)?;
            commands::train(&config, &common.out, common.force, resume.as_deref())?;
        }
        Command::Sweep { common, checkpoints } => {
            let config = resolve(&common)?;
            commands::sweep(&config, &common.out, common.force, &checkpoints)?;
        }
        Command::Gradcheck {
            seed,
            threads,
            inject_fault,
        } => {
            set_threads(threads)?;
            return Ok(commands::gradcheck(seed, inject_fault));
        }
    }
    Ok(true)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        e if e.is_usage() => 2,
        Error::Format(_) | Error::Json(_) | Error::Wav(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
