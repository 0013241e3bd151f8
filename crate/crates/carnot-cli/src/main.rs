//! `carnot`: run the checks listed in a TOML config and write JSON reports,
//! CSV tables and a manifest.
//!
//! Exit status: 0 when no check is violated, 2 when one is, 1 on config,
//! capability or output errors (nothing is written in that case).

mod checks;
mod config;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("capability error: {0}")]
    Capability(String),
    #[error("output error: {0}")]
    Io(String),
}

#[derive(Debug, Parser)]
#[command(name = "carnot", version, about = "Numerical checks of integral identities and inequalities on Carnot-group hypersurfaces")]
struct Args {
    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, value_name = "N", env = "CARNOT_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

fn run(args: &Args) -> Result<bool, CliError> {
    let ctx = config::load(&args.config)?;
    let dir = args
        .out
        .clone()
        .or_else(|| ctx.config.output.dir.as_ref().map(|d| args.config.parent().unwrap_or(".".as_ref()).join(d)))
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set output.dir".into()))?;
    let mut outputs = Vec::new();
    for (i, check) in ctx.config.checks.iter().enumerate() {
        let start = std::time::Instant::now();
        let out = checks::run(check, &ctx).map_err(|e| match e {
            CliError::Capability(m) => CliError::Capability(format!("checks[{i}] ({}): {m}", check.name())),
            other => other,
        })?;
        log::info!("checks[{i}] {}: violated = {} ({:.2?})", out.name, out.violated, start.elapsed());
        outputs.push(out);
    }
    let artifacts = emit::render(&outputs, &ctx)?;
    emit::write(&artifacts, &dir)?;
    log::info!("wrote {} files to {}", artifacts.files.len(), dir.display());
    Ok(outputs.iter().any(|o| o.violated))
}

fn main() -> ExitCode {
    let args = Args::parse();
    env_logger::Builder::new()
        .filter_level(if args.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .init();
    if let Some(n) = args.workers {
        if n == 0 {
            eprintln!("error: --workers must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&args) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
