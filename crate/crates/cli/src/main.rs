use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use combwalk_cli::{execute, CliError, RunConfig};

/// Run a comb random-walk experiment from a JSON configuration.
#[derive(Debug, Parser)]
#[command(name = "combwalk", version)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides `masterSeed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel trials.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: Args) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    let out = args
        .out
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| CliError::Validation("no output directory: pass --out or set `out`".into()))?;
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    execute(&cfg, &out)?;
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("combwalk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
