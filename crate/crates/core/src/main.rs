use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fiberloc::cli::{self, CliError};

/// Fiber TDOA localization experiments: CRB sweeps, CAF surfaces, CCDFs, Monte Carlo.
#[derive(Parser, Debug)]
#[command(name = "fiberloc", version, about)]
struct Args {
    /// JSON experiment config.
    config: Option<PathBuf>,
    /// Output directory (default: out/<config or preset name>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Run a bundled config instead of a file.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
    /// Print the bundled preset names and exit.
    #[arg(long)]
    list_presets: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list_presets {
        for name in cli::list_presets() {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }
    match execute(&args) {
        Ok(dir) => {
            println!("{}", dir.join("run_manifest.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fiberloc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<PathBuf, CliError> {
    let config = cli::load(args.config.as_deref(), args.preset.as_deref(), args.seed)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| cli::default_out_dir(args.config.as_deref(), args.preset.as_deref()));
    cli::run(&config, &out, args.svg)?;
    Ok(out)
}
