use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use jumplq::cli::{parse_config, run, Mode, Overrides};

/// Cone-constrained LQ control with a default jump: solve, simulate,
/// frontier and verify.
#[derive(Parser)]
#[command(name = "jumplq", version)]
struct Args {
    /// One of solve, simulate, frontier, verify.
    mode: Mode,
    /// TOML configuration file.
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte Carlo paths (overrides `mc.paths`).
    #[arg(long)]
    paths: Option<usize>,
    /// Random seed (overrides `mc.seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Number of grid steps (overrides `grid.n`).
    #[arg(long)]
    grid: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        out: args.out,
        paths: args.paths,
        seed: args.seed,
        grid: args.grid,
    };
    match parse_config(&args.config, args.mode, &overrides).and_then(|cfg| run(&cfg)) {
        Ok(out) => {
            print!("{}", out.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("jumplq: {}: {e}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
