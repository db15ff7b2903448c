use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use z2frames_cli::{execute_file, GridSpec, Overrides};

/// Chern numbers, Z2 invariants, symmetric splittings and Bloch frames from a JSON run config.
///
/// Exit codes: 0 success, 2 obstruction, 3 unresolved, 4 config error, 5 internal error.
#[derive(Debug, Parser)]
#[command(name = "z2frames", version)]
struct Args {
    /// Run configuration (JSON, `"schema": 1`).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; falls back to the config's `output`, then to $Z2FRAMES_OUT, then to `.`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Seed for random models and loop contractions.
    #[arg(long)]
    seed: Option<u64>,
    /// Grid as N1xN2, overriding the config.
    #[arg(long)]
    grid: Option<GridSpec>,
    /// Report every record and the wall time on stderr.
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        out: args.out,
        workers: args.workers,
        seed: args.seed,
        grid: args.grid,
    };
    let start = Instant::now();
    match execute_file(&args.config, &overrides) {
        Ok(summary) => {
            if args.verbose {
                for r in &summary.records {
                    let params: Vec<String> =
                        r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    eprintln!(
                        "[{}] {} {}{}",
                        r.index,
                        r.outcome.name(),
                        params.join(" "),
                        r.message
                            .as_deref()
                            .map(|m| format!(": {m}"))
                            .unwrap_or_default()
                    );
                }
                for f in &summary.files {
                    eprintln!("wrote {}", f.display());
                }
            }
            eprintln!(
                "{} record(s) in {:.2} s",
                summary.records.len(),
                start.elapsed().as_secs_f64()
            );
            ExitCode::from(summary.exit_code)
        }
        Err(e) => {
            eprintln!("z2frames: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
