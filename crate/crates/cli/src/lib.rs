//! Batch front end: config ingestion, invariant runs, sweeps and the self-check suite.

pub mod check;
pub mod config;
pub mod error;
pub mod record;
pub mod run;

use std::path::{Path, PathBuf};

pub use config::{Command, GridSpec, ModelSpec, RunConfig};
pub use error::CliError;
pub use record::{
    exit_code, Outcome, ResultRecord, EXIT_CONFIG, EXIT_INTERNAL, EXIT_OBSTRUCTION, EXIT_OK,
    EXIT_UNRESOLVED,
};
pub use run::Settings;

/// Environment variable naming the output directory when neither `--out` nor the config sets one.
pub const OUT_DIR_ENV: &str = "Z2FRAMES_OUT";

/// Command-line overrides of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub grid: Option<GridSpec>,
}

/// Finished run: records in index order and the files written.
#[derive(Debug)]
pub struct RunSummary {
    pub records: Vec<ResultRecord>,
    pub files: Vec<PathBuf>,
    pub exit_code: u8,
}

pub fn output_dir(config: &RunConfig, overrides: &Overrides) -> PathBuf {
    overrides
        .out
        .clone()
        .or_else(|| config.output.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Applies `overrides`, runs `config` on a pool of the requested size and writes the outputs.
pub fn execute(mut config: RunConfig, overrides: &Overrides) -> Result<RunSummary, CliError> {
    if let Some(grid) = overrides.grid {
        config.grid = Some(grid);
    }
    if let Some(seed) = overrides.seed {
        config.seed = Some(seed);
    }
    config.validate()?;
    let workers = match overrides.workers {
        Some(0) => return Err(CliError::Config("--workers must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let dir = output_dir(&config, overrides);
    let settings = Settings::new(&config, config.seed.unwrap_or(0));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    let (records, artifacts) = pool.install(|| run::run(&config, &settings))?;
    let mut files = record::emit(&dir, &config, &records)?;
    for (name, frame) in &artifacts.frames {
        let path = dir.join(name);
        frame.write(&path)?;
        files.push(path);
    }
    Ok(RunSummary {
        exit_code: exit_code(&records),
        records,
        files,
    })
}

/// Reads `path` and runs it.
pub fn execute_file(path: &Path, overrides: &Overrides) -> Result<RunSummary, CliError> {
    execute(RunConfig::read(path)?, overrides)
}
