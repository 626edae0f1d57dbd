//! Configuration, orchestration and reporting for the `fracmorrey`
//! experiments: each run writes headed CSV tables (and FBMF fields for
//! solves) plus a `manifest.json` with hashes of every emitted file.

pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;

use std::collections::HashSet;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

pub use config::{Experiment, ExperimentConfig};
pub use error::RunError;
pub use manifest::{RunManifest, RunStatus};

use manifest::{Outputs, MANIFEST_NAME};

/// Environment variable holding the default thread budget.
pub const THREADS_ENV: &str = "FRACMORREY_THREADS";

/// Threads for one run: the config value, else `FRACMORREY_THREADS`, else
/// the number of available cores.
pub fn resolve_threads(requested: Option<usize>) -> Result<usize, RunError> {
    if let Some(n) = requested {
        return if n == 0 {
            Err(RunError::config("threads", "must be >= 1"))
        } else {
            Ok(n)
        };
    }
    if let Ok(v) = std::env::var(THREADS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(RunError::config(THREADS_ENV, &format!("not a positive integer: {v:?}"))),
        };
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn out_dir(config: &ExperimentConfig) -> Result<PathBuf, RunError> {
    config
        .out_dir
        .clone()
        .ok_or_else(|| RunError::config("out_dir", "required"))
}

/// Executes one experiment inside its own thread pool.
///
/// Configuration problems are returned as errors before anything is
/// written. A numerical or I/O failure after the run has started yields a
/// manifest with status `failed`; files written up to that point are kept
/// and listed.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest, RunError> {
    let threads = resolve_threads(config.threads)?;
    let dir = out_dir(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::Io(e.to_string()))?;
    let mut outputs = Outputs::create(&dir)?;
    let start = Instant::now();
    let result = pool.install(|| experiments::execute(config, &mut outputs));
    let wall = start.elapsed().as_secs_f64();
    let (status, error, summary) = match result {
        Ok(summary) => (RunStatus::Ok, None, summary),
        Err(e @ RunError::Config { .. }) => return Err(e),
        Err(e) => (RunStatus::Failed, Some(e.to_string()), serde_json::Value::Null),
    };
    let manifest = RunManifest {
        experiment: config.experiment.to_string(),
        status,
        error,
        version: env!("CARGO_PKG_VERSION").to_string(),
        zeta_profile: fracmorrey_core::lp::ZETA_PROFILE.to_string(),
        threads,
        wall_time_seconds: wall,
        config: config.to_json(),
        summary,
        files: outputs.into_files(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| RunError::Io(e.to_string()))?;
    std::fs::write(dir.join(MANIFEST_NAME), text + "\n")?;
    Ok(manifest)
}

/// Runs configs with at most `parallelism` concurrent runs. Results keep
/// the input order and one failure never affects the others. Missing or
/// duplicate output directories are rejected before any run starts.
pub fn sweep(
    configs: &[ExperimentConfig],
    parallelism: usize,
) -> Result<Vec<Result<RunManifest, RunError>>, RunError> {
    let mut seen = HashSet::new();
    for (i, c) in configs.iter().enumerate() {
        let dir = out_dir(c).map_err(|_| RunError::config(&format!("[{i}].out_dir"), "required"))?;
        if !seen.insert(dir.clone()) {
            return Err(RunError::config(
                &format!("[{i}].out_dir"),
                &format!("duplicate output directory {}", dir.display()),
            ));
        }
    }
    if parallelism == 0 {
        return Err(RunError::config("parallelism", "must be >= 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| RunError::Io(e.to_string()))?;
    Ok(pool.install(|| configs.par_iter().map(run).collect()))
}
