use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fracmorrey::{run, sweep, Experiment, ExperimentConfig, RunError, RunManifest};
use serde_json::Value;

/// Numerical experiments for fractional heat semigroups, Besov-Morrey norms
/// and mild solutions.
///
/// Exit status: 0 on success, 2 on a configuration error, 3 when a run
/// fails numerically.
#[derive(Debug, Parser)]
#[command(name = "fracmorrey", version, allow_negative_numbers = true)]
struct Cli {
    /// Experiment name, or `sweep` to run a JSON array of configs.
    experiment: String,
    /// JSON config (an array of configs for `sweep`).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Thread budget per run.
    #[arg(long, env = fracmorrey::THREADS_ENV)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Concurrent runs for `sweep`.
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    #[arg(long)]
    theta: Option<f64>,
    /// Comma-separated evaluation times.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Source space as `s,p,q`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    space: Option<Vec<f64>>,
    /// FBMF input field.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output CSV path (semigroup).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_json(path: &PathBuf) -> Result<Value, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::config("config", &format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| RunError::config("config", &e.to_string()))
}

fn build_config(cli: &Cli, experiment: Experiment) -> Result<ExperimentConfig, RunError> {
    let mut value = match &cli.config {
        Some(path) => read_json(path)?,
        None => serde_json::json!({}),
    };
    let Some(object) = value.as_object_mut() else {
        return Err(RunError::config(".", "config must be a JSON object"));
    };
    match object.get("experiment").and_then(Value::as_str) {
        Some(name) if name != experiment.name() => {
            return Err(RunError::config(
                "experiment",
                &format!("config says {name:?} but {:?} was requested", experiment.name()),
            ))
        }
        _ => {
            object.insert("experiment".into(), experiment.name().into());
        }
    }
    let mut cfg = ExperimentConfig::from_value(value)?;
    if let Some(v) = cli.theta {
        cfg.theta = v;
    }
    if let Some(v) = &cli.times {
        cfg.times = Some(v.clone());
    }
    if let Some(v) = cli.sigma {
        cfg.sigma = Some(v);
    }
    if let Some(v) = &cli.space {
        if v.len() != 3 {
            return Err(RunError::config("space", "expected three values s,p,q"));
        }
        cfg.s = Some(v[0]);
        cfg.p = Some(v[1]);
        cfg.q = Some(v[2]);
    }
    if let Some(v) = &cli.input {
        cfg.input = Some(v.clone());
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if let Some(out) = &cli.out {
        let name = out
            .file_name()
            .ok_or_else(|| RunError::config("out", "must name a file"))?;
        cfg.csv_name = Some(name.to_string_lossy().into_owned());
        if cfg.out_dir.is_none() && cli.out_dir.is_none() {
            let parent = out.parent().filter(|p| !p.as_os_str().is_empty());
            cfg.out_dir = Some(parent.map_or_else(|| PathBuf::from("."), PathBuf::from));
        }
    }
    if let Some(v) = &cli.out_dir {
        cfg.out_dir = Some(v.clone());
    }
    if cfg.out_dir.is_none() {
        cfg.out_dir = Some(PathBuf::from("fracmorrey-out").join(experiment.name()));
    }
    Ok(cfg)
}

fn report(manifest: &RunManifest) -> i32 {
    let out = manifest.config.get("out_dir").and_then(Value::as_str).unwrap_or("?");
    match &manifest.error {
        None => {
            println!("{} ok -> {out}", manifest.experiment);
            println!(
                "{}",
                serde_json::to_string_pretty(&manifest.summary).unwrap_or_default()
            );
            0
        }
        Some(e) => {
            eprintln!("{} failed -> {out}: {e}", manifest.experiment);
            3
        }
    }
}

fn run_sweep(cli: &Cli) -> Result<i32, RunError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| RunError::config("config", "sweep needs --config with a JSON array"))?;
    let Value::Array(items) = read_json(path)? else {
        return Err(RunError::config(".", "sweep config must be a JSON array"));
    };
    let mut configs = Vec::with_capacity(items.len());
    for (i, item) in items.into_iter().enumerate() {
        let mut cfg = ExperimentConfig::from_value(item).map_err(|e| match e {
            RunError::Config { path, message } => RunError::config(&format!("[{i}].{path}"), &message),
            other => other,
        })?;
        if cli.threads.is_some() {
            cfg.threads = cli.threads;
        }
        configs.push(cfg);
    }
    let mut code = 0;
    for result in sweep(&configs, cli.parallelism)? {
        let c = match result {
            Ok(m) => report(&m),
            Err(e) => {
                eprintln!("{e}");
                e.exit_code()
            }
        };
        code = code.max(c);
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = if cli.experiment == "sweep" {
        run_sweep(&cli)
    } else {
        match Experiment::from_name(&cli.experiment) {
            Some(e) => build_config(&cli, e).and_then(|cfg| run(&cfg)).map(|m| report(&m)),
            None => Err(RunError::config(
                "experiment",
                &format!("unknown experiment {:?}", cli.experiment),
            )),
        }
    };
    let code = outcome.unwrap_or_else(|e| {
        eprintln!("{e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
