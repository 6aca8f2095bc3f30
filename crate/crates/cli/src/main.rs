use std::path::PathBuf;
use std::process::ExitCode;

use ame_core::experiment::{run_experiment, ExperimentError, RunConfig};
use clap::Parser;

/// Decomposition-ensemble forecasting experiments on monthly series.
///
/// Runs every selected model at every horizon with a rolling origin and
/// writes report.json, accuracy.csv, dm_tests.csv, pt_tests.csv, modes.csv,
/// mode_measures.csv and forecasts.csv to the output directory.
#[derive(Debug, Parser)]
#[command(name = "ame", version)]
struct Cli {
    /// CSV file with a date (YYYY-MM) column and a value column.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Config file of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Comma-separated model names, e.g. AME,VMD-LSSVR,ARIMA.
    #[arg(long)]
    models: Option<String>,

    /// Comma-separated forecast horizons.
    #[arg(long)]
    horizons: Option<String>,

    /// Last in-sample month (YYYY-MM), in-sample fraction (0.8),
    /// in-sample count (160) or holdout:N.
    #[arg(long)]
    split: Option<String>,

    #[arg(long)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Generate the series instead of reading one: `default` or overrides
    /// such as `slope=1,amplitude=60,noise=25,length=184,seed=42`.
    #[arg(long)]
    synthetic: Option<String>,

    /// Any config key, e.g. `--set vmd.alpha=2000`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// More logging (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn build_config(cli: &Cli) -> Result<RunConfig, ExperimentError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let flag = |name: &str, message: String| ExperimentError::Config {
        origin: format!("--{name}"),
        message,
    };
    let mut set = |key: &str, value: &str| config.set(key, value).map_err(|m| flag(key, m));
    if let Some(p) = &cli.input {
        set("input", &p.to_string_lossy())?;
    }
    if let Some(v) = &cli.synthetic {
        set("synthetic", v)?;
    }
    if let Some(v) = &cli.models {
        set("models", v)?;
    }
    if let Some(v) = &cli.horizons {
        set("horizons", v)?;
    }
    if let Some(v) = &cli.split {
        set("split", v)?;
    }
    if let Some(v) = cli.seed {
        set("seed", &v.to_string())?;
    }
    if let Some(p) = &cli.out {
        set("out", &p.to_string_lossy())?;
    }
    for item in &cli.overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| flag("set", format!("expected KEY=VALUE, got {item:?}")))?;
        config
            .set(key.trim(), value.trim())
            .map_err(|m| flag("set", m))?;
    }
    // A file-given input loses to a synthetic flag and vice versa.
    if cli.synthetic.is_some() && cli.input.is_none() {
        config.input = None;
    }
    if cli.input.is_some() && cli.synthetic.is_none() {
        config.synthetic = None;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let config = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run_experiment(&config) {
        Ok(bundle) => {
            for row in &bundle.accuracy {
                println!("{:<10} h={:<2} MAPE {:>7.3}%  DS {:>6.2}%", row.model.as_str(), row.horizon, row.mape, row.ds);
            }
            println!("wrote {}", config.out.display());
            if bundle.errors.is_empty() {
                ExitCode::SUCCESS
            } else {
                for e in &bundle.errors {
                    eprintln!("failed: {}: {}", e.cell, e.message);
                }
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
