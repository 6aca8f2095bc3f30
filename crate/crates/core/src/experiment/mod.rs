//! End-to-end experiments: load or generate a series, run every
//! (model, horizon) cell, evaluate, and write the report files.

mod config;
mod ingest;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use thiserror::Error;

pub use config::{RunConfig, SplitPoint};
pub use ingest::{generate_synthetic, ingest_csv, ingest_reader, write_series_csv, IngestError};
pub use report::{
    AccuracyRow, CellError, DmRow, ForecastColumn, ForecastTable, ModeDiagnostics, ModeRow, PtRow, ReportBundle,
    SeriesSummary,
};

use crate::par;
use crate::pipeline::{run_horizon, ForecastResult, ModelId};
use crate::series::TimeSeries;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{origin}: {message}")]
    Config { origin: String, message: String },

    #[error("input: {0}")]
    Ingest(#[from] IngestError),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] crate::Error),
}

/// Loads the series named by the config. A synthetic series is written to
/// `series.csv` in the output directory and read back from there.
pub fn load_series(config: &RunConfig) -> Result<(TimeSeries, String), ExperimentError> {
    match (&config.input, &config.synthetic) {
        (Some(path), _) => Ok((
            ingest_csv(path, &config.date_column, &config.value_column, config.period)?,
            path.display().to_string(),
        )),
        (None, Some(spec)) => {
            create_dir(config)?;
            let path = config.out.join("series.csv");
            generate_synthetic(spec, &path)?;
            Ok((ingest_csv(&path, "date", "value", config.period)?, "synthetic".into()))
        }
        (None, None) => Err(ExperimentError::Config {
            origin: "configuration".into(),
            message: "either an input file or a synthetic spec is required".into(),
        }),
    }
}

fn create_dir(config: &RunConfig) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(&config.out).map_err(|source| ExperimentError::Io {
        path: config.out.clone(),
        source,
    })
}

/// Runs every (model, horizon) cell and writes the report files into
/// `config.out`. A failing cell is recorded in the bundle's `errors` and
/// the others still run; only configuration, input and output problems
/// abort the run.
pub fn run_experiment(config: &RunConfig) -> Result<ReportBundle, ExperimentError> {
    config.validate()?;
    let (series, source) = load_series(config)?;
    let n0 = config.in_sample_end(&series)?;
    let pipeline = config.pipeline_config();

    // Canonical cell order, independent of how the lists were written.
    let models: Vec<ModelId> = ModelId::ALL.into_iter().filter(|m| config.models.contains(m)).collect();
    let mut horizons = config.horizons.clone();
    horizons.sort_unstable();
    horizons.dedup();
    let cells: Vec<(ModelId, usize)> = models
        .iter()
        .flat_map(|&m| horizons.iter().map(move |&h| (m, h)))
        .collect();

    let workers = config.workers.unwrap_or_else(par::threads);
    log::info!(
        "{} cells on {} points ({n0} in sample) with {workers} workers",
        cells.len(),
        series.len()
    );
    let results: Vec<crate::Result<ForecastResult>> = par::with_threads(workers, || {
        par::map(&cells, |&(model, h)| {
            let started = Instant::now();
            let r = run_horizon(&series, n0, model, h, &pipeline);
            log::info!("{model} h={h}: {:.1}s", started.elapsed().as_secs_f64());
            r
        })
    });

    let bundle = report::assemble(&series, source, n0, &models, &horizons, config, &pipeline, &cells, results);
    create_dir(config)?;
    report::write_files(&bundle, &config.out)?;
    Ok(bundle)
}
