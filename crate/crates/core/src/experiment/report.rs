//! The report bundle and its files.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{ExperimentError, RunConfig};
use crate::eval::{accuracy, descriptive_stats, dm_test, pt_test, Alternative, DescriptiveStats};
use crate::pipeline::{component_names, label_modes, ComponentForecast, ForecastResult, ModelId, PipelineConfig};
use crate::series::{TimeSeries, YearMonth};
use crate::vmd::{decompose, mode_measures, select_mode_count, ComponentLabel};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub source: String,
    pub start: YearMonth,
    pub length: usize,
    pub period: usize,
    /// Number of in-sample points.
    pub in_sample_end: usize,
    pub first_out_of_sample: YearMonth,
    pub models: Vec<ModelId>,
    pub horizons: Vec<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeRow {
    pub name: String,
    pub label: ComponentLabel,
    pub center_frequency: f64,
    pub mean_period: f64,
    pub correlation: f64,
    pub variance_pct: f64,
}

/// Decomposition of the in-sample window with the pipeline's settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeDiagnostics {
    pub k: usize,
    /// The decomposed in-sample series.
    pub signal: Vec<f64>,
    pub measures: Vec<ModeRow>,
    /// One series per mode over the in-sample window.
    pub modes: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub model: ModelId,
    pub horizon: usize,
    pub mape: f64,
    pub ds: f64,
    pub n_points: usize,
}

/// Diebold-Mariano comparison of `model_a` against `model_b`; a negative
/// statistic favours `model_a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DmRow {
    pub horizon: usize,
    pub model_a: ModelId,
    pub model_b: ModelId,
    pub statistic: Option<f64>,
    pub p_two_sided: Option<f64>,
    /// P-value against the alternative that `model_a` has the smaller loss.
    pub p_less: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PtRow {
    pub model: ModelId,
    pub horizon: usize,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastColumn {
    pub model: ModelId,
    pub horizon: usize,
    pub values: Vec<f64>,
    pub components: Option<Vec<ComponentForecast>>,
}

impl ForecastColumn {
    pub fn header(&self) -> String {
        format!("{}_h{}", self.model, self.horizon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastTable {
    pub dates: Vec<YearMonth>,
    pub actual: Vec<f64>,
    pub columns: Vec<ForecastColumn>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellError {
    pub cell: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub series: SeriesSummary,
    pub pipeline: PipelineConfig,
    pub descriptive: Option<DescriptiveStats>,
    pub modes: Option<ModeDiagnostics>,
    pub accuracy: Vec<AccuracyRow>,
    pub dm_tests: Vec<DmRow>,
    pub pt_tests: Vec<PtRow>,
    pub forecasts: ForecastTable,
    pub errors: Vec<CellError>,
}

impl ReportBundle {
    pub fn accuracy_of(&self, model: ModelId, horizon: usize) -> Option<&AccuracyRow> {
        self.accuracy.iter().find(|r| r.model == model && r.horizon == horizon)
    }

    pub fn dm(&self, horizon: usize, a: ModelId, b: ModelId) -> Option<&DmRow> {
        self.dm_tests
            .iter()
            .find(|r| r.horizon == horizon && r.model_a == a && r.model_b == b)
    }
}

fn mode_diagnostics(in_sample: &[f64], period: usize, pipeline: &PipelineConfig) -> crate::Result<ModeDiagnostics> {
    let k = match pipeline.fixed_k {
        Some(k) => k,
        None => select_mode_count(in_sample, &pipeline.vmd, &pipeline.mode_rule)?,
    };
    let set = decompose(in_sample, &pipeline.vmd.with_k(k))?;
    let labels = label_modes(&set, period)?;
    let names = component_names(&labels);
    let measures = mode_measures(in_sample, &set)?;
    Ok(ModeDiagnostics {
        k,
        signal: in_sample.to_vec(),
        measures: (0..k)
            .map(|j| ModeRow {
                name: names[j].clone(),
                label: labels[j],
                center_frequency: set.center_freqs[j],
                mean_period: measures[j].mean_period,
                correlation: measures[j].correlation,
                variance_pct: measures[j].variance_pct,
            })
            .collect(),
        modes: set.modes,
    })
}

#[allow(clippy::too_many_arguments)]
pub(super) fn assemble(
    series: &TimeSeries,
    source: String,
    n0: usize,
    models: &[ModelId],
    horizons: &[usize],
    config: &RunConfig,
    pipeline: &PipelineConfig,
    cells: &[(ModelId, usize)],
    results: Vec<crate::Result<ForecastResult>>,
) -> ReportBundle {
    let y = series.values();
    let actual = &y[n0..];
    let mut errors = Vec::new();

    let descriptive = descriptive_stats(&y[..n0])
        .map_err(|e| errors.push(CellError {
            cell: "descriptive statistics".into(),
            message: e.to_string(),
        }))
        .ok();
    let modes = mode_diagnostics(&y[..n0], series.period(), pipeline)
        .map_err(|e| errors.push(CellError {
            cell: "mode diagnostics".into(),
            message: e.to_string(),
        }))
        .ok();

    let mut columns = Vec::new();
    let mut accuracy_rows = Vec::new();
    let mut pt_rows = Vec::new();
    for (&(model, horizon), result) in cells.iter().zip(results) {
        let r = match result {
            Ok(r) => r,
            Err(e) => {
                errors.push(CellError {
                    cell: format!("{model} h={horizon}"),
                    message: e.to_string(),
                });
                continue;
            }
        };
        match accuracy(actual, &r.forecasts) {
            Ok(a) => accuracy_rows.push(AccuracyRow {
                model,
                horizon,
                mape: a.mape,
                ds: a.ds,
                n_points: a.n_points,
            }),
            Err(e) => errors.push(CellError {
                cell: format!("{model} h={horizon} accuracy"),
                message: e.to_string(),
            }),
        }
        let pt = pt_test(actual, &r.forecasts);
        pt_rows.push(PtRow {
            model,
            horizon,
            statistic: pt.as_ref().ok().map(|t| t.statistic),
            p_value: pt.as_ref().ok().map(|t| t.p_value),
            note: pt.err().map(|e| e.to_string()),
        });
        columns.push(ForecastColumn {
            model,
            horizon,
            values: r.forecasts,
            components: r.component_forecasts,
        });
    }

    let mut dm_rows = Vec::new();
    for &h in horizons {
        let at_h: Vec<&ForecastColumn> = columns.iter().filter(|c| c.horizon == h).collect();
        let errors_of = |c: &ForecastColumn| -> Vec<f64> { actual.iter().zip(&c.values).map(|(y, f)| y - f).collect() };
        for (i, a) in at_h.iter().enumerate() {
            for b in &at_h[i + 1..] {
                let dm = dm_test(&errors_of(a), &errors_of(b), h);
                dm_rows.push(DmRow {
                    horizon: h,
                    model_a: a.model,
                    model_b: b.model,
                    statistic: dm.as_ref().ok().map(|t| t.statistic),
                    p_two_sided: dm.as_ref().ok().map(|t| t.p_value),
                    p_less: dm.as_ref().ok().map(|t| t.with_alternative(Alternative::Less).p_value),
                    note: dm.err().map(|e| e.to_string()),
                });
            }
        }
    }

    ReportBundle {
        series: SeriesSummary {
            source,
            start: series.start(),
            length: series.len(),
            period: series.period(),
            in_sample_end: n0,
            first_out_of_sample: series.date(n0),
            models: models.to_vec(),
            horizons: horizons.to_vec(),
            seed: config.seed,
        },
        pipeline: pipeline.clone(),
        descriptive,
        modes,
        accuracy: accuracy_rows,
        dm_tests: dm_rows,
        pt_tests: pt_rows,
        forecasts: ForecastTable {
            dates: (n0..series.len()).map(|i| series.date(i)).collect(),
            actual: actual.to_vec(),
            columns,
        },
        errors,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn write_csv(dir: &Path, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), ExperimentError> {
    let path = dir.join(name);
    let io = |source: std::io::Error| ExperimentError::Io {
        path: path.clone(),
        source,
    };
    let mut w = csv::Writer::from_path(&path).map_err(|e| io(e.into()))?;
    w.write_record(header).map_err(|e| io(e.into()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}

pub(super) fn write_files(bundle: &ReportBundle, dir: &Path) -> Result<(), ExperimentError> {
    let json_path = dir.join("report.json");
    let mut json = serde_json::to_string_pretty(bundle).map_err(|e| ExperimentError::Io {
        path: json_path.clone(),
        source: e.into(),
    })?;
    json.push('\n');
    File::create(&json_path)
        .and_then(|mut f| f.write_all(json.as_bytes()))
        .map_err(|source| ExperimentError::Io {
            path: json_path,
            source,
        })?;

    write_csv(
        dir,
        "accuracy.csv",
        &["model", "horizon", "mape", "ds", "n_points"],
        bundle
            .accuracy
            .iter()
            .map(|r| vec![r.model.to_string(), r.horizon.to_string(), r.mape.to_string(), r.ds.to_string(), r.n_points.to_string()])
            .collect(),
    )?;
    write_csv(
        dir,
        "dm_tests.csv",
        &["horizon", "model_a", "model_b", "statistic", "p_two_sided", "p_less", "note"],
        bundle
            .dm_tests
            .iter()
            .map(|r| {
                vec![
                    r.horizon.to_string(),
                    r.model_a.to_string(),
                    r.model_b.to_string(),
                    opt(r.statistic),
                    opt(r.p_two_sided),
                    opt(r.p_less),
                    r.note.clone().unwrap_or_default(),
                ]
            })
            .collect(),
    )?;
    write_csv(
        dir,
        "pt_tests.csv",
        &["model", "horizon", "statistic", "p_value", "note"],
        bundle
            .pt_tests
            .iter()
            .map(|r| {
                vec![
                    r.model.to_string(),
                    r.horizon.to_string(),
                    opt(r.statistic),
                    opt(r.p_value),
                    r.note.clone().unwrap_or_default(),
                ]
            })
            .collect(),
    )?;

    let s = &bundle.series;
    let (mode_header, mode_rows, measure_rows) = match &bundle.modes {
        Some(m) => (
            m.measures.iter().map(|r| r.name.clone()).collect::<Vec<_>>(),
            (0..m.signal.len())
                .map(|t| {
                    let mut row = vec![s.start.add_months(t as i64).to_string(), m.signal[t].to_string()];
                    row.extend(m.modes.iter().map(|mode| mode[t].to_string()));
                    row
                })
                .collect::<Vec<_>>(),
            m.measures
                .iter()
                .map(|r| {
                    vec![
                        r.name.clone(),
                        r.label.as_str().to_string(),
                        r.center_frequency.to_string(),
                        r.mean_period.to_string(),
                        r.correlation.to_string(),
                        r.variance_pct.to_string(),
                    ]
                })
                .collect(),
        ),
        None => (Vec::new(), Vec::new(), Vec::new()),
    };
    let mut header = vec!["date", "value"];
    header.extend(mode_header.iter().map(String::as_str));
    write_csv(dir, "modes.csv", &header, mode_rows)?;
    write_csv(
        dir,
        "mode_measures.csv",
        &["mode", "label", "center_frequency", "mean_period", "correlation", "variance_pct"],
        measure_rows,
    )?;

    let mut header = vec!["date".to_string(), "actual".to_string()];
    header.extend(bundle.forecasts.columns.iter().map(ForecastColumn::header));
    let rows = (0..bundle.forecasts.dates.len())
        .map(|i| {
            let mut row = vec![bundle.forecasts.dates[i].to_string(), bundle.forecasts.actual[i].to_string()];
            row.extend(bundle.forecasts.columns.iter().map(|c| c.values[i].to_string()));
            row
        })
        .collect();
    write_csv(dir, "forecasts.csv", &header.iter().map(String::as_str).collect::<Vec<_>>(), rows)
}
