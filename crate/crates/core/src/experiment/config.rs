//! Run configuration: a flat `key = value` file plus command-line overrides.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::ExperimentError;
use crate::pipeline::{CombinerForm, ModelId, PipelineConfig, TargetForm, MIN_IN_SAMPLE};
use crate::series::{TimeSeries, YearMonth};
use crate::synthetic::SyntheticSpec;

/// Where the in-sample window ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPoint {
    /// Last in-sample month (`2016-12`).
    LastInSample(YearMonth),
    /// Share of the series kept in sample (`0.8`).
    Fraction(f64),
    /// Number of in-sample points (`160`).
    InSample(usize),
    /// Number of trailing out-of-sample points (`holdout:24`).
    Holdout(usize),
}

impl SplitPoint {
    /// In-sample length for `series`.
    pub fn resolve(&self, series: &TimeSeries) -> crate::Result<usize> {
        let n = series.len();
        let n0 = match *self {
            SplitPoint::LastInSample(d) => {
                let k = d.months_since(&series.start());
                if k < 0 || k as usize >= n {
                    return Err(crate::Error::InvalidInput(format!(
                        "split month {d} is outside the series ({} to {})",
                        series.start(),
                        series.date(n - 1)
                    )));
                }
                k as usize + 1
            }
            SplitPoint::Fraction(f) => (f * n as f64).floor() as usize,
            SplitPoint::InSample(k) => k,
            SplitPoint::Holdout(k) => n.saturating_sub(k),
        };
        if n0 >= n {
            return Err(crate::Error::InvalidInput(format!(
                "split {self:?} leaves no out-of-sample points in a series of length {n}"
            )));
        }
        Ok(n0)
    }
}

impl FromStr for SplitPoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some(k) = s.strip_prefix("holdout:") {
            return k
                .trim()
                .parse()
                .map(SplitPoint::Holdout)
                .map_err(|_| format!("bad holdout length {k:?}"));
        }
        if s.contains('-') {
            return s.parse().map(SplitPoint::LastInSample).map_err(|e: crate::Error| e.to_string());
        }
        if s.contains('.') {
            let f: f64 = s.parse().map_err(|_| format!("bad split fraction {s:?}"))?;
            if !(f > 0.0 && f < 1.0) {
                return Err(format!("split fraction must lie in (0, 1), got {f}"));
            }
            return Ok(SplitPoint::Fraction(f));
        }
        s.parse()
            .map(SplitPoint::InSample)
            .map_err(|_| format!("cannot read split {s:?}; use YYYY-MM, a fraction, a count or holdout:N"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    /// Generate the series instead of reading `input`.
    pub synthetic: Option<SyntheticSpec>,
    pub date_column: String,
    pub value_column: String,
    pub period: usize,
    pub split: SplitPoint,
    pub horizons: Vec<usize>,
    pub models: Vec<ModelId>,
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads for the experiment cells; all cores when unset.
    pub workers: Option<usize>,
    #[serde(skip)]
    pub pipeline: PipelineConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            synthetic: None,
            date_column: "date".into(),
            value_column: "value".into(),
            period: 12,
            split: SplitPoint::Holdout(24),
            horizons: vec![1, 3, 6],
            models: ModelId::ALL.to_vec(),
            seed: 42,
            out: PathBuf::from("out"),
            workers: None,
            pipeline: PipelineConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("bad value {value:?} for {key}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("bad value {value:?} for {key}; expected true or false")),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse().map_err(|_| format!("bad entry {v:?} in {key}")))
        .collect()
}

impl RunConfig {
    /// Reads a config file on top of the defaults. Lines are `key = value`;
    /// `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = RunConfig::default();
        config.apply_text(&text, &path.display().to_string())?;
        Ok(config)
    }

    /// Applies `key = value` lines; `origin` names the source in errors.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ExperimentError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = format!("{origin}:{}", i + 1);
            let (key, value) = line.split_once('=').ok_or_else(|| ExperimentError::Config {
                origin: at.clone(),
                message: format!("expected key = value, got {line:?}"),
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|message| ExperimentError::Config { origin: at, message })?;
        }
        Ok(())
    }

    /// Sets one option by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let p = &mut self.pipeline;
        match key {
            "input" => self.input = Some(PathBuf::from(value)),
            "synthetic" => self.synthetic = Some(value.parse().map_err(|e: crate::Error| e.to_string())?),
            "date_column" => self.date_column = value.to_string(),
            "value_column" => self.value_column = value.to_string(),
            "period" => self.period = parse(key, value)?,
            "split" => self.split = value.parse()?,
            "horizons" => self.horizons = parse_list(key, value)?,
            "models" => {
                self.models = parse_list(key, value).map_err(|e| format!("{e}; known models: {}", known_models()))?
            }
            "seed" => self.seed = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "workers" => self.workers = Some(parse(key, value)?),
            "vmd.alpha" => p.vmd.alpha = parse(key, value)?,
            "vmd.tau" => p.vmd.tau = parse(key, value)?,
            "vmd.tol" => p.vmd.tol = parse(key, value)?,
            "vmd.max_iter" => p.vmd.max_iter = parse(key, value)?,
            "vmd.k" => p.fixed_k = if value == "auto" { None } else { Some(parse(key, value)?) },
            "vmd.k_max" => p.mode_rule.k_max = parse(key, value)?,
            "arima.max_p" => p.arima.max_p = parse(key, value)?,
            "arima.max_q" => p.arima.max_q = parse(key, value)?,
            "arima.max_d" => p.arima.max_d = parse(key, value)?,
            "arima.max_seasonal_p" => p.arima.max_seasonal_p = parse(key, value)?,
            "arima.max_seasonal_q" => p.arima.max_seasonal_q = parse(key, value)?,
            "arima.max_seasonal_d" => p.arima.max_seasonal_d = parse(key, value)?,
            "arima.allow_drift" => p.arima.allow_drift = parse_bool(key, value)?,
            "mlp.hidden" => p.mlp.hidden = parse(key, value)?,
            "mlp.epochs" => p.mlp.epochs = parse(key, value)?,
            "mlp.learning_rate" => p.mlp.learning_rate = parse(key, value)?,
            "mlp.momentum" => p.mlp.momentum = parse(key, value)?,
            "pmi.max_lags" => p.pmi.max_lags = parse(key, value)?,
            "pmi.permutations" => p.pmi.permutations = parse(key, value)?,
            "stat_refit_every" => p.stat_refit_every = parse(key, value)?,
            "ml_refit_every" => {
                p.ml_refit_every = if value == "none" { None } else { Some(parse(key, value)?) }
            }
            "redecompose" => p.redecompose = parse_bool(key, value)?,
            "refresh_decomposition" => p.refresh_decomposition = parse_bool(key, value)?,
            "edge_trim" => p.edge_trim = parse(key, value)?,
            "combiner" => {
                p.combiner = match value {
                    "direct" => CombinerForm::Direct,
                    "residual" => CombinerForm::Residual,
                    _ => return Err(format!("combiner must be direct or residual, got {value:?}")),
                }
            }
            "target_form" => {
                p.target_form = match value {
                    "level" => TargetForm::Level,
                    "relative" => TargetForm::Relative,
                    "auto" => TargetForm::Auto,
                    _ => return Err(format!("target_form must be level, relative or auto, got {value:?}")),
                }
            }
            _ => return Err(format!("unknown option {key:?}")),
        }
        Ok(())
    }

    /// Pipeline settings with the run seed applied.
    pub fn pipeline_config(&self) -> PipelineConfig {
        self.pipeline.clone().with_seed(self.seed)
    }

    /// Checks everything that does not need the data.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |message: String| ExperimentError::Config {
            origin: "configuration".into(),
            message,
        };
        match (&self.input, &self.synthetic) {
            (None, None) => return Err(fail("either an input file or a synthetic spec is required".into())),
            (Some(_), Some(_)) => return Err(fail("give an input file or a synthetic spec, not both".into())),
            _ => {}
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(fail("horizons must be a nonempty list of positive integers".into()));
        }
        if self.models.is_empty() {
            return Err(fail("no models selected".into()));
        }
        if self.period < 2 {
            return Err(fail(format!("seasonal period must be at least 2, got {}", self.period)));
        }
        if self.workers == Some(0) {
            return Err(fail("workers must be at least 1".into()));
        }
        self.pipeline.validate().map_err(|e| fail(e.to_string()))
    }

    /// In-sample length for `series`, checked against the longest horizon.
    pub fn in_sample_end(&self, series: &TimeSeries) -> Result<usize, ExperimentError> {
        let n0 = self.split.resolve(series)?;
        let h_max = self.horizons.iter().copied().max().unwrap_or(1);
        if n0 < MIN_IN_SAMPLE + h_max {
            return Err(ExperimentError::Config {
                origin: "split".into(),
                message: format!(
                    "{n0} in-sample points; need at least {} for horizons up to {h_max}",
                    MIN_IN_SAMPLE + h_max
                ),
            });
        }
        Ok(n0)
    }
}

fn known_models() -> String {
    ModelId::ALL.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(", ")
}
