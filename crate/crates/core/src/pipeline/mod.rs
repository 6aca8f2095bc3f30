//! The decomposition-ensemble forecasting framework and its benchmarks.
//!
//! Every model is evaluated by rolling origin. For horizon `h` and an
//! in-sample size `n0`, the out-of-sample target `y[tau]` (`tau >= n0`) is
//! forecast at origin `o = tau - h` from `y[..=o]` alone. Components that
//! are fit once (decompositions, lag sets, learners, the combiner) are fit
//! on `y[..=n0 - h]`, the history available at the first origin.
//!
//! Decomposition models never decompose past the first origin (unless
//! `redecompose` is set). Instead the modes are extended causally: every
//! mode but one takes its own one-step forecast, and the absorbing mode
//! (volatility) takes whatever is left of the new observation. All new
//! information therefore reaches the forecasts through that mode.

pub mod combiner;
pub mod lags;
pub mod learner;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arima::{auto_fit, kpss_statistic, ArimaModel, SearchBounds, KPSS_CRITICAL_5PCT};
use crate::error::{Error, Result, ResultExt};
use crate::mlp::MlpConfig;
use crate::numerics::Matrix;
use crate::par;
use crate::series::TimeSeries;
use crate::vmd::{self, classify_modes, Boundary, decompose, mean_period, ComponentLabel, ModeCountRule, VmdConfig};

pub use combiner::{ensemble_combine, Combiner, CombinerForm};
pub use lags::{build_direct_dataset, select_lags_pmi, LagSet, PmiConfig};
pub use learner::{DirectModel, LearnerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelId {
    #[serde(rename = "AME")]
    Ame,
    #[serde(rename = "VMD-LSSVR")]
    VmdLssvr,
    #[serde(rename = "VMD-SVR")]
    VmdSvr,
    #[serde(rename = "VMD-MLP")]
    VmdMlp,
    #[serde(rename = "LSSVR")]
    Lssvr,
    #[serde(rename = "SVR")]
    Svr,
    #[serde(rename = "MLP")]
    Mlp,
    #[serde(rename = "SARIMA")]
    Sarima,
    #[serde(rename = "ARIMA")]
    Arima,
}

impl ModelId {
    pub const ALL: [ModelId; 9] = [
        ModelId::Ame,
        ModelId::VmdLssvr,
        ModelId::VmdSvr,
        ModelId::VmdMlp,
        ModelId::Lssvr,
        ModelId::Svr,
        ModelId::Mlp,
        ModelId::Sarima,
        ModelId::Arima,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelId::Ame => "AME",
            ModelId::VmdLssvr => "VMD-LSSVR",
            ModelId::VmdSvr => "VMD-SVR",
            ModelId::VmdMlp => "VMD-MLP",
            ModelId::Lssvr => "LSSVR",
            ModelId::Svr => "SVR",
            ModelId::Mlp => "MLP",
            ModelId::Sarima => "SARIMA",
            ModelId::Arima => "ARIMA",
        }
    }

    pub fn is_decomposition(&self) -> bool {
        matches!(self, ModelId::Ame | ModelId::VmdLssvr | ModelId::VmdSvr | ModelId::VmdMlp)
    }

    /// The single-model counterpart of a `VMD-X` model.
    pub fn single_counterpart(&self) -> Option<ModelId> {
        match self {
            ModelId::VmdLssvr => Some(ModelId::Lssvr),
            ModelId::VmdSvr => Some(ModelId::Svr),
            ModelId::VmdMlp => Some(ModelId::Mlp),
            _ => None,
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim();
        ModelId::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(key))
            .ok_or_else(|| {
                let known: Vec<&str> = ModelId::ALL.iter().map(|m| m.as_str()).collect();
                Error::invalid(format!("unknown model {key:?}; expected one of {}", known.join(", ")))
            })
    }
}

/// Minimum in-sample length for any model.
pub const MIN_IN_SAMPLE: usize = 48;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Number of in-sample observations; out-of-sample starts at this index.
    pub in_sample_end: usize,
    pub horizons: Vec<usize>,
}

impl SplitSpec {
    pub fn validate(&self, series_len: usize) -> Result<()> {
        if self.in_sample_end >= series_len {
            return Err(Error::invalid(format!(
                "in-sample size {} leaves no out-of-sample data in a series of length {series_len}",
                self.in_sample_end
            )));
        }
        if self.horizons.is_empty() {
            return Err(Error::invalid("no forecast horizons given"));
        }
        if let Some(h) = self.horizons.iter().find(|h| **h == 0) {
            return Err(Error::invalid(format!("horizon {h} must be at least 1")));
        }
        let h_max = *self.horizons.iter().max().expect("nonempty");
        if self.in_sample_end < MIN_IN_SAMPLE + h_max {
            return Err(Error::invalid(format!(
                "in-sample size {} is below {MIN_IN_SAMPLE} plus the largest horizon {h_max}",
                self.in_sample_end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentForecast {
    pub name: String,
    pub label: Option<ComponentLabel>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub model: ModelId,
    pub horizon: usize,
    /// One value per out-of-sample index.
    pub forecasts: Vec<f64>,
    pub component_forecasts: Option<Vec<ComponentForecast>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub vmd: VmdConfig,
    pub mode_rule: ModeCountRule,
    /// Skip mode-count selection and use this many modes.
    pub fixed_k: Option<usize>,
    pub arima: SearchBounds,
    pub mlp: MlpConfig,
    pub pmi: PmiConfig,
    /// Refit the single ARIMA/SARIMA benchmarks every this many origins;
    /// in between the last fit is run over the new data unchanged.
    pub stat_refit_every: usize,
    /// Refit the single ML benchmarks (same lags) every this many origins;
    /// `None` keeps the first fit.
    pub ml_refit_every: Option<usize>,
    /// Redo the whole decomposition pipeline at every origin.
    pub redecompose: bool,
    /// Decompose the data available at each origin again and rebuild its
    /// trimmed edge causally, keeping the per-mode models from the first
    /// origin. Without it the modes past the first origin come from the
    /// causal extension alone.
    pub refresh_decomposition: bool,
    pub target_form: TargetForm,
    /// Trailing in-sample observations over which the decomposition is
    /// distrusted: per-mode models are fit on the modes up to this many
    /// steps before the first origin, and the modes are extended causally
    /// over the remainder as they are after it.
    pub edge_trim: usize,
    pub combiner: CombinerForm,
}

/// How the ML learners see their series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetForm {
    /// Raw lagged levels to the future level.
    Level,
    /// Lags and target relative to the value at the origin.
    Relative,
    /// `Relative` when a KPSS test rejects level stationarity of the
    /// training series, `Level` otherwise.
    Auto,
}

impl TargetForm {
    fn relative_for(&self, series: &[f64]) -> Result<bool> {
        Ok(match self {
            TargetForm::Level => false,
            TargetForm::Relative => true,
            TargetForm::Auto => kpss_statistic(series)? > KPSS_CRITICAL_5PCT,
        })
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            vmd: VmdConfig {
                boundary: Boundary::DetrendedMirror,
                ..VmdConfig::default()
            },
            mode_rule: ModeCountRule::default(),
            fixed_k: None,
            arima: SearchBounds::default(),
            mlp: MlpConfig::default(),
            pmi: PmiConfig::default(),
            stat_refit_every: 1,
            ml_refit_every: None,
            redecompose: false,
            refresh_decomposition: false,
            target_form: TargetForm::Auto,
            edge_trim: 12,
            combiner: CombinerForm::Residual,
        }
    }
}

impl PipelineConfig {
    /// Uses `seed` for every seeded step (MLP initialization, PMI nulls).
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.mlp.seed = seed;
        self.pmi.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.vmd.validate()?;
        self.mlp.validate()?;
        if self.stat_refit_every == 0 || self.ml_refit_every == Some(0) {
            return Err(Error::invalid("refit cadence must be at least 1"));
        }
        if let Some(k) = self.fixed_k {
            if !(2..=10).contains(&k) {
                return Err(Error::invalid(format!("mode count must be in 2..=10, got {k}")));
            }
        }
        Ok(())
    }
}

/// Runs the decomposition-ensemble model at every horizon of the split.
pub fn run_ame(series: &TimeSeries, split: &SplitSpec, config: &PipelineConfig) -> Result<Vec<ForecastResult>> {
    run_model(series, split, ModelId::Ame, config)
}

/// Runs one of the eight benchmark models at every horizon of the split.
pub fn run_benchmark(
    series: &TimeSeries,
    split: &SplitSpec,
    model: ModelId,
    config: &PipelineConfig,
) -> Result<Vec<ForecastResult>> {
    if model == ModelId::Ame {
        return Err(Error::invalid("AME is not a benchmark; use run_ame"));
    }
    run_model(series, split, model, config)
}

/// Any of the nine models, at every horizon of the split.
pub fn run_model(
    series: &TimeSeries,
    split: &SplitSpec,
    model: ModelId,
    config: &PipelineConfig,
) -> Result<Vec<ForecastResult>> {
    split.validate(series.len())?;
    par::map(&split.horizons, |&h| run_horizon(series, split.in_sample_end, model, h, config))
        .into_iter()
        .collect()
}

/// One (model, horizon) cell.
pub fn run_horizon(
    series: &TimeSeries,
    in_sample_end: usize,
    model: ModelId,
    h: usize,
    config: &PipelineConfig,
) -> Result<ForecastResult> {
    SplitSpec {
        in_sample_end,
        horizons: vec![h],
    }
    .validate(series.len())?;
    config.validate()?;
    let y = series.values();
    let window = Window {
        n0: in_sample_end,
        n: y.len(),
        h,
    };
    let (forecasts, component_forecasts) = match model {
        ModelId::Arima => (statistical(y, window, 0, config)?, None),
        ModelId::Sarima => (statistical(y, window, series.period(), config)?, None),
        ModelId::Lssvr => (single_learner(y, window, LearnerKind::Lssvr, config)?, None),
        ModelId::Svr => (single_learner(y, window, LearnerKind::Svr, config)?, None),
        ModelId::Mlp => (single_learner(y, window, LearnerKind::Mlp, config)?, None),
        ModelId::Ame | ModelId::VmdLssvr | ModelId::VmdSvr | ModelId::VmdMlp => {
            let scheme = match model {
                ModelId::Ame => Scheme::Ensemble,
                ModelId::VmdLssvr => Scheme::Additive(LearnerKind::Lssvr),
                ModelId::VmdSvr => Scheme::Additive(LearnerKind::Svr),
                _ => Scheme::Additive(LearnerKind::Mlp),
            };
            let (f, c) = decomposition(y, window, series.period(), scheme, config)?;
            (f, Some(c))
        }
    };
    debug_assert_eq!(forecasts.len(), window.n - window.n0);
    if let Some(i) = forecasts.iter().position(|v| !v.is_finite()) {
        return Err(Error::numerical(format!(
            "{model} produced a non-finite forecast at out-of-sample index {i} (h = {h})"
        )));
    }
    Ok(ForecastResult {
        model,
        horizon: h,
        forecasts,
        component_forecasts,
    })
}

#[derive(Debug, Clone, Copy)]
struct Window {
    n0: usize,
    n: usize,
    h: usize,
}

impl Window {
    fn first_origin(&self) -> usize {
        self.n0 - self.h
    }

    fn last_origin(&self) -> usize {
        self.n - 1 - self.h
    }

    /// Origins grouped into refit blocks of `every` consecutive origins.
    fn blocks(&self, every: usize) -> Vec<Vec<usize>> {
        let origins: Vec<usize> = (self.first_origin()..=self.last_origin()).collect();
        origins.chunks(every).map(<[usize]>::to_vec).collect()
    }
}

fn statistical(y: &[f64], window: Window, period: usize, config: &PipelineConfig) -> Result<Vec<f64>> {
    let what = if period > 0 { "SARIMA" } else { "ARIMA" };
    let blocks = window.blocks(config.stat_refit_every);
    let out = par::map(&blocks, |block| -> Result<Vec<f64>> {
        let mut model: Option<ArimaModel> = None;
        block
            .iter()
            .map(|&o| {
                let hist = &y[..=o];
                let m = match &model {
                    None => auto_fit(hist, period, &config.arima)
                        .context(|| format!("{what} fit at origin {o}"))?,
                    Some(m) => m.refilter(hist)?,
                };
                let f = m.forecast(window.h)?[window.h - 1];
                model = Some(m);
                Ok(f)
            })
            .collect()
    });
    Ok(out.into_iter().collect::<Result<Vec<_>>>()?.concat())
}

fn single_learner(y: &[f64], window: Window, kind: LearnerKind, config: &PipelineConfig) -> Result<Vec<f64>> {
    let h = window.h;
    let train = &y[..=window.first_origin()];
    let lags = select_lags_pmi(train, h, &config.pmi).context(|| "lag selection".into())?;
    log::debug!("{kind:?} h={h}: lags {:?}", lags.selection_order());
    let relative = config.target_form.relative_for(train)?;
    let fit = |hist: &[f64]| {
        DirectModel::fit(hist, lags.clone(), h, kind, relative, &config.mlp)
            .context(|| format!("{kind:?} fit on {} observations", hist.len()))
    };
    match config.ml_refit_every {
        None => {
            let model = fit(train)?;
            (window.first_origin()..=window.last_origin())
                .map(|o| model.predict_at(y, o))
                .collect()
        }
        Some(every) => {
            let blocks = window.blocks(every);
            let out = par::map(&blocks, |block| -> Result<Vec<f64>> {
                let model = fit(&y[..=block[0]])?;
                block.iter().map(|&o| model.predict_at(y, o)).collect()
            });
            Ok(out.into_iter().collect::<Result<Vec<_>>>()?.concat())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scheme {
    /// Trend by ARIMA, seasonal by SARIMA, volatility by LSSVR, fused by the
    /// LSSVR combiner.
    Ensemble,
    /// Every mode by the same learner, summed.
    Additive(LearnerKind),
}

/// Labels for any number of modes sorted by center frequency: the first is
/// the trend, the later mode whose mean period is closest to the seasonal
/// period is seasonal, the rest are volatility.
pub fn label_modes(modes: &vmd::ModeSet, period: usize) -> Result<Vec<ComponentLabel>> {
    let k = modes.k();
    if k == 3 {
        return classify_modes(modes, period);
    }
    let mut labels = vec![ComponentLabel::Volatility; k];
    labels[0] = ComponentLabel::Trend;
    let target = period as f64;
    let seasonal = (1..k)
        .min_by(|&a, &b| {
            let da = (mean_period(&modes.modes[a]) - target).abs();
            let db = (mean_period(&modes.modes[b]) - target).abs();
            da.total_cmp(&db)
        })
        .expect("at least two modes");
    labels[seasonal] = ComponentLabel::Seasonal;
    Ok(labels)
}

/// Label names, numbered when a label repeats (`volatility1`, ...).
pub fn component_names(labels: &[ComponentLabel]) -> Vec<String> {
    let mut seen = std::collections::BTreeMap::new();
    labels
        .iter()
        .map(|l| {
            if labels.iter().filter(|m| *m == l).count() > 1 {
                let count = seen.entry(l.as_str()).or_insert(0);
                *count += 1;
                format!("{}{}", l.as_str(), count)
            } else {
                l.as_str().to_string()
            }
        })
        .collect()
}

enum ModeForecaster {
    Arima(ArimaModel),
    Learner { h_step: DirectModel, one_step: DirectModel },
}

impl ModeForecaster {
    fn fit(mode: &[f64], label: &str, arima_period: Option<usize>, kind: LearnerKind, h: usize, config: &PipelineConfig) -> Result<Self> {
        let ctx = |e: Error| e.context(format!("{label} component"));
        if let Some(period) = arima_period {
            // The trend mode is smooth, so KPSS keeps asking for a second
            // difference, which discards its slope. One difference plus drift
            // keeps it.
            let bounds = if period == 0 {
                SearchBounds { max_d: config.arima.max_d.min(1), ..config.arima }
            } else {
                config.arima
            };
            return auto_fit(mode, period, &bounds).map(ModeForecaster::Arima).map_err(ctx);
        }
        let relative = config.target_form.relative_for(mode).map_err(ctx)?;
        let fit_at = |h: usize| -> Result<DirectModel> {
            let lags = select_lags_pmi(mode, h, &config.pmi)?;
            DirectModel::fit(mode, lags, h, kind, relative, &config.mlp)
        };
        let h_step = fit_at(h).map_err(ctx)?;
        let one_step = if h == 1 { h_step.clone() } else { fit_at(1).map_err(ctx)? };
        Ok(ModeForecaster::Learner { h_step, one_step })
    }

    /// Forecast of the value following `hist` by `h` steps.
    fn forecast(&self, hist: &[f64], h: usize) -> Result<f64> {
        let o = hist.len() - 1;
        match self {
            ModeForecaster::Arima(m) => Ok(m.refilter(hist)?.forecast(h)?[h - 1]),
            ModeForecaster::Learner { h_step, one_step } => {
                if h == one_step.horizon {
                    one_step.predict_at(hist, o)
                } else {
                    h_step.predict_at(hist, o)
                }
            }
        }
    }

    /// In-sample one-step fitted values over the training mode.
    fn one_step_fitted(&self, train: &[f64]) -> Result<Vec<Option<f64>>> {
        match self {
            ModeForecaster::Arima(m) => m.one_step_fitted(train),
            ModeForecaster::Learner { one_step, .. } => one_step.fitted(train),
        }
    }
}

fn decomposition(
    y: &[f64],
    window: Window,
    period: usize,
    scheme: Scheme,
    config: &PipelineConfig,
) -> Result<(Vec<f64>, Vec<ComponentForecast>)> {
    if !config.redecompose {
        return decompose_and_forecast(y, window.first_origin(), window.last_origin(), window.h, period, scheme, config);
    }
    let origins: Vec<usize> = (window.first_origin()..=window.last_origin()).collect();
    let runs = par::map(&origins, |&o| decompose_and_forecast(y, o, o, window.h, period, scheme, config))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let forecasts = runs.iter().map(|(f, _)| f[0]).collect();
    // Mode counts may differ between origins; keep names from the first run
    // and only report components when every run agrees on them.
    let names: Vec<String> = runs[0].1.iter().map(|c| c.name.clone()).collect();
    let consistent = runs
        .iter()
        .all(|(_, c)| c.iter().map(|c| &c.name).eq(names.iter()));
    let components = if consistent {
        (0..names.len())
            .map(|j| ComponentForecast {
                name: names[j].clone(),
                label: runs[0].1[j].label,
                values: runs.iter().map(|(_, c)| c[j].values[0]).collect(),
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok((forecasts, components))
}

/// Decomposes `y[..=first]`, fits the per-mode models, extends the modes
/// causally to `last` (from `edge_trim` steps before `first`), and forecasts `h` steps ahead from every origin in
/// `first..=last`.
fn decompose_and_forecast(
    y: &[f64],
    first: usize,
    last: usize,
    h: usize,
    period: usize,
    scheme: Scheme,
    config: &PipelineConfig,
) -> Result<(Vec<f64>, Vec<ComponentForecast>)> {
    let train = &y[..=first];
    let k = match config.fixed_k {
        Some(k) => k,
        None => vmd::select_mode_count(train, &config.vmd, &config.mode_rule)
            .context(|| "mode-count selection".into())?,
    };
    let set = decompose(train, &config.vmd.with_k(k)).context(|| "decomposition".into())?;
    let labels = label_modes(&set, period)?;
    let names: Vec<String> = match scheme {
        Scheme::Ensemble => component_names(&labels),
        Scheme::Additive(_) => (1..=k).map(|j| format!("mode{j}")).collect(),
    };
    let absorbing = match scheme {
        Scheme::Ensemble => labels
            .iter()
            .rposition(|l| *l == ComponentLabel::Volatility)
            .unwrap_or(k - 1),
        Scheme::Additive(_) => k - 1,
    };

    // The absorbing mode takes the decomposition residual too, so the modes
    // add up to the series both in sample and after the first origin.
    // Models only see the modes up to `fit_end`; the trimmed edge is
    // rebuilt below by the same causal extension used past the origin.
    let fit_end = first.checked_sub(config.edge_trim).filter(|e| *e + 1 >= MIN_IN_SAMPLE / 2).ok_or_else(|| {
        Error::invalid(format!(
            "edge trim {} leaves too little history before origin {first}",
            config.edge_trim
        ))
    })?;
    let modes = trimmed_modes(&set.modes, train, fit_end, absorbing);

    let idx: Vec<usize> = (0..k).collect();
    let forecasters = par::map(&idx, |&j| {
        let (arima_period, kind) = match scheme {
            Scheme::Ensemble => match labels[j] {
                ComponentLabel::Trend => (Some(0), LearnerKind::Lssvr),
                ComponentLabel::Seasonal => (Some(period), LearnerKind::Lssvr),
                ComponentLabel::Volatility => (None, LearnerKind::Lssvr),
            },
            Scheme::Additive(kind) => (None, kind),
        };
        ModeForecaster::fit(&modes[j], &names[j], arima_period, kind, h, config)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let extend = |modes: Vec<Vec<f64>>, to: usize| extend_modes(modes, y, to, absorbing, &forecasters, &names);

    let origins: Vec<usize> = (first..=last).collect();
    let per_origin: Vec<Vec<f64>> = if config.refresh_decomposition {
        par::map(&origins, |&o| -> Result<Vec<f64>> {
            let ext = if o == first {
                extend(modes.clone(), o)?
            } else {
                let set = decompose(&y[..=o], &config.vmd.with_k(k))
                    .context(|| format!("decomposition at origin {o}"))?;
                extend(trimmed_modes(&set.modes, &y[..=o], o - config.edge_trim, absorbing), o)?
            };
            (0..k)
                .map(|j| forecasters[j].forecast(&ext[j], h).context(|| format!("{} component forecast", names[j])))
                .collect()
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?
    } else {
        let ext = extend(modes.clone(), last)?;
        let by_mode = par::map(&idx, |&j| {
            origins
                .iter()
                .map(|&o| forecasters[j].forecast(&ext[j][..=o], h))
                .collect::<Result<Vec<f64>>>()
                .context(|| format!("{} component forecast", names[j]))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        (0..origins.len()).map(|i| by_mode.iter().map(|c| c[i]).collect()).collect()
    };
    let component_values: Vec<Vec<f64>> = (0..k).map(|j| per_origin.iter().map(|r| r[j]).collect()).collect();

    let forecasts: Vec<f64> = match scheme {
        Scheme::Additive(_) => per_origin.iter().map(|r| r.iter().sum()).collect(),
        Scheme::Ensemble => {
            let fitted = forecasters
                .iter()
                .zip(&modes)
                .map(|(f, m)| f.one_step_fitted(m))
                .collect::<Result<Vec<_>>>()?;
            let mut rows = Vec::new();
            let mut target = Vec::new();
            for t in 0..=fit_end {
                if let Some(row) = fitted.iter().map(|f| f[t]).collect::<Option<Vec<f64>>>() {
                    rows.push(row);
                    target.push(y[t]);
                }
            }
            if rows.is_empty() {
                return Err(Error::invalid("no in-sample rows where every component has a fitted value"));
            }
            let (combiner, _) = ensemble_combine(&Matrix::from_rows(&rows)?, &target, config.combiner)
                .context(|| "ensemble combiner".into())?;
            per_origin.iter().map(|r| combiner.predict(r)).collect::<Result<Vec<_>>>()?
        }
    };
    let components = names
        .into_iter()
        .zip(component_values)
        .zip(&labels)
        .map(|((name, values), label)| ComponentForecast {
            name,
            label: matches!(scheme, Scheme::Ensemble).then_some(*label),
            values,
        })
        .collect();
    Ok((forecasts, components))
}

/// The modes up to `fit_end`, with the absorbing mode replaced by what the
/// others leave of the series (so it also carries the decomposition residual).
fn trimmed_modes(modes: &[Vec<f64>], y: &[f64], fit_end: usize, absorbing: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = modes.iter().map(|m| m[..=fit_end].to_vec()).collect();
    out[absorbing] = (0..=fit_end)
        .map(|t| y[t] - (0..modes.len()).filter(|&j| j != absorbing).map(|j| modes[j][t]).sum::<f64>())
        .collect();
    out
}

/// Extends the modes to `to` one step at a time: every mode but the
/// absorbing one takes its own one-step forecast, and the absorbing mode
/// takes whatever of `y[t]` the others leave.
fn extend_modes(
    mut modes: Vec<Vec<f64>>,
    y: &[f64],
    to: usize,
    absorbing: usize,
    forecasters: &[ModeForecaster],
    names: &[String],
) -> Result<Vec<Vec<f64>>> {
    for t in modes[0].len()..=to {
        let mut others = 0.0;
        for j in (0..modes.len()).filter(|&j| j != absorbing) {
            let v = forecasters[j]
                .forecast(&modes[j], 1)
                .context(|| format!("extending {} to t = {t}", names[j]))?;
            modes[j].push(v);
            others += v;
        }
        modes[absorbing].push(y[t] - others);
    }
    Ok(modes)
}
