//! Direct-strategy machine-learning forecasters (one model per horizon).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::{self, MlpConfig, MlpModel};
use crate::numerics::{mean, std_dev, Matrix};
use crate::svr::{default_hyperparams, FittedKernelMachine, KernelMachine};

use super::lags::{build_direct_dataset, LagSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Lssvr,
    Svr,
    Mlp,
}

/// Affine standardization `(v - center) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub center: f64,
    pub scale: f64,
}

impl Standardizer {
    pub fn fit(values: &[f64]) -> Self {
        let s = std_dev(values);
        Standardizer {
            center: mean(values),
            scale: if s > 0.0 { s } else { 1.0 },
        }
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.center) / self.scale
    }

    pub fn invert(&self, v: f64) -> f64 {
        self.center + v * self.scale
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum Learner {
    Kernel(FittedKernelMachine),
    Mlp(MlpModel),
}

/// A fitted `h`-step direct forecaster.
///
/// In origin-relative form the model sees `[y_t, y_{t-l+1} - y_t, ...]`
/// (anchored at the smallest lag) and learns `y_{t+h} - y_t`; the forecast
/// adds `y_t` back. This keeps trending levels from leaving the region the
/// kernel was trained on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectModel {
    pub kind: LearnerKind,
    pub lags: LagSet,
    pub horizon: usize,
    pub origin_relative: bool,
    features: Vec<Standardizer>,
    target: Standardizer,
    learner: Learner,
}

fn relative_row(levels: &[f64]) -> Vec<f64> {
    let anchor = levels[0];
    std::iter::once(anchor)
        .chain(levels[1..].iter().map(|v| v - anchor))
        .collect()
}

impl DirectModel {
    pub fn fit(
        series: &[f64],
        lags: LagSet,
        horizon: usize,
        kind: LearnerKind,
        origin_relative: bool,
        mlp_config: &MlpConfig,
    ) -> Result<Self> {
        let (x, y) = build_direct_dataset(series, &lags, horizon)?;
        if x.rows() < 10 {
            return Err(Error::invalid(format!(
                "{} training rows for lags up to {} at horizon {horizon}; need at least 10",
                x.rows(),
                lags.max()
            )));
        }
        let (rows, target): (Vec<Vec<f64>>, Vec<f64>) = if origin_relative {
            x.iter_rows()
                .zip(&y)
                .map(|(r, t)| (relative_row(r), t - r[0]))
                .unzip()
        } else {
            (x.iter_rows().map(|r| r.to_vec()).collect(), y)
        };
        let features: Vec<Standardizer> = (0..x.cols())
            .map(|j| Standardizer::fit(&rows.iter().map(|r| r[j]).collect::<Vec<_>>()))
            .collect();
        let target_scale = Standardizer::fit(&target);
        let xs: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().zip(&features).map(|(v, s)| s.apply(*v)).collect())
            .collect();
        let xs = Matrix::from_rows(&xs)?;
        let ys: Vec<f64> = target.iter().map(|v| target_scale.apply(*v)).collect();
        let learner = match kind {
            LearnerKind::Lssvr | LearnerKind::Svr => {
                let machine = if kind == LearnerKind::Lssvr {
                    KernelMachine::Lssvr
                } else {
                    KernelMachine::Svr
                };
                Learner::Kernel(FittedKernelMachine::fit(machine, &xs, &ys, default_hyperparams(&ys)?)?)
            }
            LearnerKind::Mlp => Learner::Mlp(mlp::train(&xs, &ys, mlp_config)?),
        };
        Ok(DirectModel {
            kind,
            lags,
            horizon,
            origin_relative,
            features,
            target: target_scale,
            learner,
        })
    }

    /// Forecast of `series[origin + h]` from `series[..=origin]`.
    pub fn predict_at(&self, series: &[f64], origin: usize) -> Result<f64> {
        if origin + 1 < self.lags.max() || origin >= series.len() {
            return Err(Error::invalid(format!(
                "origin {origin} needs {} values of history within a series of length {}",
                self.lags.max(),
                series.len()
            )));
        }
        let levels = self.lags.features_at(series, origin);
        let (row, base) = if self.origin_relative {
            (relative_row(&levels), levels[0])
        } else {
            (levels, 0.0)
        };
        let xs: Vec<f64> = row.iter().zip(&self.features).map(|(v, s)| s.apply(*v)).collect();
        let out = match &self.learner {
            Learner::Kernel(m) => m.predict(&xs)?,
            Learner::Mlp(m) => m.predict(&xs)?,
        };
        Ok(base + self.target.invert(out))
    }

    /// Prediction for `series[t]` made at origin `t - h`, for every `t`
    /// with enough history; `None` elsewhere.
    pub fn fitted(&self, series: &[f64]) -> Result<Vec<Option<f64>>> {
        let h = self.horizon;
        (0..series.len())
            .map(|t| match t.checked_sub(h) {
                Some(o) if o + 1 >= self.lags.max() => self.predict_at(series, o).map(Some),
                _ => Ok(None),
            })
            .collect()
    }
}
