//! Nonlinear LSSVR fusion of component forecasts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::svr::{default_hyperparams, fit_lssvr, KernelRegressor, LssvrModel};

use super::learner::Standardizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombinerForm {
    /// `y = f(c)`: the LSSVR maps component forecasts to the target.
    Direct,
    /// `y = sum(c) + f(c)`: the LSSVR learns the correction to the additive
    /// recombination, so forecasts follow the components outside the
    /// training range.
    Residual,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Combiner {
    pub form: CombinerForm,
    features: Vec<Standardizer>,
    target: Standardizer,
    model: LssvrModel,
}

impl Combiner {
    pub fn n_components(&self) -> usize {
        self.features.len()
    }

    pub fn predict(&self, components: &[f64]) -> Result<f64> {
        if components.len() != self.features.len() {
            return Err(Error::invalid(format!(
                "combiner expects {} component forecasts, got {}",
                self.features.len(),
                components.len()
            )));
        }
        let xs: Vec<f64> = components.iter().zip(&self.features).map(|(v, s)| s.apply(*v)).collect();
        let f = self.target.invert(self.model.predict(&xs)?);
        Ok(match self.form {
            CombinerForm::Direct => f,
            CombinerForm::Residual => components.iter().sum::<f64>() + f,
        })
    }
}

/// Fits the combiner on rows of component forecasts against the actual
/// values, returning it with its in-sample predictions.
pub fn ensemble_combine(components: &Matrix, target: &[f64], form: CombinerForm) -> Result<(Combiner, Vec<f64>)> {
    if components.rows() != target.len() {
        return Err(Error::invalid(format!(
            "{} component rows but {} targets",
            components.rows(),
            target.len()
        )));
    }
    if components.rows() < 10 {
        return Err(Error::invalid(format!(
            "combiner needs at least 10 training rows, got {}",
            components.rows()
        )));
    }
    let goal: Vec<f64> = match form {
        CombinerForm::Direct => target.to_vec(),
        CombinerForm::Residual => components
            .iter_rows()
            .zip(target)
            .map(|(r, y)| y - r.iter().sum::<f64>())
            .collect(),
    };
    let features: Vec<Standardizer> = (0..components.cols())
        .map(|j| Standardizer::fit(&components.column(j)))
        .collect();
    let target_scale = Standardizer::fit(&goal);
    let xs: Vec<Vec<f64>> = components
        .iter_rows()
        .map(|r| r.iter().zip(&features).map(|(v, s)| s.apply(*v)).collect())
        .collect();
    let xs = Matrix::from_rows(&xs)?;
    let ys: Vec<f64> = goal.iter().map(|v| target_scale.apply(*v)).collect();
    let model = fit_lssvr(&xs, &ys, default_hyperparams(&ys)?)?;
    let combiner = Combiner {
        form,
        features,
        target: target_scale,
        model,
    };
    let fitted = components
        .iter_rows()
        .map(|r| combiner.predict(r))
        .collect::<Result<Vec<_>>>()?;
    Ok((combiner, fitted))
}
