//! One-hidden-layer perceptron regressor with logistic hidden units, trained
//! by full-batch backpropagation with momentum on min-max normalized data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: 20,
            epochs: 2000,
            learning_rate: 0.1,
            momentum: 0.9,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=100).contains(&self.hidden) {
            return Err(Error::invalid(format!(
                "hidden layer size must be in [1, 100], got {}",
                self.hidden
            )));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("momentum must be in [0, 1)"));
        }
        Ok(())
    }
}

/// Min-max scaling bounds for one variable. `max > min` always holds; a
/// constant variable is stored with unit range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

impl Bounds {
    fn fit(values: impl Iterator<Item = f64>, what: &str) -> Self {
        let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        if max > min {
            Bounds { min, max }
        } else {
            log::warn!("{what} is constant; using unit scale");
            Bounds { min, max: min + 1.0 }
        }
    }

    pub fn normalize(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        self.min + v * (self.max - self.min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// `(p+1) x q`, row-major; row 0 holds the hidden biases.
    pub input_weights: Vec<f64>,
    /// Length `q + 1`; entry 0 is the output bias.
    pub output_weights: Vec<f64>,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub input_bounds: Vec<Bounds>,
    pub output_bounds: Bounds,
}

/// Gradients laid out like the model weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub input_weights: Vec<f64>,
    pub output_weights: Vec<f64>,
}

#[inline]
fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

impl MlpModel {
    /// A model with all-zero weights and identity scaling bounds.
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        MlpModel {
            input_weights: vec![0.0; (input_dim + 1) * hidden_dim],
            output_weights: vec![0.0; hidden_dim + 1],
            input_dim,
            hidden_dim,
            input_bounds: vec![Bounds { min: 0.0, max: 1.0 }; input_dim],
            output_bounds: Bounds { min: 0.0, max: 1.0 },
        }
    }

    pub fn beta(&self, i: usize, j: usize) -> f64 {
        self.input_weights[i * self.hidden_dim + j]
    }

    fn normalize_input(&self, x: &[f64], out: &mut [f64]) {
        for ((o, v), b) in out.iter_mut().zip(x).zip(&self.input_bounds) {
            *o = b.normalize(*v);
        }
    }

    /// Network output on the normalized scale; fills `hidden` with activations.
    fn forward(&self, xn: &[f64], hidden: &mut [f64]) -> f64 {
        let q = self.hidden_dim;
        let mut out = self.output_weights[0];
        for j in 0..q {
            let mut z = self.input_weights[j];
            for (i, xi) in xn.iter().enumerate() {
                z += self.input_weights[(i + 1) * q + j] * xi;
            }
            let h = logistic(z);
            hidden[j] = h;
            out += self.output_weights[j + 1] * h;
        }
        out
    }

    /// Output on the normalized target scale for already-normalized inputs.
    pub fn predict_normalized(&self, xn: &[f64]) -> f64 {
        let mut hidden = vec![0.0; self.hidden_dim];
        self.forward(xn, &mut hidden)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::invalid(format!(
                "input has dimension {}, network expects {}",
                x.len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let mut xn = vec![0.0; self.input_dim];
        self.normalize_input(x, &mut xn);
        Ok(self.output_bounds.denormalize(self.predict_normalized(&xn)))
    }

    fn normalized_data(&self, x: &Matrix, y: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        if x.rows() != y.len() {
            return Err(Error::invalid(format!(
                "{} input rows but {} targets",
                x.rows(),
                y.len()
            )));
        }
        if x.cols() != self.input_dim {
            return Err(Error::invalid(format!(
                "inputs have {} columns, network expects {}",
                x.cols(),
                self.input_dim
            )));
        }
        let xs = x
            .iter_rows()
            .map(|r| {
                let mut xn = vec![0.0; self.input_dim];
                self.normalize_input(r, &mut xn);
                xn
            })
            .collect();
        let ys = y.iter().map(|v| self.output_bounds.normalize(*v)).collect();
        Ok((xs, ys))
    }

    /// Mean squared error on the normalized scale.
    pub fn loss(&self, x: &Matrix, y: &[f64]) -> Result<f64> {
        let (xs, ys) = self.normalized_data(x, y)?;
        Ok(normalized_loss_and_grad(self, &xs, &ys, None))
    }

    /// Analytic gradient of [`MlpModel::loss`] with respect to every weight.
    pub fn gradient(&self, x: &Matrix, y: &[f64]) -> Result<MlpGradient> {
        let (xs, ys) = self.normalized_data(x, y)?;
        let mut g = MlpGradient {
            input_weights: vec![0.0; self.input_weights.len()],
            output_weights: vec![0.0; self.output_weights.len()],
        };
        normalized_loss_and_grad(self, &xs, &ys, Some(&mut g));
        Ok(g)
    }
}

fn normalized_loss_and_grad(
    model: &MlpModel,
    xs: &[Vec<f64>],
    ys: &[f64],
    mut grad: Option<&mut MlpGradient>,
) -> f64 {
    let q = model.hidden_dim;
    let n = xs.len() as f64;
    if let Some(g) = grad.as_deref_mut() {
        g.input_weights.iter_mut().for_each(|v| *v = 0.0);
        g.output_weights.iter_mut().for_each(|v| *v = 0.0);
    }
    let mut hidden = vec![0.0; q];
    let mut loss = 0.0;
    for (xn, yn) in xs.iter().zip(ys) {
        let e = model.forward(xn, &mut hidden) - yn;
        loss += e * e;
        if let Some(g) = grad.as_deref_mut() {
            let de = 2.0 * e / n;
            g.output_weights[0] += de;
            for j in 0..q {
                let h = hidden[j];
                g.output_weights[j + 1] += de * h;
                let dz = de * model.output_weights[j + 1] * h * (1.0 - h);
                g.input_weights[j] += dz;
                for (i, xi) in xn.iter().enumerate() {
                    g.input_weights[(i + 1) * q + j] += dz * xi;
                }
            }
        }
    }
    loss / n
}

/// Epochs per window over which the training loss must not increase.
const LOSS_WINDOW: usize = 50;

/// Trains a network by full-batch gradient descent with momentum.
pub fn train(x: &Matrix, y: &[f64], config: &MlpConfig) -> Result<MlpModel> {
    config.validate()?;
    if x.rows() != y.len() {
        return Err(Error::invalid(format!(
            "{} input rows but {} targets",
            x.rows(),
            y.len()
        )));
    }
    if x.rows() < 2 || x.cols() < 1 {
        return Err(Error::invalid("training needs at least 2 rows and 1 column"));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("training data contains non-finite values"));
    }
    let p = x.cols();
    let q = config.hidden;
    let input_bounds = (0..p)
        .map(|j| Bounds::fit(x.iter_rows().map(|r| r[j]), &format!("input column {j}")))
        .collect();
    let output_bounds = Bounds::fit(y.iter().copied(), "target");

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = MlpModel {
        input_weights: (0..(p + 1) * q).map(|_| rng.random_range(-0.5..0.5)).collect(),
        output_weights: (0..=q).map(|_| rng.random_range(-0.5..0.5)).collect(),
        input_dim: p,
        hidden_dim: q,
        input_bounds,
        output_bounds,
    };
    let (xs, ys) = model.normalized_data(x, y)?;
    let mut grad = MlpGradient {
        input_weights: vec![0.0; model.input_weights.len()],
        output_weights: vec![0.0; model.output_weights.len()],
    };
    let mut vel_in = vec![0.0; model.input_weights.len()];
    let mut vel_out = vec![0.0; model.output_weights.len()];
    let mut lr = config.learning_rate;
    let mut window_start = f64::INFINITY;
    for epoch in 0..config.epochs {
        let loss = normalized_loss_and_grad(&model, &xs, &ys, Some(&mut grad));
        if !loss.is_finite() {
            return Err(Error::numerical(format!("training loss became {loss} at epoch {epoch}")));
        }
        if epoch % LOSS_WINDOW == 0 {
            if loss > window_start {
                lr *= 0.5;
                log::debug!("loss rose to {loss:.3e} over the last window; learning rate halved to {lr}");
            }
            window_start = loss;
        }
        for ((w, v), g) in model.input_weights.iter_mut().zip(&mut vel_in).zip(&grad.input_weights) {
            *v = config.momentum * *v - lr * g;
            *w += *v;
        }
        for ((w, v), g) in model.output_weights.iter_mut().zip(&mut vel_out).zip(&grad.output_weights) {
            *v = config.momentum * *v - lr * g;
            *w += *v;
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid_problem() -> (Matrix, Vec<f64>) {
        let rows: Vec<[f64; 1]> = (0..200).map(|i| [i as f64 / 199.0]).collect();
        let y = rows.iter().map(|r| 0.3 * r[0] + 0.1).collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn constant_target_learned() {
        let rows: Vec<[f64; 1]> = (0..30).map(|i| [i as f64]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        for seed in 0..20 {
            let m = train(&x, &[7.5; 30], &MlpConfig { seed, ..MlpConfig::default() }).unwrap();
            let worst = rows.iter().map(|r| (m.predict(r).unwrap() - 7.5).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-3, "seed {seed}: {worst}");
        }
    }

    #[test]
    fn linear_target_fit() {
        let (x, y) = grid_problem();
        let m = train(&x, &y, &MlpConfig::default()).unwrap();
        let rmse = ((0..200)
            .map(|i| (m.predict(x.row(i)).unwrap() - y[i]).powi(2))
            .sum::<f64>()
            / 200.0)
            .sqrt();
        assert!(rmse <= 0.01, "rmse {rmse}");
        assert!((m.predict(&[0.5]).unwrap() - 0.25).abs() <= 0.02);
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = grid_problem();
        let cfg = MlpConfig { epochs: 200, seed: 17, ..MlpConfig::default() };
        assert_eq!(train(&x, &y, &cfg).unwrap(), train(&x, &y, &cfg).unwrap());
    }

    #[test]
    fn zero_weights_predict_output_bias() {
        let mut m = MlpModel::zeros(2, 3);
        m.output_bounds = Bounds { min: 10.0, max: 30.0 };
        assert_eq!(m.predict(&[0.4, 0.9]).unwrap(), 10.0);
        m.output_weights[0] = 0.5;
        assert_eq!(m.predict(&[0.4, 0.9]).unwrap(), 20.0);
        assert!(m.predict(&[1.0]).is_err());
    }

    #[test]
    fn hand_set_single_unit() {
        let mut m = MlpModel::zeros(1, 1);
        m.input_weights = vec![0.0, 1.0];
        m.output_weights = vec![0.0, 2.0];
        assert_abs_diff_eq!(m.predict_normalized(&[0.0]), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_error_batch_has_zero_gradient() {
        let mut m = MlpModel::zeros(1, 2);
        m.output_weights[0] = 0.25;
        let x = Matrix::from_rows(&[[0.1], [0.7]]).unwrap();
        let g = m.gradient(&x, &[0.25, 0.25]).unwrap();
        assert!(g.input_weights.iter().chain(&g.output_weights).all(|v| *v == 0.0));
    }

    #[test]
    fn duplicated_batch_keeps_mean_gradient() {
        let (x, y) = grid_problem();
        let m = train(&x, &y, &MlpConfig { epochs: 5, ..MlpConfig::default() }).unwrap();
        let idx: Vec<usize> = (0..200).chain(0..200).collect();
        let y2: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        let g1 = m.gradient(&x, &y).unwrap();
        let g2 = m.gradient(&x.select_rows(&idx), &y2).unwrap();
        for (a, b) in g1.input_weights.iter().zip(&g2.input_weights) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn invalid_configs() {
        let (x, y) = grid_problem();
        assert!(train(&x, &y, &MlpConfig { hidden: 0, ..MlpConfig::default() }).is_err());
        assert!(train(&x, &y, &MlpConfig { hidden: 101, ..MlpConfig::default() }).is_err());
        assert!(train(&x, &y[..10], &MlpConfig::default()).is_err());
    }

    #[test]
    fn permuting_hidden_units_preserves_output() {
        let (x, y) = grid_problem();
        let m = train(&x, &y, &MlpConfig { hidden: 4, epochs: 50, ..MlpConfig::default() }).unwrap();
        let perm = [2usize, 0, 3, 1];
        let mut pm = m.clone();
        for (new_j, &old_j) in perm.iter().enumerate() {
            pm.output_weights[new_j + 1] = m.output_weights[old_j + 1];
            for i in 0..=m.input_dim {
                pm.input_weights[i * 4 + new_j] = m.input_weights[i * 4 + old_j];
            }
        }
        for v in [0.0, 0.33, 0.9] {
            assert_abs_diff_eq!(m.predict(&[v]).unwrap(), pm.predict(&[v]).unwrap(), epsilon = 1e-12);
        }
    }
}
