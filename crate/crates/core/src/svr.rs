//! Gaussian-kernel support vector regression: least-squares SVR solved as one
//! bordered linear system, epsilon-SVR solved by SMO, the fixed
//! hyperparameter rule, and contiguous-block cross-validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{interquartile_range, solve_symmetric, std_dev, Matrix, SymmetricSystem};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// Gaussian kernel length scale.
    pub scale: f64,
    /// Penalty on training errors.
    pub c: f64,
    /// Half-width of the insensitive tube (epsilon-SVR only).
    pub epsilon: f64,
}

impl KernelParams {
    pub fn new(scale: f64, c: f64, epsilon: f64) -> Result<Self> {
        let p = KernelParams { scale, c, epsilon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid(format!("kernel scale must be > 0, got {}", self.scale)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid(format!("penalty C must be > 0, got {}", self.c)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// `exp(-||a - b||^2 / (2 scale^2))`.
pub fn gaussian_kernel(a: &[f64], b: &[f64], scale: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "kernel arguments have dimensions {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(kernel(a, b, scale))
}

#[inline]
fn kernel(a: &[f64], b: &[f64], scale: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / (2.0 * scale * scale)).exp()
}

fn gram(x: &Matrix, scale: f64) -> Vec<f64> {
    let n = x.rows();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = kernel(x.row(i), x.row(j), scale);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

fn check_training_data(x: &Matrix, y: &[f64], min_rows: usize) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::invalid(format!(
            "{} input rows but {} targets",
            x.rows(),
            y.len()
        )));
    }
    if x.rows() < min_rows {
        return Err(Error::invalid(format!(
            "need at least {min_rows} training rows, got {}",
            x.rows()
        )));
    }
    if x.cols() == 0 {
        return Err(Error::invalid("inputs have no columns"));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("training data contains non-finite values"));
    }
    Ok(())
}

/// A fitted kernel expansion `f(x) = b + sum_i coef_i k(x_i, x)`.
pub trait KernelRegressor {
    fn train_inputs(&self) -> &Matrix;
    fn coefficients(&self) -> &[f64];
    fn bias(&self) -> f64;
    fn params(&self) -> &KernelParams;

    fn predict(&self, x: &[f64]) -> Result<f64> {
        let inputs = self.train_inputs();
        if x.len() != inputs.cols() {
            return Err(Error::invalid(format!(
                "input has dimension {}, model expects {}",
                x.len(),
                inputs.cols()
            )));
        }
        let scale = self.params().scale;
        Ok(self.bias()
            + inputs
                .iter_rows()
                .zip(self.coefficients())
                .filter(|(_, c)| **c != 0.0)
                .map(|(xi, c)| c * kernel(xi, x, scale))
                .sum::<f64>())
    }

    fn predict_many(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.iter_rows().map(|r| self.predict(r)).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LssvrModel {
    pub train_inputs: Matrix,
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub params: KernelParams,
}

impl KernelRegressor for LssvrModel {
    fn train_inputs(&self) -> &Matrix {
        &self.train_inputs
    }
    fn coefficients(&self) -> &[f64] {
        &self.alphas
    }
    fn bias(&self) -> f64 {
        self.bias
    }
    fn params(&self) -> &KernelParams {
        &self.params
    }
}

impl LssvrModel {
    /// `max_i |((Omega + I/C) alpha + b 1 - y)_i|` on the training data.
    pub fn kkt_residual(&self, y: &[f64]) -> f64 {
        let n = self.alphas.len();
        let k = gram(&self.train_inputs, self.params.scale);
        (0..n)
            .map(|i| {
                let s: f64 = (0..n).map(|j| k[i * n + j] * self.alphas[j]).sum();
                (s + self.alphas[i] / self.params.c + self.bias - y[i]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Least-squares SVR: solves
/// `[[0, 1^T], [1, Omega + I/C]] [b; alpha] = [0; y]`.
pub fn fit_lssvr(x: &Matrix, y: &[f64], params: KernelParams) -> Result<LssvrModel> {
    params.validate()?;
    check_training_data(x, y, 1)?;
    let n = x.rows();
    let k = gram(x, params.scale);
    let mut a = Matrix::zeros(n + 1, n + 1);
    for i in 0..n {
        a.set(0, i + 1, 1.0);
        a.set(i + 1, 0, 1.0);
        for j in 0..n {
            a.set(i + 1, j + 1, k[i * n + j]);
        }
        a.set(i + 1, i + 1, k[i * n + i] + 1.0 / params.c);
    }
    let mut rhs = Vec::with_capacity(n + 1);
    rhs.push(0.0);
    rhs.extend_from_slice(y);
    let sol = solve_symmetric(&SymmetricSystem::new(a, rhs)?).map_err(|e| match e {
        Error::NumericalFailure { message, condition } => Error::NumericalFailure {
            message: format!(
                "LSSVR system is singular ({message}); duplicate inputs with a large C \
                 need diagonal jitter (smaller C)"
            ),
            condition,
        },
        other => other,
    })?;
    Ok(LssvrModel {
        train_inputs: x.clone(),
        bias: sol[0],
        alphas: sol[1..].to_vec(),
        params,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvrModel {
    pub train_inputs: Matrix,
    /// `alpha_i - alpha_i^*`, each within `[-C, C]`.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub params: KernelParams,
    /// Dual objective `1/2 beta^T K beta + eps sum |beta| - y^T beta` at the solution.
    pub objective: f64,
    pub iterations: usize,
}

impl KernelRegressor for SvrModel {
    fn train_inputs(&self) -> &Matrix {
        &self.train_inputs
    }
    fn coefficients(&self) -> &[f64] {
        &self.dual_coefs
    }
    fn bias(&self) -> f64 {
        self.bias
    }
    fn params(&self) -> &KernelParams {
        &self.params
    }
}

/// Stopping tolerance on the maximal KKT violation.
pub const SMO_TOLERANCE: f64 = 1e-4;

/// Epsilon-SVR by sequential minimal optimisation with second-order working
/// set selection over the `2n` variables `(alpha, alpha^*)`.
pub fn fit_svr(x: &Matrix, y: &[f64], params: KernelParams) -> Result<SvrModel> {
    params.validate()?;
    check_training_data(x, y, 2)?;
    let l = x.rows();
    let c = params.c;
    let k = gram(x, params.scale);
    let sign = |t: usize| if t < l { 1.0 } else { -1.0 };
    let q = |i: usize, j: usize| sign(i) * sign(j) * k[(i % l) * l + (j % l)];

    let mut alpha = vec![0.0; 2 * l];
    let mut grad: Vec<f64> = (0..2 * l)
        .map(|t| if t < l { params.epsilon - y[t] } else { params.epsilon + y[t - l] })
        .collect();
    let p = grad.clone();

    let max_iter = (100 * l).max(10_000_000);
    let tau = 1e-12;
    let mut iter = 0;
    let mut violation;
    loop {
        // Working set selection (Fan, Chen & Lin 2005).
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..2 * l {
            let up = if sign(t) > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            if up && -sign(t) * grad[t] >= gmax {
                gmax = -sign(t) * grad[t];
                i_sel = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut obj_min = f64::INFINITY;
        for t in 0..2 * l {
            let low = if sign(t) > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if !low {
                continue;
            }
            let sg = sign(t) * grad[t];
            gmax2 = gmax2.max(sg);
            if i_sel == usize::MAX {
                continue;
            }
            let b = gmax + sg;
            if b > 0.0 {
                let mut a = q(i_sel, i_sel) + q(t, t) - 2.0 * sign(i_sel) * sign(t) * q(i_sel, t);
                if a <= 0.0 {
                    a = tau;
                }
                let obj = -(b * b) / a;
                if obj <= obj_min {
                    obj_min = obj;
                    j_sel = t;
                }
            }
        }
        violation = gmax + gmax2;
        if violation < SMO_TOLERANCE || j_sel == usize::MAX || i_sel == usize::MAX {
            break;
        }
        if iter >= max_iter {
            return Err(Error::numerical(format!(
                "SMO did not converge in {max_iter} iterations (max KKT violation {violation:.3e})"
            )));
        }
        iter += 1;

        let (i, j) = (i_sel, j_sel);
        let (yi, yj) = (sign(i), sign(j));
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let quad = {
            let a = q(i, i) + q(j, j) - 2.0 * yi * yj * q(i, j);
            if a <= 0.0 {
                tau
            } else {
                a
            }
        };
        if yi != yj {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (dai, daj) = (alpha[i] - old_ai, alpha[j] - old_aj);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * dai + q(t, j) * daj;
        }
    }

    // Offset from free variables, or the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..2 * l {
        let yg = sign(t) * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    let objective = 0.5
        * alpha
            .iter()
            .zip(grad.iter().zip(&p))
            .map(|(a, (g, pp))| a * (g + pp))
            .sum::<f64>();
    let dual_coefs: Vec<f64> = (0..l).map(|t| alpha[t] - alpha[t + l]).collect();
    log::trace!("SMO finished after {iter} iterations, violation {violation:.2e}");
    Ok(SvrModel {
        train_inputs: x.clone(),
        dual_coefs,
        bias: -rho,
        params,
        objective,
        iterations: iter,
    })
}

/// Fixed hyperparameters: `C = iqr(target)/1.349`, unit kernel scale, and
/// `epsilon = 0.1 * std(target)`.
pub fn default_hyperparams(target: &[f64]) -> Result<KernelParams> {
    let iqr = interquartile_range(target)?;
    let c = if iqr > 0.0 {
        iqr / 1.349
    } else {
        log::warn!("target has zero interquartile range; penalty C falls back to 1.0");
        1.0
    };
    Ok(KernelParams {
        scale: 1.0,
        c,
        epsilon: 0.1 * std_dev(target),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMachine {
    Lssvr,
    Svr,
}

/// Either kind of fitted kernel machine.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum FittedKernelMachine {
    Lssvr(LssvrModel),
    Svr(SvrModel),
}

impl FittedKernelMachine {
    pub fn fit(machine: KernelMachine, x: &Matrix, y: &[f64], params: KernelParams) -> Result<Self> {
        Ok(match machine {
            KernelMachine::Lssvr => FittedKernelMachine::Lssvr(fit_lssvr(x, y, params)?),
            KernelMachine::Svr => FittedKernelMachine::Svr(fit_svr(x, y, params)?),
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            FittedKernelMachine::Lssvr(m) => m.predict(x),
            FittedKernelMachine::Svr(m) => m.predict(x),
        }
    }
}

/// Contiguous, near-equal blocks partitioning `0..n`; the first `n % folds`
/// blocks get one extra element.
pub fn fold_boundaries(n: usize, folds: usize) -> Vec<std::ops::Range<usize>> {
    let base = n / folds;
    let extra = n % folds;
    let mut start = 0;
    (0..folds)
        .map(|f| {
            let len = base + usize::from(f < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Mean validation MSE of one parameter setting over contiguous folds.
pub fn cv_score(
    machine: KernelMachine,
    x: &Matrix,
    y: &[f64],
    params: KernelParams,
    folds: usize,
) -> Result<f64> {
    let n = x.rows();
    let mut total = 0.0;
    for fold in fold_boundaries(n, folds) {
        let train: Vec<usize> = (0..n).filter(|i| !fold.contains(i)).collect();
        let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let model = FittedKernelMachine::fit(machine, &x.select_rows(&train), &ytr, params)?;
        let mut se = 0.0;
        for i in fold.clone() {
            let e = model.predict(x.row(i))? - y[i];
            se += e * e;
        }
        total += se / fold.len() as f64;
    }
    Ok(total / folds as f64)
}

/// Grid search by contiguous-block k-fold cross-validation. Ties go to the
/// smaller C, then the smaller kernel scale.
pub fn cross_validate(
    machine: KernelMachine,
    x: &Matrix,
    y: &[f64],
    grid: &[KernelParams],
    folds: usize,
) -> Result<KernelParams> {
    if grid.is_empty() {
        return Err(Error::invalid("hyperparameter grid is empty"));
    }
    if folds < 2 || x.rows() < folds {
        return Err(Error::invalid(format!(
            "need at least {folds} rows for {folds}-fold cross-validation (and folds >= 2), got {}",
            x.rows()
        )));
    }
    check_training_data(x, y, folds)?;
    let scores = par::map(grid, |p| cv_score(machine, x, y, *p, folds));
    let mut best: Option<(f64, KernelParams)> = None;
    for (score, params) in scores.into_iter().zip(grid) {
        let score = score?;
        let better = match best {
            None => true,
            Some((s, b)) => {
                score < s
                    || (score == s
                        && (params.c < b.c || (params.c == b.c && params.scale < b.scale)))
            }
        };
        if better {
            best = Some((score, *params));
        }
    }
    Ok(best.expect("grid is nonempty").1)
}
