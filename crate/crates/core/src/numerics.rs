//! Shared numerical kernels: discrete Fourier transforms of arbitrary length,
//! dense symmetric solves, and the scale statistics used by the hyperparameter
//! heuristics.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequency-domain representation of a length-N real or complex sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    pub bins: Vec<Complex64>,
}

impl ComplexSpectrum {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Largest deviation from `bin[k] == conj(bin[N-k])`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.bins.len();
        (0..n)
            .map(|k| (self.bins[k] - self.bins[(n - k) % n].conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// Forward DFT, `X[k] = sum_t x[t] exp(-2 pi i k t / N)`, for any N >= 1.
pub fn fft_forward(signal: &[f64]) -> Result<ComplexSpectrum> {
    if signal.is_empty() {
        return Err(Error::invalid("cannot transform an empty signal"));
    }
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    Ok(ComplexSpectrum { bins: buf })
}

/// Inverse of [`fft_forward`] for conjugate-symmetric spectra.
///
/// The imaginary residue of the inverse transform is discarded.
pub fn fft_inverse(spectrum: &ComplexSpectrum) -> Result<Vec<f64>> {
    if spectrum.is_empty() {
        return Err(Error::invalid("cannot invert an empty spectrum"));
    }
    let scale = spectrum.bins.iter().map(|c| c.norm()).fold(1.0, f64::max);
    let defect = spectrum.hermitian_defect();
    if defect > 1e-8 * scale {
        return Err(Error::invalid(format!(
            "spectrum is not conjugate-symmetric (defect {defect:.3e})"
        )));
    }
    let n = spectrum.len();
    let mut buf = spectrum.bins.clone();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let inv_n = 1.0 / n as f64;
    Ok(buf.into_iter().map(|c| c.re * inv_n).collect())
}

/// Dense row-major matrix of observations (one row per sample).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::invalid(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        self.iter_rows()
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// A dense symmetric linear system `A x = b`.
#[derive(Debug, Clone)]
pub struct SymmetricSystem {
    pub matrix: Matrix,
    pub rhs: Vec<f64>,
}

impl SymmetricSystem {
    pub fn new(matrix: Matrix, rhs: Vec<f64>) -> Result<Self> {
        let n = matrix.rows();
        if matrix.cols() != n {
            return Err(Error::invalid("system matrix must be square"));
        }
        if rhs.len() != n {
            return Err(Error::invalid(format!(
                "right-hand side has length {}, expected {n}",
                rhs.len()
            )));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (matrix.get(i, j), matrix.get(j, i));
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::invalid(format!(
                        "matrix is not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(SymmetricSystem { matrix, rhs })
    }
}

/// Condition numbers above this are treated as numerically singular.
pub const MAX_CONDITION: f64 = 1e14;

/// Solves a symmetric system, by Cholesky when the matrix is positive
/// definite and by Bunch-Kaufman `LDL^T` otherwise.
pub fn solve_symmetric(system: &SymmetricSystem) -> Result<Vec<f64>> {
    let factor = SymmetricFactor::new(&system.matrix)?;
    let cond = factor.condition_estimate(&system.matrix);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::NumericalFailure {
            message: format!("matrix is near-singular (condition estimate {cond:.3e})"),
            condition: Some(cond),
        });
    }
    let mut x = factor.solve(&system.rhs);
    // One step of iterative refinement.
    let ax = system.matrix.mat_vec(&x);
    let r: Vec<f64> = system.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let dx = factor.solve(&r);
    for (xi, d) in x.iter_mut().zip(dx) {
        *xi += d;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure {
            message: "solution contains non-finite values".into(),
            condition: Some(cond),
        });
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy)]
enum Pivot {
    One(f64),
    Two(f64, f64, f64),
}

/// A factorization of a dense symmetric matrix.
#[derive(Debug, Clone)]
enum SymmetricFactor {
    /// Lower-triangular `L` with `A = L L^T`, row-major.
    Cholesky { n: usize, l: Vec<f64> },
    /// `P A P^T = L D L^T` with unit lower `L` and 1x1/2x2 blocks in `D`.
    Ldlt {
        n: usize,
        l: Vec<f64>,
        pivots: Vec<Pivot>,
        perm: Vec<usize>,
    },
}

impl SymmetricFactor {
    fn new(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        if n == 0 {
            return Err(Error::invalid("empty system"));
        }
        if !a.is_finite() {
            return Err(Error::invalid("system matrix contains non-finite values"));
        }
        match cholesky(a) {
            Some(l) => Ok(SymmetricFactor::Cholesky { n, l }),
            None => bunch_kaufman(a),
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            SymmetricFactor::Cholesky { n, l } => {
                let n = *n;
                let mut y = b.to_vec();
                for i in 0..n {
                    let mut s = y[i];
                    for k in 0..i {
                        s -= l[i * n + k] * y[k];
                    }
                    y[i] = s / l[i * n + i];
                }
                for i in (0..n).rev() {
                    let mut s = y[i];
                    for k in i + 1..n {
                        s -= l[k * n + i] * y[k];
                    }
                    y[i] = s / l[i * n + i];
                }
                y
            }
            SymmetricFactor::Ldlt { n, l, pivots, perm } => {
                let n = *n;
                let mut y: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
                for i in 0..n {
                    let mut s = y[i];
                    for k in 0..i {
                        s -= l[i * n + k] * y[k];
                    }
                    y[i] = s;
                }
                let mut i = 0;
                for p in pivots {
                    match *p {
                        Pivot::One(d) => {
                            y[i] /= d;
                            i += 1;
                        }
                        Pivot::Two(a, b, c) => {
                            let det = a * c - b * b;
                            let (u, v) = (y[i], y[i + 1]);
                            y[i] = (c * u - b * v) / det;
                            y[i + 1] = (a * v - b * u) / det;
                            i += 2;
                        }
                    }
                }
                for i in (0..n).rev() {
                    let mut s = y[i];
                    for k in i + 1..n {
                        s -= l[k * n + i] * y[k];
                    }
                    y[i] = s;
                }
                let mut x = vec![0.0; n];
                for (i, &p) in perm.iter().enumerate() {
                    x[p] = y[i];
                }
                x
            }
        }
    }

    /// 1-norm condition estimate `||A||_1 * est(||A^-1||_1)` (Hager's method).
    fn condition_estimate(&self, a: &Matrix) -> f64 {
        let n = a.rows();
        let a_norm = (0..n)
            .map(|j| (0..n).map(|i| a.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            if y.iter().any(|v| !v.is_finite()) {
                return f64::INFINITY;
            }
            let y_norm: f64 = y.iter().map(|v| v.abs()).sum();
            if y_norm <= est {
                break;
            }
            est = y_norm;
            let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            // A is symmetric, so A^-T xi = A^-1 xi.
            let z = self.solve(&xi);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, v)| {
                    if v.abs() > acc.1 {
                        (i, v.abs())
                    } else {
                        acc
                    }
                });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x = vec![0.0; n];
            x[j] = 1.0;
        }
        a_norm * est
    }
}

fn cholesky(a: &Matrix) -> Option<Vec<f64>> {
    let n = a.rows();
    let mut l = vec![0.0; n * n];
    let max_diag = (0..n).map(|i| a.get(i, i).abs()).fold(0.0, f64::max);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d <= 1e-14 * max_diag || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

fn bunch_kaufman(a: &Matrix) -> Result<SymmetricFactor> {
    let n = a.rows();
    let alpha = (1.0 + 17f64.sqrt()) / 8.0;
    let mut w: Vec<f64> = (0..n * n).map(|i| a.get(i / n, i % n)).collect();
    let mut l = vec![0.0; n * n];
    let mut perm: Vec<usize> = (0..n).collect();
    let mut pivots = Vec::new();
    let singular = |k: usize| Error::NumericalFailure {
        message: format!("matrix is singular (zero pivot at column {k})"),
        condition: Some(f64::INFINITY),
    };

    let swap = |w: &mut Vec<f64>, l: &mut Vec<f64>, perm: &mut Vec<usize>, k: usize, p: usize, q: usize| {
        if p == q {
            return;
        }
        for j in 0..n {
            w.swap(p * n + j, q * n + j);
        }
        for i in 0..n {
            w.swap(i * n + p, i * n + q);
        }
        for j in 0..k {
            l.swap(p * n + j, q * n + j);
        }
        perm.swap(p, q);
    };

    let mut k = 0;
    while k < n {
        let absakk = w[k * n + k].abs();
        let (imax, colmax) = (k + 1..n)
            .map(|i| (i, w[i * n + k].abs()))
            .fold((k, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if absakk.max(colmax) == 0.0 {
            return Err(singular(k));
        }
        let (kp, kstep) = if absakk >= alpha * colmax {
            (k, 1)
        } else {
            let rowmax = (k..n)
                .filter(|&j| j != imax)
                .map(|j| w[imax * n + j].abs())
                .fold(0.0, f64::max);
            if absakk * rowmax >= alpha * colmax * colmax {
                (k, 1)
            } else if w[imax * n + imax].abs() >= alpha * rowmax {
                (imax, 1)
            } else {
                (imax, 2)
            }
        };
        let kk = k + kstep - 1;
        swap(&mut w, &mut l, &mut perm, k, kk, kp);

        if kstep == 1 {
            let d = w[k * n + k];
            if d == 0.0 {
                return Err(singular(k));
            }
            l[k * n + k] = 1.0;
            for i in k + 1..n {
                l[i * n + k] = w[i * n + k] / d;
            }
            for i in k + 1..n {
                let li = l[i * n + k];
                if li == 0.0 {
                    continue;
                }
                for j in k + 1..n {
                    w[i * n + j] -= li * w[j * n + k];
                }
            }
            pivots.push(Pivot::One(d));
        } else {
            let (d11, d21, d22) = (w[k * n + k], w[(k + 1) * n + k], w[(k + 1) * n + k + 1]);
            let det = d11 * d22 - d21 * d21;
            if det == 0.0 {
                return Err(singular(k));
            }
            l[k * n + k] = 1.0;
            l[(k + 1) * n + k + 1] = 1.0;
            for i in k + 2..n {
                let (u, v) = (w[i * n + k], w[i * n + k + 1]);
                l[i * n + k] = (d22 * u - d21 * v) / det;
                l[i * n + k + 1] = (d11 * v - d21 * u) / det;
            }
            for i in k + 2..n {
                let (li0, li1) = (l[i * n + k], l[i * n + k + 1]);
                for j in k + 2..n {
                    w[i * n + j] -= li0 * w[j * n + k] + li1 * w[j * n + k + 1];
                }
            }
            pivots.push(Pivot::Two(d11, d21, d22));
        }
        k += kstep;
    }
    // The diagonal of L is implicit in the solves.
    for i in 0..n {
        l[i * n + i] = 0.0;
    }
    Ok(SymmetricFactor::Ldlt { n, l, pivots, perm })
}

/// Type-7 sample quantile (linear interpolation between order statistics).
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("quantile of an empty sequence"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("quantile level {q} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    if sorted.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("quantile of a sequence containing NaN"));
    }
    sorted.sort_by(|a, b| a.total_cmp(b));
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Interquartile range `Q3 - Q1` with type-7 quantiles.
pub fn interquartile_range(values: &[f64]) -> Result<f64> {
    if values.len() < 4 {
        return Err(Error::invalid(format!(
            "interquartile range needs at least 4 values, got {}",
            values.len()
        )));
    }
    Ok((quantile(values, 0.75)? - quantile(values, 0.25)?).max(0.0))
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Variance with divisor `n - ddof`.
pub fn variance(values: &[f64], ddof: usize) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - ddof) as f64
}

/// Sample standard deviation (divisor `n - 1`).
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    variance(values, 1).sqrt()
}

/// Pearson correlation; zero when either sequence is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    /// Direct O(N^2) DFT, independent of the FFT path.
    fn naive_dft(x: &[f64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(t, &v)| {
                        let ang = -2.0 * std::f64::consts::PI * (k * t % n) as f64 / n as f64;
                        Complex64::new(v * ang.cos(), v * ang.sin())
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let s = fft_forward(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        for b in &s.bins {
            assert_abs_diff_eq!(b.re, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(b.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn constant_is_dc_only() {
        let c = 2.5;
        let s = fft_forward(&[c; 4]).unwrap();
        assert_abs_diff_eq!(s.bins[0].re, 4.0 * c, epsilon = 1e-12);
        for b in &s.bins[1..] {
            assert!(b.norm() < 1e-12);
        }
    }

    #[test]
    fn empty_signal_rejected() {
        assert!(matches!(fft_forward(&[]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn length_seven_roundtrip_matches_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = fft_forward(&x).unwrap();
        for (a, b) in s.bins.iter().zip(naive_dft(&x)) {
            assert!((a - b).norm() < 1e-12);
        }
        let back = fft_inverse(&s).unwrap();
        for (a, b) in x.iter().zip(back) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn inverse_of_zero_and_dc_spectra() {
        let zero = ComplexSpectrum {
            bins: vec![Complex64::new(0.0, 0.0); 6],
        };
        assert!(fft_inverse(&zero).unwrap().iter().all(|v| *v == 0.0));
        let mut bins = vec![Complex64::new(0.0, 0.0); 5];
        bins[0] = Complex64::new(5.0 * 1.5, 0.0);
        let x = fft_inverse(&ComplexSpectrum { bins }).unwrap();
        for v in x {
            assert_abs_diff_eq!(v, 1.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn inverse_recovers_sinusoid() {
        let x: Vec<f64> = (0..8)
            .map(|t| (2.0 * std::f64::consts::PI * t as f64 / 8.0).sin())
            .collect();
        let spec = ComplexSpectrum {
            bins: naive_dft(&x),
        };
        let back = fft_inverse(&spec).unwrap();
        for (a, b) in x.iter().zip(back) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn asymmetric_spectrum_rejected() {
        let mut bins = vec![Complex64::new(0.0, 0.0); 4];
        bins[1] = Complex64::new(1.0, 1.0);
        assert!(fft_inverse(&ComplexSpectrum { bins }).is_err());
    }

    #[test]
    fn identity_and_two_by_two_solves() {
        let mut id = Matrix::zeros(3, 3);
        for i in 0..3 {
            id.set(i, i, 1.0);
        }
        let b = vec![1.0, -2.0, 3.0];
        let x = solve_symmetric(&SymmetricSystem::new(id, b.clone()).unwrap()).unwrap();
        assert_eq!(x, b);

        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let x = solve_symmetric(&SymmetricSystem::new(a, vec![3.0, 3.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-14);
    }

    fn residual(a: &Matrix, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.mat_vec(x);
        let r = ax.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        r / (1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max))
    }

    #[test]
    fn hilbert_four_residual() {
        let a = Matrix::from_vec(
            4,
            4,
            (0..16)
                .map(|k| 1.0 / ((k / 4 + k % 4 + 1) as f64))
                .collect(),
        )
        .unwrap();
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let x = solve_symmetric(&SymmetricSystem::new(a.clone(), b.clone()).unwrap()).unwrap();
        assert!(residual(&a, &x, &b) <= 1e-8);
    }

    #[test]
    fn indefinite_bordered_system() {
        // [[0, 1, 1], [1, 2, 0.5], [1, 0.5, 3]] is the LSSVR shape.
        let a = Matrix::from_rows(&[[0.0, 1.0, 1.0], [1.0, 2.0, 0.5], [1.0, 0.5, 3.0]]).unwrap();
        let b = vec![0.0, 1.0, -1.0];
        let x = solve_symmetric(&SymmetricSystem::new(a.clone(), b.clone()).unwrap()).unwrap();
        assert!(residual(&a, &x, &b) <= 1e-12);
    }

    #[test]
    fn singular_matrix_reports_condition() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        match solve_symmetric(&SymmetricSystem::new(a, vec![1.0, 1.0]).unwrap()) {
            Err(Error::NumericalFailure { condition, .. }) => assert!(condition.is_some()),
            other => panic!("expected numerical failure, got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.5, 4.0]]).unwrap();
        assert!(SymmetricSystem::new(a, vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn iqr_examples() {
        assert_abs_diff_eq!(interquartile_range(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), 2.0);
        assert_eq!(interquartile_range(&[3.0; 9]).unwrap(), 0.0);
        assert!(interquartile_range(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn iqr_of_standard_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1349);
        let x: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        assert!((interquartile_range(&x).unwrap() - 1.349).abs() < 0.05);
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
        let g: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..n).map(|k| g[i * n + k] * g[j * n + k]).sum();
                let v = s + if i == j { n as f64 * 0.1 } else { 0.0 };
                a.set(i, j, v);
                a.set(j, i, v);
            }
        }
        a
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn fft_roundtrip_and_parseval(len in 1usize..=512, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
            let s = fft_forward(&x).unwrap();
            let back = fft_inverse(&s).unwrap();
            for (a, b) in x.iter().zip(&back) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
            let time: f64 = x.iter().map(|v| v * v).sum();
            let freq: f64 = s.bins.iter().map(|c| c.norm_sqr()).sum::<f64>() / len as f64;
            prop_assert!((time - freq).abs() <= 1e-8 * time.max(1.0));
        }

        #[test]
        fn spd_solve_residual(n in 1usize..=200, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_spd(&mut rng, n);
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let x = solve_symmetric(&SymmetricSystem::new(a.clone(), b.clone()).unwrap()).unwrap();
            prop_assert!(residual(&a, &x, &b) <= 1e-8);
        }

        #[test]
        fn indefinite_solve_residual(n in 2usize..=60, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut a = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v = rng.random_range(-1.0..1.0);
                    a.set(i, j, v);
                    a.set(j, i, v);
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            if let Ok(x) = solve_symmetric(&SymmetricSystem::new(a.clone(), b.clone()).unwrap()) {
                prop_assert!(residual(&a, &x, &b) <= 1e-8);
            }
        }

        #[test]
        fn iqr_translation_and_scale(
            values in proptest::collection::vec(-100.0f64..100.0, 4..50),
            shift in -50.0f64..50.0,
            scale in 0.01f64..20.0,
        ) {
            let base = interquartile_range(&values).unwrap();
            let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
            let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
            prop_assert!((interquartile_range(&shifted).unwrap() - base).abs() <= 1e-9);
            prop_assert!((interquartile_range(&scaled).unwrap() - scale * base).abs() <= 1e-9 * (1.0 + scale * base));
        }
    }
}
