//! Variational mode decomposition by ADMM in the frequency domain, mode-count
//! selection, mode diagnostics, and trend/seasonal/volatility labelling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{fft_forward, fft_inverse, pearson, variance, ComplexSpectrum};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyInit {
    /// `omega_k = 0.5 k / K`.
    Uniform,
    Zero,
    /// Sorted uniform draws on `[0, 0.5)`.
    Random(u64),
}

/// How the signal is extended past its ends before the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Plain reflection.
    Mirror,
    /// Reflection of the residual about the least-squares line, with the
    /// line itself continued. A linear trend then crosses the boundary
    /// unbent instead of folding back.
    DetrendedMirror,
    /// The least-squares line continued, plus the residual repeated with the
    /// given period from the first and last cycles. Keeps the phase of a
    /// cycle with that period intact across the boundary.
    Periodic(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VmdConfig {
    pub alpha: f64,
    pub tau: f64,
    pub k: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub init: FrequencyInit,
    /// Mirror extension on each side as a fraction of the signal length.
    pub extension: f64,
    pub boundary: Boundary,
}

impl Default for VmdConfig {
    fn default() -> Self {
        VmdConfig {
            alpha: 2000.0,
            tau: 0.0,
            k: 3,
            tol: 1e-7,
            max_iter: 500,
            init: FrequencyInit::Uniform,
            extension: 0.5,
            boundary: Boundary::Mirror,
        }
    }
}

impl VmdConfig {
    pub fn with_k(self, k: usize) -> Self {
        VmdConfig { k, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::invalid(format!("tau must be nonnegative, got {}", self.tau)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if self.k == 0 || self.max_iter == 0 {
            return Err(Error::invalid("mode count and max_iter must be at least 1"));
        }
        if let Boundary::Periodic(p) = self.boundary {
            if p < 2 {
                return Err(Error::invalid(format!("periodic extension needs a period >= 2, got {p}")));
            }
        }
        if !(0.0..=1.0).contains(&self.extension) {
            return Err(Error::invalid("mirror extension must be a fraction in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    /// Modes in ascending center-frequency order.
    pub modes: Vec<Vec<f64>>,
    /// Cycles per sample, ascending.
    pub center_freqs: Vec<f64>,
    pub residual: Vec<f64>,
    /// Energy of each mode relative to what a flat spectrum at the median
    /// periodogram level would pass through the same filter; broadband
    /// (noise-like) modes sit near 1, spectral peaks far above.
    pub peak_ratios: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl ModeSet {
    pub fn k(&self) -> usize {
        self.modes.len()
    }

    /// Pointwise sum of all modes.
    pub fn reconstruction(&self) -> Vec<f64> {
        let n = self.residual.len();
        (0..n).map(|t| self.modes.iter().map(|m| m[t]).sum()).collect()
    }
}

fn mirror_extend(x: &[f64], half: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n + 2 * half);
    out.extend(x[..half].iter().rev());
    out.extend_from_slice(x);
    out.extend(x[n - half..].iter().rev());
    out
}

/// Least-squares line through `(t, x[t])` as a closure, and the residuals.
fn split_line(x: &[f64]) -> (impl Fn(f64) -> f64, Vec<f64>) {
    let n = x.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let x_mean = x.iter().sum::<f64>() / n;
    let (sxy, sxx) = x.iter().enumerate().fold((0.0, 0.0), |(a, b), (t, v)| {
        let dt = t as f64 - t_mean;
        (a + dt * (v - x_mean), b + dt * dt)
    });
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let line = move |t: f64| x_mean + slope * (t - t_mean);
    let resid: Vec<f64> = x.iter().enumerate().map(|(t, v)| v - line(t as f64)).collect();
    (line, resid)
}

fn detrended_mirror_extend(x: &[f64], half: usize) -> Vec<f64> {
    let (line, resid) = split_line(x);
    mirror_extend(&resid, half)
        .into_iter()
        .enumerate()
        .map(|(i, r)| r + line(i as f64 - half as f64))
        .collect()
}

fn periodic_extend(x: &[f64], half: usize, period: usize) -> Vec<f64> {
    let n = x.len() as i64;
    let p = period as i64;
    let (line, resid) = split_line(x);
    (-(half as i64)..n + half as i64)
        .map(|i| {
            let src = if i < 0 {
                i.rem_euclid(p)
            } else if i >= n {
                n - p + (i - (n - p)).rem_euclid(p)
            } else {
                i
            };
            resid[src as usize] + line(i as f64)
        })
        .collect()
}

/// Decomposes `signal` into `config.k` band-limited modes.
pub fn decompose(signal: &[f64], config: &VmdConfig) -> Result<ModeSet> {
    config.validate()?;
    let n = signal.len();
    if n < 8 {
        return Err(Error::invalid(format!("VMD needs at least 8 samples, got {n}")));
    }
    if let Boundary::Periodic(p) = config.boundary {
        if p > n {
            return Err(Error::invalid(format!(
                "periodic extension with period {p} needs at least one full cycle, got {n} samples"
            )));
        }
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("signal contains non-finite values"));
    }
    let half = ((n as f64 * config.extension) as usize).min(n);
    let ext = match config.boundary {
        Boundary::Mirror => mirror_extend(signal, half),
        Boundary::DetrendedMirror => detrended_mirror_extend(signal, half),
        Boundary::Periodic(p) => periodic_extend(signal, half, p),
    };
    let t_len = ext.len();
    let spectrum = fft_forward(&ext)?;
    // One-sided working band: DC up to (but excluding) Nyquist.
    let n_pos = t_len.div_ceil(2);
    let freqs: Vec<f64> = (0..n_pos).map(|j| j as f64 / t_len as f64).collect();
    let f_plus: Vec<Complex64> = spectrum.bins[..n_pos].to_vec();

    let k = config.k;
    let mut omega: Vec<f64> = match config.init {
        FrequencyInit::Uniform => (0..k).map(|i| 0.5 * i as f64 / k as f64).collect(),
        FrequencyInit::Zero => vec![0.0; k],
        FrequencyInit::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut w: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..0.5)).collect();
            w.sort_by(f64::total_cmp);
            w
        }
    };
    let zero = Complex64::new(0.0, 0.0);
    let mut modes = vec![vec![zero; n_pos]; k];
    let mut lambda = vec![zero; n_pos];
    let mut sum_all = vec![zero; n_pos];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        iterations += 1;
        let mut change = 0.0;
        for (kk, mode) in modes.iter_mut().enumerate() {
            let mut diff = 0.0;
            let mut prev_norm = 0.0;
            let mut num = 0.0;
            let mut den = 0.0;
            for j in 0..n_pos {
                let others = sum_all[j] - mode[j];
                let d = freqs[j] - omega[kk];
                let new = (f_plus[j] - others + lambda[j] * 0.5) / (1.0 + 2.0 * config.alpha * d * d);
                diff += (new - mode[j]).norm_sqr();
                prev_norm += mode[j].norm_sqr();
                let p = new.norm_sqr();
                num += freqs[j] * p;
                den += p;
                mode[j] = new;
                sum_all[j] = others + new;
            }
            if den > 0.0 {
                omega[kk] = num / den;
            }
            change += if prev_norm > 0.0 {
                diff / prev_norm
            } else if diff > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
        }
        if config.tau > 0.0 {
            for j in 0..n_pos {
                lambda[j] += (f_plus[j] - sum_all[j]) * config.tau;
            }
        }
        if change < config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "VMD with K={k} did not converge within {} iterations",
            config.max_iter
        );
    }

    let floor = {
        let mut p: Vec<f64> = f_plus[1..].iter().map(|c| c.norm_sqr()).collect();
        p.sort_by(f64::total_cmp);
        p.get(p.len() / 2).copied().unwrap_or(0.0)
    };
    let mut out: Vec<(f64, Vec<f64>, f64)> = Vec::with_capacity(k);
    for (kk, mode) in modes.iter().enumerate() {
        let energy: f64 = mode.iter().map(|c| c.norm_sqr()).sum();
        let passband: f64 = freqs
            .iter()
            .map(|f| (1.0 + 2.0 * config.alpha * (f - omega[kk]).powi(2)).powi(-2))
            .sum();
        let ratio = if energy == 0.0 { 0.0 } else { energy / (floor * passband) };
        let mut bins = vec![zero; t_len];
        bins[0] = Complex64::new(mode[0].re, 0.0);
        for j in 1..n_pos {
            bins[j] = mode[j];
            bins[t_len - j] = mode[j].conj();
        }
        let full = fft_inverse(&ComplexSpectrum { bins })?;
        out.push((omega[kk], full[half..half + n].to_vec(), ratio));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut center_freqs = Vec::with_capacity(k);
    let mut peak_ratios = Vec::with_capacity(k);
    let mut modes = Vec::with_capacity(k);
    for (w, m, r) in out {
        center_freqs.push(w);
        modes.push(m);
        peak_ratios.push(r);
    }
    let residual = (0..n)
        .map(|t| signal[t] - modes.iter().map(|m| m[t]).sum::<f64>())
        .collect();
    Ok(ModeSet {
        modes,
        center_freqs,
        residual,
        peak_ratios,
        iterations,
        converged,
    })
}

/// Thresholds of the center-frequency gap rule used to pick `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCountRule {
    pub k_max: usize,
    /// Minimum gap between adjacent center frequencies (cycles per sample).
    pub min_gap: f64,
    /// Gap below which two modes count as collapsed onto one frequency.
    pub duplicate_gap: f64,
    /// Peak ratio below which a mode counts as broadband.
    pub min_peak_ratio: f64,
}

impl Default for ModeCountRule {
    fn default() -> Self {
        ModeCountRule {
            k_max: 6,
            min_gap: 0.02,
            duplicate_gap: 0.005,
            min_peak_ratio: 20.0,
        }
    }
}

/// Adjacent center frequencies are separated and at most one mode is
/// broadband (the remainder after every spectral peak has its own mode).
fn acceptable(set: &ModeSet, rule: &ModeCountRule) -> bool {
    let separated = set
        .center_freqs
        .windows(2)
        .all(|w| w[1] - w[0] > rule.min_gap && w[1] - w[0] >= rule.duplicate_gap);
    let broadband = set.peak_ratios.iter().filter(|r| **r < rule.min_peak_ratio).count();
    separated && broadband <= 1
}

/// Largest `K` in `2..=k_max` whose decomposition is acceptable under the
/// rule; 2 when none is.
pub fn select_mode_count(signal: &[f64], template: &VmdConfig, rule: &ModeCountRule) -> Result<usize> {
    if !(2..=10).contains(&rule.k_max) {
        return Err(Error::invalid(format!("k_max must be in [2, 10], got {}", rule.k_max)));
    }
    if signal.len() < 24 {
        return Err(Error::invalid(format!(
            "mode-count selection needs at least 24 samples, got {}",
            signal.len()
        )));
    }
    let ks: Vec<usize> = (2..=rule.k_max).collect();
    let sets = par::map(&ks, |&k| decompose(signal, &template.with_k(k)));
    let mut best = 2;
    for (k, set) in ks.iter().zip(sets) {
        let set = set?;
        log::debug!(
            "K={k}: center frequencies {:?}, peak ratios {:?}",
            set.center_freqs,
            set.peak_ratios
        );
        if acceptable(&set, rule) {
            best = *k;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeMeasures {
    pub mean_period: f64,
    pub correlation: f64,
    pub variance_pct: f64,
}

/// Samples per strict local maximum; the whole length when there is none.
pub fn mean_period(x: &[f64]) -> f64 {
    let peaks = x.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count();
    if peaks == 0 {
        x.len() as f64
    } else {
        x.len() as f64 / peaks as f64
    }
}

pub fn mode_measures(signal: &[f64], modes: &ModeSet) -> Result<Vec<ModeMeasures>> {
    if modes.modes.iter().any(|m| m.len() != signal.len()) {
        return Err(Error::invalid("mode lengths differ from the signal length"));
    }
    let var_signal = variance(signal, 0);
    Ok(modes
        .modes
        .iter()
        .map(|m| ModeMeasures {
            mean_period: mean_period(m),
            correlation: pearson(m, signal),
            variance_pct: if var_signal > 0.0 {
                100.0 * variance(m, 0) / var_signal
            } else {
                0.0
            },
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentLabel {
    Trend,
    Seasonal,
    Volatility,
}

impl ComponentLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ComponentLabel::Trend => "trend",
            ComponentLabel::Seasonal => "seasonal",
            ComponentLabel::Volatility => "volatility",
        }
    }
}

/// Labels three modes given in ascending center-frequency order from their
/// periods: the first is the trend, the remaining mode whose period is
/// closest to `seasonal_period` is seasonal.
pub fn classify_periods(periods: &[f64], seasonal_period: usize) -> Result<Vec<ComponentLabel>> {
    if periods.len() != 3 {
        return Err(Error::Unsupported(format!(
            "component labelling needs exactly 3 modes, got {}",
            periods.len()
        )));
    }
    let target = seasonal_period as f64;
    let dist = |i: usize| (periods[i] - target).abs();
    let seasonal = if dist(2) < dist(1) { 2 } else { 1 };
    let mut labels = vec![ComponentLabel::Volatility; 3];
    labels[0] = ComponentLabel::Trend;
    labels[seasonal] = ComponentLabel::Seasonal;
    Ok(labels)
}

pub fn classify_modes(modes: &ModeSet, seasonal_period: usize) -> Result<Vec<ComponentLabel>> {
    let periods: Vec<f64> = modes.modes.iter().map(|m| mean_period(m)).collect();
    classify_periods(&periods, seasonal_period)
}
