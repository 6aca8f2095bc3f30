//! Forecast accuracy measures and statistical tests: MAPE, directional
//! symmetry, the Diebold-Mariano test of equal squared-error loss, the
//! Pesaran-Timmermann test of directional accuracy, and descriptive
//! statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::numerics::{mean, std_dev};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    /// Mean absolute percentage error, in percent.
    pub mape: f64,
    /// Directional symmetry, in percent.
    pub ds: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    TwoSided,
    Less,
    Greater,
}

/// A test statistic with a standard-normal reference distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub alternative: Alternative,
}

impl TestResult {
    pub fn normal(statistic: f64, alternative: Alternative) -> Self {
        let cdf = standard_normal_cdf(statistic);
        let p_value = match alternative {
            Alternative::TwoSided => 2.0 * standard_normal_cdf(-statistic.abs()),
            Alternative::Less => cdf,
            Alternative::Greater => standard_normal_cdf(-statistic),
        };
        TestResult {
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
            alternative,
        }
    }

    /// The same statistic evaluated against another alternative.
    pub fn with_alternative(&self, alternative: Alternative) -> Self {
        TestResult::normal(self.statistic, alternative)
    }
}

fn standard_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    /// Pearson (non-excess) kurtosis; 3 for a Gaussian.
    pub kurtosis: f64,
}

fn check_aligned(actual: &[f64], forecast: &[f64], min_len: usize) -> Result<()> {
    if actual.len() != forecast.len() {
        return Err(Error::invalid(format!(
            "actual has {} points but forecast has {}",
            actual.len(),
            forecast.len()
        )));
    }
    if actual.len() < min_len {
        return Err(Error::invalid(format!(
            "need at least {min_len} aligned points, got {}",
            actual.len()
        )));
    }
    Ok(())
}

/// Mean absolute percentage error in percent.
pub fn mape(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    check_aligned(actual, forecast, 1)?;
    if let Some(i) = actual.iter().position(|&y| y == 0.0) {
        return Err(Error::invalid(format!(
            "actual value at index {i} is zero; MAPE is undefined"
        )));
    }
    let total: f64 = actual
        .iter()
        .zip(forecast)
        .map(|(y, f)| ((y - f) / y).abs())
        .sum();
    Ok(100.0 * total / actual.len() as f64)
}

/// Percentage of transitions `t -> t+1` whose forecast direction, measured
/// from the last actual value, agrees with the realised direction.
pub fn directional_symmetry(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    check_aligned(actual, forecast, 2)?;
    let hits = actual
        .windows(2)
        .zip(&forecast[1..])
        .filter(|(y, f)| (y[1] - y[0]) * (*f - y[0]) >= 0.0)
        .count();
    Ok(100.0 * hits as f64 / (actual.len() - 1) as f64)
}

pub fn accuracy(actual: &[f64], forecast: &[f64]) -> Result<AccuracyReport> {
    Ok(AccuracyReport {
        mape: mape(actual, forecast)?,
        ds: directional_symmetry(actual, forecast)?,
        n_points: actual.len(),
    })
}

/// Diebold-Mariano statistic on squared-error loss, two-sided.
///
/// A negative statistic means model `a` has the smaller loss. The long-run
/// variance of the loss differential uses autocovariances up to lag `h - 1`.
pub fn dm_test(errors_a: &[f64], errors_b: &[f64], horizon: usize) -> Result<TestResult> {
    check_aligned(errors_a, errors_b, 10)?;
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let d: Vec<f64> = errors_a
        .iter()
        .zip(errors_b)
        .map(|(a, b)| a * a - b * b)
        .collect();
    let t = d.len();
    let d_bar = mean(&d);
    let autocov = |k: usize| -> f64 {
        (k..t)
            .map(|i| (d[i] - d_bar) * (d[i - k] - d_bar))
            .sum::<f64>()
            / t as f64
    };
    let gamma0 = autocov(0);
    if gamma0 <= f64::EPSILON * d_bar.abs().max(f64::MIN_POSITIVE) || gamma0 == 0.0 {
        return Err(Error::Degenerate(
            "forecasts identical under loss (zero variance of the loss differential)".into(),
        ));
    }
    let mut lrv = gamma0 + 2.0 * (1..horizon.min(t)).map(autocov).sum::<f64>();
    if lrv <= 0.0 {
        // Truncated estimate can go negative for h > 1; fall back to gamma0.
        lrv = gamma0;
    }
    let statistic = d_bar / (lrv / t as f64).sqrt();
    Ok(TestResult::normal(statistic, Alternative::TwoSided))
}

/// Pesaran-Timmermann test of directional forecasting power, one-sided
/// (greater). Directions are `sign(y[t+1] - y[t])` against
/// `sign(f[t+1] - y[t])`, with a move counted as "up" when strictly positive.
pub fn pt_test(actual: &[f64], forecast: &[f64]) -> Result<TestResult> {
    check_aligned(actual, forecast, 11)?;
    let moves: Vec<(bool, bool)> = actual
        .windows(2)
        .zip(&forecast[1..])
        .map(|(y, f)| (y[1] - y[0] > 0.0, *f - y[0] > 0.0))
        .collect();
    let n = moves.len() as f64;
    let p_hat = moves.iter().filter(|(a, f)| a == f).count() as f64 / n;
    let py = moves.iter().filter(|(a, _)| *a).count() as f64 / n;
    let px = moves.iter().filter(|(_, f)| *f).count() as f64 / n;
    if py == 0.0 || py == 1.0 {
        return Err(Error::Degenerate(
            "all actual directions are identical; PT variance collapses".into(),
        ));
    }
    let p_star = py * px + (1.0 - py) * (1.0 - px);
    let var_p = p_star * (1.0 - p_star) / n;
    let var_p_star = (2.0 * py - 1.0).powi(2) * px * (1.0 - px) / n
        + (2.0 * px - 1.0).powi(2) * py * (1.0 - py) / n
        + 4.0 * py * px * (1.0 - py) * (1.0 - px) / (n * n);
    let denom = var_p - var_p_star;
    if denom <= 0.0 {
        return Err(Error::Degenerate(
            "forecast directions are constant; PT variance collapses".into(),
        ));
    }
    let statistic = (p_hat - p_star) / denom.sqrt();
    Ok(TestResult::normal(statistic, Alternative::Greater))
}

pub fn descriptive_stats(series: &[f64]) -> Result<DescriptiveStats> {
    if series.len() < 4 {
        return Err(Error::invalid(format!(
            "descriptive statistics need at least 4 values, got {}",
            series.len()
        )));
    }
    let m = mean(series);
    let central = |p: i32| series.iter().map(|v| (v - m).powi(p)).sum::<f64>() / series.len() as f64;
    let m2 = central(2);
    let (skewness, kurtosis) = if m2 > 0.0 {
        (central(3) / m2.powf(1.5), central(4) / (m2 * m2))
    } else {
        log::warn!("constant series: skewness and kurtosis reported as 0");
        (0.0, 0.0)
    };
    Ok(DescriptiveStats {
        min: series.iter().copied().fold(f64::INFINITY, f64::min),
        max: series.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: m,
        std: std_dev(series),
        skewness,
        kurtosis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn mape_fixtures() {
        assert_eq!(mape(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            mape(&[100.0, 200.0], &[110.0, 180.0]).unwrap(),
            10.0,
            epsilon = 1e-12
        );
        match mape(&[1.0, 0.0], &[1.0, 1.0]) {
            Err(Error::InvalidInput(msg)) => assert!(msg.contains("index 1")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ds_fixtures() {
        let y = [1.0, 2.0, 4.0, 3.0, 5.0];
        assert_eq!(directional_symmetry(&y, &y).unwrap(), 100.0);
        let up = [1.0, 2.0, 3.0, 4.0];
        let below = [0.0, 0.5, 1.5, 2.5];
        assert_eq!(directional_symmetry(&up, &below).unwrap(), 0.0);
        let flat = [3.0; 5];
        assert_eq!(
            directional_symmetry(&flat, &[9.0, -1.0, 4.0, 0.0, 7.0]).unwrap(),
            100.0
        );
        assert!(directional_symmetry(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn dm_detects_uniformly_smaller_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eb: Vec<f64> = (0..50).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let ea: Vec<f64> = eb.iter().map(|e| 0.5 * e).collect();
        let r = dm_test(&ea, &eb, 1).unwrap();
        assert!(r.statistic < -1.69, "statistic {}", r.statistic);
        assert!(r.p_value < 0.05);
        let swapped = dm_test(&eb, &ea, 1).unwrap();
        assert_eq!(swapped.statistic, -r.statistic);
    }

    #[test]
    fn dm_identical_losses_degenerate() {
        let e = vec![1.0; 20];
        assert!(matches!(dm_test(&e, &e, 1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn pt_perfect_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let y: Vec<f64> = (0..60).map(|_| rng.random_range(0.0..10.0)).collect();
        let r = pt_test(&y, &y).unwrap();
        assert!(r.statistic > 3.0 && r.p_value < 0.01);
    }

    #[test]
    fn pt_inverted_directions_flip_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y: Vec<f64> = (0..80).map(|_| rng.random_range(0.0..10.0)).collect();
        let f: Vec<f64> = (0..80)
            .map(|t| if t == 0 { y[0] } else { y[t - 1] + rng.random_range(-1.0..1.0) * (y[t] - y[t - 1]).abs().max(0.1) })
            .collect();
        let inverted: Vec<f64> = (0..80)
            .map(|t| if t == 0 { f[0] } else { 2.0 * y[t - 1] - f[t] })
            .collect();
        let s = pt_test(&y, &f).unwrap().statistic;
        let si = pt_test(&y, &inverted).unwrap().statistic;
        assert!((s + si).abs() < 0.25 * s.abs().max(1.0), "{s} vs {si}");
    }

    #[test]
    fn pt_constant_actual_direction_degenerate() {
        let y: Vec<f64> = (0..20).map(|t| t as f64).collect();
        assert!(matches!(pt_test(&y, &y), Err(Error::Degenerate(_))));
    }

    #[test]
    fn kurtosis_conventions() {
        let two_point = [-2.0, 2.0, -2.0, 2.0];
        let s = descriptive_stats(&two_point).unwrap();
        assert_abs_diff_eq!(s.kurtosis, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.skewness, 0.0, epsilon = 1e-12);
        let sym = [-3.0, -1.0, 0.0, 1.0, 3.0];
        assert_abs_diff_eq!(descriptive_stats(&sym).unwrap().skewness, 0.0, epsilon = 1e-12);
        let c = descriptive_stats(&[5.0; 6]).unwrap();
        assert_eq!((c.skewness, c.kurtosis), (0.0, 0.0));
    }

    #[test]
    fn gaussian_kurtosis_near_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let x: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let s = descriptive_stats(&x).unwrap();
        assert!((s.kurtosis - 3.0).abs() < 0.1);
        assert!(s.min <= s.mean && s.mean <= s.max && s.std >= 0.0);
    }

    proptest! {
        #[test]
        fn mape_scale_invariant_translation_sensitive(
            pairs in proptest::collection::vec((1.0f64..100.0, 1.0f64..100.0), 1..40),
            c in 0.1f64..50.0,
        ) {
            let (y, f): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let base = mape(&y, &f).unwrap();
            let ys: Vec<f64> = y.iter().map(|v| v * c).collect();
            let fs: Vec<f64> = f.iter().map(|v| v * c).collect();
            prop_assert!((mape(&ys, &fs).unwrap() - base).abs() <= 1e-9 * base.max(1.0));
            if base > 1e-6 {
                let yt: Vec<f64> = y.iter().map(|v| v + 1000.0).collect();
                let ft: Vec<f64> = f.iter().map(|v| v + 1000.0).collect();
                prop_assert!(mape(&yt, &ft).unwrap() < base);
            }
        }

        #[test]
        fn dm_antisymmetric_and_p_in_unit_interval(
            pairs in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 10..60),
            h in 1usize..7,
        ) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            if let (Ok(r1), Ok(r2)) = (dm_test(&a, &b, h), dm_test(&b, &a, h)) {
                prop_assert_eq!(r1.statistic, -r2.statistic);
                prop_assert!((0.0..=1.0).contains(&r1.p_value));
            }
        }

        #[test]
        fn ds_is_100_for_perfect_forecasts(y in proptest::collection::vec(-50.0f64..50.0, 2..40)) {
            prop_assert_eq!(directional_symmetry(&y, &y).unwrap(), 100.0);
        }
    }
}
