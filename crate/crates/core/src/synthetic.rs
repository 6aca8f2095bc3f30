//! Synthetic monthly series: linear trend, 12-month sinusoid and AR(1) noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::variance;
use crate::series::{TimeSeries, YearMonth};

/// `y_t = offset + slope t + amplitude sin(2 pi t / 12) + noise_t`, where the
/// noise is a stationary AR(1) with coefficient `ar` and marginal standard
/// deviation `noise_sd`.
///
/// With the default seed the variance of the 184-month series splits about 52/37/17
/// between trend, cycle and noise (the parts are not exactly uncorrelated).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub trend_slope: f64,
    pub seasonal_amplitude: f64,
    pub noise_sd: f64,
    pub ar: f64,
    pub offset: f64,
    pub length: usize,
    pub seed: u64,
    pub start: YearMonth,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            trend_slope: 0.85,
            seasonal_amplitude: 54.0,
            noise_sd: 26.0,
            ar: 0.2,
            offset: 500.0,
            length: 184,
            seed: 42,
            start: YearMonth { year: 2005, month: 1 },
        }
    }
}

pub const SYNTHETIC_PERIOD: usize = 12;

impl std::str::FromStr for SyntheticSpec {
    type Err = Error;

    /// `default`, or comma-separated overrides of the defaults such as
    /// `slope=1.2,noise=10,seed=7`. Keys: `slope`, `amplitude`, `noise`,
    /// `ar`, `offset`, `length`, `seed`, `start`.
    fn from_str(s: &str) -> Result<Self> {
        let mut spec = SyntheticSpec::default();
        let s = s.trim();
        if s.is_empty() || s == "default" {
            return Ok(spec);
        }
        for item in s.split(',') {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected key=value in synthetic spec, got {item:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || Error::invalid(format!("bad value {value:?} for synthetic {key}"));
            let real = || value.parse::<f64>().map_err(|_| bad());
            match key {
                "slope" => spec.trend_slope = real()?,
                "amplitude" => spec.seasonal_amplitude = real()?,
                "noise" => spec.noise_sd = real()?,
                "ar" => spec.ar = real()?,
                "offset" => spec.offset = real()?,
                "length" => spec.length = value.parse().map_err(|_| bad())?,
                "seed" => spec.seed = value.parse().map_err(|_| bad())?,
                "start" => spec.start = value.parse()?,
                _ => return Err(Error::invalid(format!("unknown synthetic spec key {key:?}"))),
            }
        }
        Ok(spec)
    }
}

/// The series split into its generating parts.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParts {
    pub series: TimeSeries,
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub noise: Vec<f64>,
}

impl SyntheticParts {
    /// Variance of each part as a share of the series variance, in percent.
    pub fn variance_shares(&self) -> [f64; 3] {
        let total = variance(self.series.values(), 0);
        [&self.trend, &self.seasonal, &self.noise].map(|c| 100.0 * variance(c, 0) / total)
    }
}

pub fn generate_parts(spec: &SyntheticSpec) -> Result<SyntheticParts> {
    if spec.length < 60 {
        return Err(Error::invalid(format!(
            "synthetic series needs length >= 60, got {}",
            spec.length
        )));
    }
    if !(spec.ar.abs() < 1.0) || !(spec.noise_sd >= 0.0) {
        return Err(Error::invalid("AR coefficient must lie in (-1, 1) and noise sd be >= 0"));
    }
    let n = spec.length;
    let trend: Vec<f64> = (0..n).map(|t| spec.offset + spec.trend_slope * t as f64).collect();
    let seasonal: Vec<f64> = (0..n)
        .map(|t| spec.seasonal_amplitude * (2.0 * std::f64::consts::PI * t as f64 / SYNTHETIC_PERIOD as f64).sin())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let innovation_sd = spec.noise_sd * (1.0 - spec.ar * spec.ar).sqrt();
    let noise = if innovation_sd > 0.0 {
        let normal = Normal::new(0.0, innovation_sd).map_err(|e| Error::invalid(e.to_string()))?;
        let mut e = Normal::new(0.0, spec.noise_sd)
            .map_err(|e| Error::invalid(e.to_string()))?
            .sample(&mut rng);
        (0..n)
            .map(|_| {
                let v = e;
                e = spec.ar * e + normal.sample(&mut rng);
                v
            })
            .collect()
    } else {
        vec![0.0; n]
    };
    let values: Vec<f64> = (0..n).map(|t| trend[t] + seasonal[t] + noise[t]).collect();
    if let Some(t) = values.iter().position(|v| *v <= 0.0) {
        return Err(Error::invalid(format!(
            "synthetic value at t = {t} is {:.3}; raise the offset",
            values[t]
        )));
    }
    Ok(SyntheticParts {
        series: TimeSeries::monthly(values, spec.start)?,
        trend,
        seasonal,
        noise,
    })
}

pub fn generate(spec: &SyntheticSpec) -> Result<TimeSeries> {
    generate_parts(spec).map(|p| p.series)
}
