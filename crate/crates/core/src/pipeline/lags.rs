//! Lag selection by partial mutual information and direct-strategy datasets.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{mean, quantile, std_dev, Matrix};
use crate::par;
use crate::svr::{default_hyperparams, fit_lssvr, KernelRegressor};

/// Selected lag orders, strictly increasing, each in `1..=24`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagSet {
    lags: Vec<usize>,
    /// Lags in the order the selection added them.
    selection_order: Vec<usize>,
}

pub const MAX_LAG: usize = 24;

impl LagSet {
    pub fn new(mut lags: Vec<usize>) -> Result<Self> {
        let order = lags.clone();
        lags.sort_unstable();
        lags.dedup();
        if lags.is_empty() {
            return Err(Error::invalid("lag set is empty"));
        }
        if lags.len() != order.len() {
            return Err(Error::invalid(format!("lag set {order:?} has duplicates")));
        }
        if lags[0] == 0 || *lags.last().unwrap() > MAX_LAG {
            return Err(Error::invalid(format!("lags must lie in 1..={MAX_LAG}, got {order:?}")));
        }
        Ok(LagSet {
            lags,
            selection_order: order,
        })
    }

    pub fn lags(&self) -> &[usize] {
        &self.lags
    }

    pub fn selection_order(&self) -> &[usize] {
        &self.selection_order
    }

    pub fn max(&self) -> usize {
        *self.lags.last().expect("lag set is nonempty")
    }

    /// Lag values anchored at time `t`: `series[t - lag + 1]` for each lag.
    pub fn features_at(&self, series: &[f64], t: usize) -> Vec<f64> {
        self.lags.iter().map(|l| series[t + 1 - l]).collect()
    }
}

/// Rows `(y[t-lag+1] for each lag) -> y[t+h]` for every `t` with the whole
/// window inside the series.
pub fn build_direct_dataset(series: &[f64], lags: &LagSet, h: usize) -> Result<(Matrix, Vec<f64>)> {
    if h == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let n = series.len();
    if n < lags.max() + h {
        return Err(Error::invalid(format!(
            "series of length {n} is too short for maximum lag {} at horizon {h}",
            lags.max()
        )));
    }
    let first = lags.max() - 1;
    let rows: Vec<Vec<f64>> = (first..n - h).map(|t| lags.features_at(series, t)).collect();
    let target = (first..n - h).map(|t| series[t + h]).collect();
    Ok((Matrix::from_rows(&rows)?, target))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmiConfig {
    pub max_order: usize,
    pub max_lags: usize,
    pub bins: usize,
    pub permutations: usize,
    /// Quantile of the permutation null the best candidate must exceed.
    pub null_quantile: f64,
    pub seed: u64,
}

impl Default for PmiConfig {
    fn default() -> Self {
        PmiConfig {
            max_order: MAX_LAG,
            max_lags: 8,
            bins: 16,
            permutations: 100,
            null_quantile: 0.95,
            seed: 0,
        }
    }
}

/// Equal-frequency bin index of every value; ties broken by position.
fn equal_frequency_bins(x: &[f64], bins: usize) -> Vec<usize> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let mut out = vec![0; n];
    for (rank, i) in idx.into_iter().enumerate() {
        out[i] = rank * bins / n;
    }
    out
}

/// Plug-in mutual information (nats) between two binned variables.
fn binned_mi(a: &[usize], b: &[usize], bins: usize) -> f64 {
    let n = a.len() as f64;
    let mut joint = vec![0usize; bins * bins];
    let mut pa = vec![0usize; bins];
    let mut pb = vec![0usize; bins];
    for (&i, &j) in a.iter().zip(b) {
        joint[i * bins + j] += 1;
        pa[i] += 1;
        pb[j] += 1;
    }
    let mut mi = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            let c = joint[i * bins + j];
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (pa[i] as f64 * pb[j] as f64)).ln();
            }
        }
    }
    mi
}

/// Mutual information of two samples via equal-frequency histograms.
pub fn mutual_information(a: &[f64], b: &[f64], bins: usize) -> Result<f64> {
    if a.len() != b.len() || a.len() < bins.max(2) {
        return Err(Error::invalid(format!(
            "mutual information needs two samples of equal length >= {bins}, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(binned_mi(&equal_frequency_bins(a, bins), &equal_frequency_bins(b, bins), bins))
}

fn standardize(x: &[f64]) -> Vec<f64> {
    let m = mean(x);
    let s = std_dev(x);
    let s = if s > 0.0 { s } else { 1.0 };
    x.iter().map(|v| (v - m) / s).collect()
}

/// What is left of `v` after an LSSVR regression on the `given` columns.
fn residualize(v: &[f64], given: &[Vec<f64>]) -> Result<Vec<f64>> {
    let v = standardize(v);
    if given.is_empty() {
        return Ok(v);
    }
    let rows: Vec<Vec<f64>> = (0..v.len()).map(|i| given.iter().map(|c| c[i]).collect()).collect();
    let x = Matrix::from_rows(&rows)?;
    let model = fit_lssvr(&x, &v, default_hyperparams(&v)?)?;
    let fitted = model.predict_many(&x)?;
    Ok(v.iter().zip(fitted).map(|(a, b)| a - b).collect())
}

/// Greedy forward lag selection by partial mutual information.
///
/// Each round conditions the `h`-step target and every remaining candidate
/// lag on the lags chosen so far (LSSVR residuals) and adds the candidate
/// whose residual shares the most information with the target residual. The
/// round's winner must beat the chosen quantile of the largest candidate MI
/// under seeded permutations of the target residual; selection stops when
/// it does not or when `max_lags` are chosen. Lag 1 is always included.
pub fn select_lags_pmi(series: &[f64], h: usize, config: &PmiConfig) -> Result<LagSet> {
    let d = config.max_order;
    if !(1..=MAX_LAG).contains(&d) {
        return Err(Error::invalid(format!("maximum embedding order must be in 1..={MAX_LAG}, got {d}")));
    }
    if h == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    if series.len() < d + h + 30 {
        return Err(Error::invalid(format!(
            "lag selection needs at least {} observations for order {d} at horizon {h}, got {}",
            d + h + 30,
            series.len()
        )));
    }
    if config.bins < 2 || config.permutations == 0 || !(0.0..1.0).contains(&config.null_quantile) {
        return Err(Error::invalid("PMI needs >= 2 bins, >= 1 permutation and a quantile in [0, 1)"));
    }
    let rows: Vec<usize> = (d - 1..series.len() - h).collect();
    let target: Vec<f64> = rows.iter().map(|t| series[t + h]).collect();
    let candidate = |lag: usize| -> Vec<f64> { rows.iter().map(|t| series[t + 1 - lag]).collect() };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut chosen: Vec<usize> = Vec::new();
    while chosen.len() < config.max_lags.min(d) {
        let given: Vec<Vec<f64>> = chosen.iter().map(|&l| standardize(&candidate(l))).collect();
        let target_bins = equal_frequency_bins(&residualize(&target, &given)?, config.bins);
        let remaining: Vec<usize> = (1..=d).filter(|l| !chosen.contains(l)).collect();
        let cand_bins = par::map(&remaining, |&l| {
            residualize(&candidate(l), &given).map(|r| equal_frequency_bins(&r, config.bins))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

        let scores: Vec<f64> = cand_bins
            .iter()
            .map(|b| binned_mi(b, &target_bins, config.bins))
            .collect();
        // First maximum, i.e. the smallest lag among ties.
        let (best, best_mi) = scores
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, s)| if *s > acc.1 { (i, *s) } else { acc });

        let mut shuffled = target_bins.clone();
        let null: Vec<f64> = (0..config.permutations)
            .map(|_| {
                shuffled.shuffle(&mut rng);
                cand_bins
                    .iter()
                    .map(|b| binned_mi(b, &shuffled, config.bins))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let threshold = quantile(&null, config.null_quantile)?;
        log::debug!(
            "PMI round {}: lag {} scores {best_mi:.4} against null {threshold:.4}",
            chosen.len() + 1,
            remaining[best]
        );
        if best_mi <= threshold {
            break;
        }
        chosen.push(remaining[best]);
    }
    if !chosen.contains(&1) {
        chosen.push(1);
    }
    LagSet::new(chosen)
}
