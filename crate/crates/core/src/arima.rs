//! Seasonal ARIMA estimation by conditional sum of squares, automatic order
//! selection by AIC, and minimum-MSE forecasting.
//!
//! Polynomials follow the negative-sign convention on both sides:
//! `(1 - sum phi_i B^i)(1 - sum Phi_j B^{js}) (w_t - mu) =
//!  (1 - sum theta_i B^i)(1 - sum Theta_j B^{js}) e_t`,
//! where `w` is the differenced series.

use std::collections::BTreeSet;
use std::fmt;

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{mean, std_dev};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub seasonal_p: usize,
    pub seasonal_d: usize,
    pub seasonal_q: usize,
    /// Seasonal period; 0 means non-seasonal.
    pub period: usize,
    /// Estimate a mean for the once-differenced series (a drift term).
    /// Only meaningful when `d + D = 1`.
    pub drift: bool,
}

impl ArimaOrder {
    pub fn new(p: usize, d: usize, q: usize) -> Self {
        ArimaOrder { p, d, q, seasonal_p: 0, seasonal_d: 0, seasonal_q: 0, period: 0, drift: false }
    }

    pub fn seasonal(p: usize, d: usize, q: usize, sp: usize, sd: usize, sq: usize, period: usize) -> Self {
        ArimaOrder { p, d, q, seasonal_p: sp, seasonal_d: sd, seasonal_q: sq, period, drift: false }
    }

    pub fn with_drift(self, drift: bool) -> Self {
        ArimaOrder { drift, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.period == 0 && (self.seasonal_p + self.seasonal_d + self.seasonal_q) > 0 {
            return Err(Error::invalid(format!("{self}: seasonal terms need a period")));
        }
        if self.period == 1 {
            return Err(Error::invalid(format!("{self}: seasonal period 1 is not seasonal")));
        }
        if self.drift && self.d + self.seasonal_d != 1 {
            return Err(Error::invalid(format!("{self}: drift needs exactly one difference")));
        }
        if self.d + self.seasonal_d > 3 {
            return Err(Error::invalid(format!("{self}: total differencing above 3")));
        }
        Ok(())
    }

    /// Number of ARMA coefficients (excluding intercept and variance).
    pub fn n_coefficients(&self) -> usize {
        self.p + self.q + self.seasonal_p + self.seasonal_q
    }

    /// A mean on the differenced scale: always without differencing, and
    /// as drift after exactly one difference when requested.
    pub fn includes_intercept(&self) -> bool {
        match self.d + self.seasonal_d {
            0 => true,
            1 => self.drift,
            _ => false,
        }
    }

    /// Observations consumed by differencing.
    pub fn differencing_loss(&self) -> usize {
        self.d + self.seasonal_d * self.period
    }

    /// Span of the expanded autoregressive polynomial.
    pub fn ar_span(&self) -> usize {
        self.p + self.seasonal_p * self.period
    }

    pub fn min_length(&self) -> usize {
        3 * self.n_coefficients() + self.differencing_loss() + 10
    }
}

impl fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ARIMA({},{},{})", self.p, self.d, self.q)?;
        if self.period > 0 {
            write!(
                f,
                "({},{},{})[{}]",
                self.seasonal_p, self.seasonal_d, self.seasonal_q, self.period
            )?;
        }
        if self.drift {
            write!(f, " with drift")?;
        }
        Ok(())
    }
}

/// One differencing pass `w_t = x_t - x_{t-lag}` with the values needed to undo it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceStage {
    pub lag: usize,
    /// First `lag` values of the input to this stage.
    pub head: Vec<f64>,
    /// Last `lag` values of the input to this stage.
    pub tail: Vec<f64>,
}

/// Differencing passes in application order (seasonal first).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Differencing {
    pub stages: Vec<DifferenceStage>,
}

/// Applies `(1-B)^d (1-B^s)^D`.
pub fn difference(x: &[f64], d: usize, seasonal_d: usize, period: usize) -> Result<(Vec<f64>, Differencing)> {
    if seasonal_d > 0 && period < 2 {
        return Err(Error::invalid("seasonal differencing needs a period of at least 2"));
    }
    let lags = std::iter::repeat_n(period, seasonal_d).chain(std::iter::repeat_n(1, d));
    let mut cur = x.to_vec();
    let mut stages = Vec::new();
    for lag in lags {
        if cur.len() <= lag {
            return Err(Error::invalid(format!(
                "series of length {} too short for d={d}, D={seasonal_d}, s={period}",
                x.len()
            )));
        }
        stages.push(DifferenceStage {
            lag,
            head: cur[..lag].to_vec(),
            tail: cur[cur.len() - lag..].to_vec(),
        });
        cur = (lag..cur.len()).map(|t| cur[t] - cur[t - lag]).collect();
    }
    Ok((cur, Differencing { stages }))
}

/// Inverts [`difference`] from the retained initial values.
pub fn integrate(w: &[f64], diff: &Differencing) -> Vec<f64> {
    let mut cur = w.to_vec();
    for stage in diff.stages.iter().rev() {
        let mut out = stage.head.clone();
        out.reserve(cur.len());
        for (i, v) in cur.iter().enumerate() {
            out.push(v + out[i]);
        }
        cur = out;
    }
    cur
}

/// Continues the differenced-scale values `future` past the end of the
/// original series.
pub fn integrate_forecast(future: &[f64], diff: &Differencing) -> Vec<f64> {
    let mut cur = future.to_vec();
    for stage in diff.stages.iter().rev() {
        let mut ext = stage.tail.clone();
        for (i, v) in cur.iter().enumerate() {
            ext.push(v + ext[i]);
        }
        cur = ext.split_off(stage.lag);
    }
    cur
}

/// Maps partial autocorrelations in `(-1, 1)` to the coefficients of a
/// polynomial `1 - sum c_i z^i` with all roots outside the unit circle.
pub fn pacf_to_coefficients(partials: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = Vec::with_capacity(partials.len());
    for (k, &r) in partials.iter().enumerate() {
        let prev = c.clone();
        for j in 0..k {
            c[j] = prev[j] - r * prev[k - 1 - j];
        }
        c.push(r);
    }
    c
}

/// True iff `1 - sum c_i z^i` has all roots strictly outside the unit circle
/// (step-down recursion; every partial must lie in `(-1, 1)`).
pub fn satisfies_root_condition(coefs: &[f64]) -> bool {
    let mut c = coefs.to_vec();
    while let Some(&r) = c.last() {
        if !(r.abs() < 1.0) {
            return false;
        }
        let k = c.len();
        let denom = 1.0 - r * r;
        let prev = c.clone();
        c.truncate(k - 1);
        for j in 0..k - 1 {
            c[j] = (prev[j] + r * prev[k - 2 - j]) / denom;
        }
    }
    true
}

/// Coefficients `a_k` (k = 1..) with `(1 - sum phi B^i)(1 - sum Phi B^{js}) = 1 - sum a_k B^k`.
fn expand(nonseasonal: &[f64], seasonal: &[f64], period: usize) -> Vec<f64> {
    let len = nonseasonal.len() + seasonal.len() * period;
    let mut poly = vec![0.0; len + 1];
    poly[0] = 1.0;
    for (i, v) in nonseasonal.iter().enumerate() {
        poly[i + 1] -= v;
    }
    for (j, sv) in seasonal.iter().enumerate() {
        let shift = (j + 1) * period;
        poly[shift] -= sv;
        for (i, v) in nonseasonal.iter().enumerate() {
            poly[shift + i + 1] += sv * v;
        }
    }
    poly[1..].iter().map(|v| -v).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub order: ArimaOrder,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sar: Vec<f64>,
    pub sma: Vec<f64>,
    pub intercept: f64,
    pub sigma2: f64,
    pub loglik: f64,
    pub aic: f64,
    /// Residuals that entered the likelihood.
    pub n_effective: usize,
    /// Leading differenced observations the likelihood conditions on.
    pub n_conditioning: usize,
    pub training_tail: TrainingTail,
}

/// State needed to continue the recursion past the training sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTail {
    pub differencing: Differencing,
    /// Differenced series (full).
    pub differenced: Vec<f64>,
    /// Residuals aligned with `differenced`; zero over the conditioning prefix.
    pub residuals: Vec<f64>,
    /// Length of the undifferenced training series.
    pub series_len: usize,
}

impl ArimaModel {
    pub fn n_parameters(&self) -> usize {
        self.order.n_coefficients() + usize::from(self.order.includes_intercept()) + 1
    }

    fn ar_poly(&self) -> Vec<f64> {
        expand(&self.ar, &self.sar, self.order.period)
    }

    fn ma_poly(&self) -> Vec<f64> {
        expand(&self.ma, &self.sma, self.order.period)
    }

    /// Point forecasts for steps `1..=h` past the end of the training series.
    pub fn forecast(&self, h: usize) -> Result<Vec<f64>> {
        if h == 0 {
            return Err(Error::invalid("forecast horizon must be at least 1"));
        }
        let a = self.ar_poly();
        let m = self.ma_poly();
        let tail = &self.training_tail;
        let mut w: Vec<f64> = tail.differenced.iter().map(|v| v - self.intercept).collect();
        let mut e = tail.residuals.clone();
        let n = w.len();
        for t in n..n + h {
            let mut v = 0.0;
            for (k, ak) in a.iter().enumerate() {
                if let Some(prev) = (t).checked_sub(k + 1).map(|i| w[i]) {
                    v += ak * prev;
                }
            }
            for (k, mk) in m.iter().enumerate() {
                if let Some(prev) = (t).checked_sub(k + 1).map(|i| e[i]) {
                    v -= mk * prev;
                }
            }
            w.push(v);
            e.push(0.0);
        }
        let future: Vec<f64> = w[n..].iter().map(|v| v + self.intercept).collect();
        Ok(integrate_forecast(&future, &tail.differencing))
    }

    /// In-sample one-step-ahead predictions aligned with the training series;
    /// `None` where the conditional likelihood has no residual.
    pub fn one_step_fitted(&self, series: &[f64]) -> Result<Vec<Option<f64>>> {
        let tail = &self.training_tail;
        if series.len() != tail.series_len {
            return Err(Error::invalid(format!(
                "series has length {}, model was fit on {}",
                series.len(),
                tail.series_len
            )));
        }
        let offset = self.order.differencing_loss();
        Ok(series
            .iter()
            .enumerate()
            .map(|(t, x)| {
                let i = t.checked_sub(offset)?;
                (i >= self.n_conditioning).then(|| x - tail.residuals[i])
            })
            .collect())
    }

    /// The same coefficients applied to a new history, e.g. the training
    /// series extended by newly observed values.
    pub fn refilter(&self, series: &[f64]) -> Result<ArimaModel> {
        let (w, differencing) = difference(series, self.order.d, self.order.seasonal_d, self.order.period)?;
        let n_cond = self.n_conditioning;
        if w.len() <= n_cond {
            return Err(Error::invalid(format!(
                "series of length {} too short for {}",
                series.len(),
                self.order
            )));
        }
        let residuals = css_residuals(&w, self.intercept, &self.ar_poly(), &self.ma_poly(), n_cond);
        let mut out = self.clone();
        out.n_conditioning = n_cond;
        out.finish_likelihood(&residuals, w.len() - n_cond);
        out.training_tail = TrainingTail {
            differencing,
            differenced: w,
            residuals,
            series_len: series.len(),
        };
        Ok(out)
    }

    fn finish_likelihood(&mut self, residuals: &[f64], n_eff: usize) {
        let ssr: f64 = residuals.iter().map(|e| e * e).sum();
        self.n_effective = n_eff;
        self.sigma2 = (ssr / n_eff as f64).max(f64::MIN_POSITIVE);
        self.loglik = -0.5 * n_eff as f64 * ((2.0 * std::f64::consts::PI * self.sigma2).ln() + 1.0);
        self.aic = -2.0 * self.loglik + 2.0 * self.n_parameters() as f64;
    }
}

fn css_residuals(w: &[f64], mu: f64, a: &[f64], m: &[f64], n_cond: usize) -> Vec<f64> {
    let mut e = vec![0.0; w.len()];
    for t in n_cond..w.len() {
        let mut v = w[t] - mu;
        for (k, ak) in a.iter().enumerate() {
            v -= ak * (w[t - k - 1] - mu);
        }
        for (k, mk) in m.iter().enumerate() {
            if t > k {
                v += mk * e[t - k - 1];
            }
        }
        e[t] = v;
    }
    e
}

/// Bound on partial autocorrelations; keeps fitted polynomials strictly
/// inside the stationary and invertible region in floating point.
const MAX_PARTIAL: f64 = 0.999;

/// Unconstrained parameterization: tanh-mapped partial autocorrelations for
/// each polynomial, then an intercept offset in units of the series std.
struct CssProblem<'a> {
    w: &'a [f64],
    order: ArimaOrder,
    n_cond: usize,
    center: f64,
    scale: f64,
}

struct Coefficients {
    ar: Vec<f64>,
    ma: Vec<f64>,
    sar: Vec<f64>,
    sma: Vec<f64>,
    intercept: f64,
}

impl CssProblem<'_> {
    fn dim(&self) -> usize {
        self.order.n_coefficients() + usize::from(self.order.includes_intercept())
    }

    fn unpack(&self, u: &[f64]) -> Coefficients {
        let o = &self.order;
        let mut it = u.iter().map(|v| MAX_PARTIAL * v.tanh());
        let mut take = |n: usize| pacf_to_coefficients(&it.by_ref().take(n).collect::<Vec<_>>());
        let ar = take(o.p);
        let ma = take(o.q);
        let sar = take(o.seasonal_p);
        let sma = take(o.seasonal_q);
        let intercept = if o.includes_intercept() {
            self.center + self.scale * u[o.n_coefficients()]
        } else {
            0.0
        };
        Coefficients { ar, ma, sar, sma, intercept }
    }

    fn residuals(&self, c: &Coefficients) -> Vec<f64> {
        let a = expand(&c.ar, &c.sar, self.order.period);
        let m = expand(&c.ma, &c.sma, self.order.period);
        css_residuals(self.w, c.intercept, &a, &m, self.n_cond)
    }

    fn objective(&self, u: &[f64]) -> f64 {
        let e = self.residuals(&self.unpack(u));
        let ssr: f64 = e.iter().map(|v| v * v).sum();
        let n_eff = (self.w.len() - self.n_cond) as f64;
        let v = 0.5 * n_eff * (ssr / n_eff).max(f64::MIN_POSITIVE).ln();
        if v.is_finite() { v } else { f64::MAX }
    }
}

const SIMPLEX_STEP: f64 = 0.5;
const NM_MAX_ITERS: u64 = 4000;

fn nelder_mead(problem: &CssProblem<'_>, start: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let dim = start.len();
    let mut simplex = vec![start.clone()];
    for i in 0..dim {
        let mut v = start.clone();
        v[i] += SIMPLEX_STEP;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-10)
        .map_err(|e| Error::numerical(format!("optimizer setup failed: {e}")))?;
    let res = Executor::new(problem_ref(problem), solver)
        .configure(|s| s.max_iters(NM_MAX_ITERS * dim as u64))
        .run()
        .map_err(|e| Error::numerical(format!("Nelder-Mead failed for {}: {e}", problem.order)))?;
    let state = res.state();
    let best = state
        .get_best_param()
        .cloned()
        .ok_or_else(|| Error::numerical(format!("Nelder-Mead returned no point for {}", problem.order)))?;
    Ok((best, state.get_best_cost()))
}

/// `Executor` takes the problem by value; borrow through a thin wrapper.
fn problem_ref<'a, 'b>(p: &'a CssProblem<'b>) -> ProblemRef<'a, 'b> {
    ProblemRef(p)
}

struct ProblemRef<'a, 'b>(&'a CssProblem<'b>);

impl CostFunction for ProblemRef<'_, '_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, u: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.0.objective(u))
    }
}

/// Fits `order` by conditional sum of squares.
pub fn fit(series: &[f64], order: ArimaOrder) -> Result<ArimaModel> {
    fit_conditioned(series, order, order.ar_span())
}

fn fit_conditioned(series: &[f64], order: ArimaOrder, n_cond: usize) -> Result<ArimaModel> {
    order.validate()?;
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("series contains non-finite values"));
    }
    if series.len() < order.min_length() {
        return Err(Error::invalid(format!(
            "{order} needs at least {} observations, got {}",
            order.min_length(),
            series.len()
        )));
    }
    let (w, differencing) = difference(series, order.d, order.seasonal_d, order.period)?;
    if w.len() < n_cond + order.n_coefficients() + 2 {
        return Err(Error::invalid(format!(
            "{order}: {} differenced observations leave too few residuals after conditioning on {n_cond}",
            w.len()
        )));
    }
    let sd = std_dev(&w);
    let scale = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
    let problem = CssProblem { w: &w, order, n_cond, center: mean(&w), scale };
    let dim = problem.dim();
    let u = if dim == 0 {
        Vec::new()
    } else {
        // A restart from the first optimum guards against a collapsed simplex.
        let (u1, _) = nelder_mead(&problem, vec![0.0; dim])?;
        nelder_mead(&problem, u1)?.0
    };
    let c = problem.unpack(&u);
    if c.ar.iter().chain(&c.ma).chain(&c.sar).chain(&c.sma).any(|v| !v.is_finite()) {
        return Err(Error::numerical(format!("{order}: non-finite coefficients")));
    }
    let residuals = problem.residuals(&c);
    let mut model = ArimaModel {
        order,
        ar: c.ar,
        ma: c.ma,
        sar: c.sar,
        sma: c.sma,
        intercept: c.intercept,
        sigma2: 0.0,
        loglik: 0.0,
        aic: 0.0,
        n_effective: 0,
        n_conditioning: n_cond,
        training_tail: TrainingTail {
            differencing,
            differenced: w,
            residuals: Vec::new(),
            series_len: series.len(),
        },
    };
    model.finish_likelihood(&residuals, model.training_tail.differenced.len() - n_cond);
    model.training_tail.residuals = residuals;
    Ok(model)
}

/// 5% critical value of the KPSS level-stationarity statistic.
pub const KPSS_CRITICAL_5PCT: f64 = 0.463;

/// KPSS statistic for level stationarity with a Bartlett long-run variance
/// using `floor(3 sqrt(n) / 13)` lags.
pub fn kpss_statistic(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 4 {
        return Err(Error::invalid("KPSS needs at least 4 observations"));
    }
    let mu = mean(x);
    let e: Vec<f64> = x.iter().map(|v| v - mu).collect();
    let nf = n as f64;
    let lags = ((3.0 * nf.sqrt() / 13.0).floor() as usize).min(n - 1);
    let gamma = |k: usize| e[k..].iter().zip(&e).map(|(a, b)| a * b).sum::<f64>() / nf;
    let mut lrv = gamma(0);
    for k in 1..=lags {
        lrv += 2.0 * (1.0 - k as f64 / (lags as f64 + 1.0)) * gamma(k);
    }
    if !(lrv > 0.0) {
        return Ok(0.0);
    }
    let mut s = 0.0;
    let mut acc = 0.0;
    for v in &e {
        s += v;
        acc += s * s;
    }
    Ok(acc / (nf * nf * lrv))
}

fn autocorrelation(x: &[f64], lag: usize) -> f64 {
    if x.len() <= lag {
        return 0.0;
    }
    let mu = mean(x);
    let denom: f64 = x.iter().map(|v| (v - mu).powi(2)).sum();
    if denom == 0.0 {
        return 0.0;
    }
    x[lag..].iter().zip(x).map(|(a, b)| (a - mu) * (b - mu)).sum::<f64>() / denom
}

/// Seasonal autocorrelation above which one seasonal difference is taken.
pub const SEASONAL_ACF_THRESHOLD: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub max_p: usize,
    pub max_q: usize,
    pub max_seasonal_p: usize,
    pub max_seasonal_q: usize,
    pub max_d: usize,
    pub max_seasonal_d: usize,
    /// Consider a drift term when the series is differenced exactly once.
    pub allow_drift: bool,
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds {
            max_p: 5,
            max_q: 5,
            max_seasonal_p: 2,
            max_seasonal_q: 2,
            max_d: 2,
            max_seasonal_d: 1,
            allow_drift: true,
        }
    }
}

/// Differencing orders chosen by repeated KPSS tests and the seasonal
/// autocorrelation rule.
pub fn select_differencing(series: &[f64], period: usize, bounds: &SearchBounds) -> Result<(usize, usize)> {
    let mut d = 0;
    let mut cur = series.to_vec();
    while d < bounds.max_d && cur.len() > 10 && kpss_statistic(&cur)? > KPSS_CRITICAL_5PCT {
        cur = difference(&cur, 1, 0, 0)?.0;
        d += 1;
    }
    let seasonal_d = usize::from(
        period >= 2
            && bounds.max_seasonal_d > 0
            && cur.len() > 3 * period
            && autocorrelation(&cur, period) > SEASONAL_ACF_THRESHOLD,
    );
    Ok((d, seasonal_d))
}

/// Result of [`auto_fit_traced`]: the selected model plus every order the
/// search fitted, with its AIC (`None` when the fit failed).
#[derive(Debug, Clone)]
pub struct AutoFit {
    pub model: ArimaModel,
    pub visited: Vec<(ArimaOrder, Option<f64>)>,
}

pub fn auto_fit(series: &[f64], period: usize, bounds: &SearchBounds) -> Result<ArimaModel> {
    auto_fit_traced(series, period, bounds).map(|a| a.model)
}

type Candidate = (usize, usize, usize, usize, bool);

/// Ranking key: AIC, then parameter count, then the orders themselves.
fn better(a: &ArimaModel, b: &ArimaModel) -> bool {
    let key = |m: &ArimaModel| {
        (m.n_parameters(), m.order.p, m.order.q, m.order.seasonal_p, m.order.seasonal_q, m.order.drift)
    };
    match a.aic.partial_cmp(&b.aic) {
        Some(std::cmp::Ordering::Less) => true,
        Some(std::cmp::Ordering::Greater) => false,
        _ => key(a) < key(b),
    }
}

/// Stepwise AIC search over `(p, q, P, Q)` and drift after choosing `(d, D)`.
pub fn auto_fit_traced(series: &[f64], period: usize, bounds: &SearchBounds) -> Result<AutoFit> {
    let seasonal = period >= 2;
    let (d, seasonal_d) = select_differencing(series, if seasonal { period } else { 0 }, bounds)?;
    let s = if seasonal { period } else { 0 };
    let (max_sp, max_sq) = if seasonal {
        (bounds.max_seasonal_p, bounds.max_seasonal_q)
    } else {
        (0, 0)
    };
    let n_w = series.len().saturating_sub(d + seasonal_d * s);
    // All candidates share one conditioning prefix so their AICs are comparable;
    // shrink the seasonal AR bound until enough residuals remain.
    let mut max_sp = max_sp;
    let mut n_cond = bounds.max_p + max_sp * s;
    while max_sp > 0 && n_w < n_cond + 30 {
        max_sp -= 1;
        n_cond = bounds.max_p + max_sp * s;
    }
    let drift = bounds.allow_drift && d + seasonal_d == 1;
    let make = |c: Candidate| ArimaOrder::seasonal(c.0, d, c.1, c.2, seasonal_d, c.3, s).with_drift(c.4);
    let admissible = |c: &Candidate| {
        c.0 <= bounds.max_p
            && c.1 <= bounds.max_q
            && c.2 <= max_sp
            && c.3 <= max_sq
            && (drift || !c.4)
            && series.len() >= make(*c).min_length()
            && n_w >= n_cond + make(*c).n_coefficients() + 10
    };

    let mut visited: Vec<(ArimaOrder, Option<f64>)> = Vec::new();
    let mut seen: BTreeSet<Candidate> = BTreeSet::new();
    let mut failures: Vec<String> = Vec::new();
    let mut best: Option<ArimaModel> = None;

    let mut evaluate = |cands: Vec<Candidate>,
                        visited: &mut Vec<(ArimaOrder, Option<f64>)>,
                        best: &mut Option<ArimaModel>|
     -> bool {
        let cands: Vec<Candidate> = cands
            .into_iter()
            .filter(|c| admissible(c) && seen.insert(*c))
            .collect();
        let fits = par::map(&cands, |c| fit_conditioned(series, make(*c), n_cond));
        let mut improved = false;
        for (c, r) in cands.iter().zip(fits) {
            match r {
                Ok(m) => {
                    visited.push((m.order, Some(m.aic)));
                    if best.as_ref().is_none_or(|b| better(&m, b)) {
                        *best = Some(m);
                        improved = true;
                    }
                }
                Err(e) => {
                    visited.push((make(*c), None));
                    failures.push(format!("{}: {e}", make(*c)));
                }
            }
        }
        improved
    };

    let seeds: Vec<Candidate> = if seasonal {
        vec![(2, 2, 1, 1, drift), (0, 0, 0, 0, drift), (1, 0, 1, 0, drift), (0, 1, 0, 1, drift)]
    } else {
        vec![(2, 2, 0, 0, drift), (0, 0, 0, 0, drift), (1, 0, 0, 0, drift), (0, 1, 0, 0, drift)]
    };
    evaluate(seeds, &mut visited, &mut best);
    for _ in 0..100 {
        let Some(cur) = best.as_ref() else { break };
        let o = cur.order;
        let (p, q, sp, sq) = (o.p as isize, o.q as isize, o.seasonal_p as isize, o.seasonal_q as isize);
        let dr = o.drift;
        let mut moves = vec![
            (p - 1, q, sp, sq),
            (p + 1, q, sp, sq),
            (p, q - 1, sp, sq),
            (p, q + 1, sp, sq),
            (p - 1, q - 1, sp, sq),
            (p + 1, q + 1, sp, sq),
        ];
        if seasonal {
            moves.extend([
                (p, q, sp - 1, sq),
                (p, q, sp + 1, sq),
                (p, q, sp, sq - 1),
                (p, q, sp, sq + 1),
                (p, q, sp - 1, sq - 1),
                (p, q, sp + 1, sq + 1),
            ]);
        }
        let mut cands: Vec<Candidate> = moves
            .into_iter()
            .filter(|m| m.0 >= 0 && m.1 >= 0 && m.2 >= 0 && m.3 >= 0)
            .map(|m| (m.0 as usize, m.1 as usize, m.2 as usize, m.3 as usize, dr))
            .collect();
        cands.push((o.p, o.q, o.seasonal_p, o.seasonal_q, !dr));
        if !evaluate(cands, &mut visited, &mut best) {
            break;
        }
    }
    match best {
        Some(model) => {
            log::debug!("auto ARIMA selected {} (AIC {:.3})", model.order, model.aic);
            Ok(AutoFit { model, visited })
        }
        None => Err(Error::numerical(format!(
            "no candidate order could be fit on {} observations; attempts: [{}]",
            series.len(),
            failures.join("; ")
        ))),
    }
}
