//! Monthly calendar labels and the validated series type the pipeline runs on.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A calendar month, ordered chronologically. Serialized as `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct YearMonth {
    pub year: i32,
    /// 1 through 12.
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::invalid(format!("month must be in 1..=12, got {month}")));
        }
        Ok(YearMonth { year, month })
    }

    fn ordinal(&self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    fn from_ordinal(k: i64) -> Self {
        YearMonth {
            year: k.div_euclid(12) as i32,
            month: k.rem_euclid(12) as u32 + 1,
        }
    }

    pub fn add_months(&self, n: i64) -> Self {
        Self::from_ordinal(self.ordinal() + n)
    }

    /// Signed number of months from `earlier` to `self`.
    pub fn months_since(&self, earlier: &YearMonth) -> i64 {
        self.ordinal() - earlier.ordinal()
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    /// Accepts `YYYY-MM`, tolerating a trailing `-DD` day which is ignored.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("cannot parse {s:?} as a YYYY-MM date"));
        let mut parts = s.split('-');
        let year = parts.next().filter(|p| p.len() == 4).ok_or_else(bad)?;
        let month = parts.next().filter(|p| p.len() == 2).ok_or_else(bad)?;
        if let Some(day) = parts.next() {
            if day.len() != 2 || !day.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
        }
        if parts.next().is_some() {
            return Err(bad());
        }
        let year: i32 = year.parse().map_err(|_| bad())?;
        let month: u32 = month.parse().map_err(|_| bad())?;
        YearMonth::new(year, month).map_err(|_| bad())
    }
}

impl From<YearMonth> for String {
    fn from(d: YearMonth) -> String {
        d.to_string()
    }
}

impl TryFrom<String> for YearMonth {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// A finite, nonnegative series with a start month and a seasonal period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    start: YearMonth,
    period: usize,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, start: YearMonth, period: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::invalid("seasonal period must be at least 1"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("value at index {i} is not finite")));
        }
        if let Some(i) = values.iter().position(|v| *v < 0.0) {
            return Err(Error::invalid(format!(
                "value at index {i} is negative ({})",
                values[i]
            )));
        }
        Ok(TimeSeries { values, start, period })
    }

    /// Monthly series (period 12).
    pub fn monthly(values: Vec<f64>, start: YearMonth) -> Result<Self> {
        Self::new(values, start, 12)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start(&self) -> YearMonth {
        self.start
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Calendar label of observation `i`.
    pub fn date(&self, i: usize) -> YearMonth {
        self.start.add_months(i as i64)
    }

    /// Copy with `values` replaced (same start and period), validated again.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.start, self.period)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn month_arithmetic() {
        let m: YearMonth = "2015-11".parse().unwrap();
        assert_eq!(m.add_months(2).to_string(), "2016-01");
        assert_eq!(m.add_months(-11).to_string(), "2014-12");
        assert_eq!(m.add_months(14).months_since(&m), 14);
        assert_eq!("2015-06-01".parse::<YearMonth>().unwrap().to_string(), "2015-06");
    }

    #[test]
    fn rejects_malformed_dates() {
        for s in ["2015-13", "2015-6", "15-06", "2015/06", "2015-06-01-02", "abcd-01", ""] {
            assert!(s.parse::<YearMonth>().is_err(), "{s}");
        }
    }

    #[test]
    fn validates_values() {
        let start = YearMonth::new(2000, 1).unwrap();
        assert!(TimeSeries::monthly(vec![1.0, f64::NAN], start).is_err());
        assert!(TimeSeries::monthly(vec![1.0, -0.5], start).is_err());
        let ts = TimeSeries::monthly(vec![1.0; 24], start).unwrap();
        assert_eq!(ts.len(), 24);
        assert_eq!(ts.date(23).to_string(), "2001-12");
    }
}
