//! Reading and writing `(date, value)` series as CSV.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::series::{TimeSeries, YearMonth};
use crate::synthetic::{generate, SyntheticSpec};

/// Why a series file was rejected. Row numbers count data rows from 1,
/// not counting the header.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV{}: {message}", row_suffix(*.row))]
    Parse { row: Option<usize>, message: String },

    #[error("column {column:?} not found; header has {available:?}")]
    MissingColumn { column: String, available: Vec<String> },

    #[error("row {row}: cannot parse date {value:?} (expected YYYY-MM)")]
    BadDate { row: usize, value: String },

    #[error("row {row}: value {value:?} is not a number")]
    NonNumeric { row: usize, value: String },

    #[error("row {row}: month {date} already appeared at row {first_row}")]
    Duplicate { row: usize, date: YearMonth, first_row: usize },

    #[error("series has gaps; missing months: {}", join(missing))]
    Gaps { missing: Vec<YearMonth> },

    #[error("no data rows")]
    Empty,

    #[error(transparent)]
    Invalid(#[from] crate::Error),
}

fn row_suffix(row: Option<usize>) -> String {
    row.map(|r| format!(" at row {r}")).unwrap_or_default()
}

fn join(dates: &[YearMonth]) -> String {
    dates.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

/// Reads a monthly series from the named columns of a CSV file with a header.
/// Rows may come in any order; after sorting they must cover every month
/// between the first and the last exactly once.
pub fn ingest_csv(path: &Path, date_column: &str, value_column: &str, period: usize) -> Result<TimeSeries, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ingest_reader(file, date_column, value_column, period)
}

pub fn ingest_reader<R: Read>(
    reader: R,
    date_column: &str,
    value_column: &str,
    period: usize,
) -> Result<TimeSeries, IngestError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = csv
        .headers()
        .map_err(|e| IngestError::Parse {
            row: None,
            message: e.to_string(),
        })?
        .clone();
    let column = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| IngestError::MissingColumn {
            column: name.to_string(),
            available: header.iter().map(str::to_string).collect(),
        })
    };
    let (date_idx, value_idx) = (column(date_column)?, column(value_column)?);

    // Month -> (row, value).
    let mut rows: BTreeMap<YearMonth, (usize, f64)> = BTreeMap::new();
    for (i, record) in csv.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| IngestError::Parse {
            row: Some(row),
            message: e.to_string(),
        })?;
        let field = |idx: usize| record.get(idx).unwrap_or("");
        let date: YearMonth = field(date_idx).parse().map_err(|_| IngestError::BadDate {
            row,
            value: field(date_idx).to_string(),
        })?;
        let raw = field(value_idx);
        let value: f64 = raw
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| IngestError::NonNumeric {
                row,
                value: raw.to_string(),
            })?;
        if let Some((first_row, _)) = rows.get(&date) {
            return Err(IngestError::Duplicate {
                row,
                date,
                first_row: *first_row,
            });
        }
        rows.insert(date, (row, value));
    }
    let (Some(first), Some(last)) = (rows.keys().next().copied(), rows.keys().next_back().copied()) else {
        return Err(IngestError::Empty);
    };
    let missing: Vec<YearMonth> = (0..=last.months_since(&first))
        .map(|k| first.add_months(k))
        .filter(|d| !rows.contains_key(d))
        .collect();
    if !missing.is_empty() {
        return Err(IngestError::Gaps { missing });
    }
    let values = rows.values().map(|(_, v)| *v).collect();
    Ok(TimeSeries::new(values, first, period)?)
}

/// Writes `date,value` rows with shortest round-trip number formatting.
pub fn write_series_csv(path: &Path, series: &TimeSeries) -> std::io::Result<()> {
    let mut out = String::from("date,value\n");
    for (i, v) in series.values().iter().enumerate() {
        out.push_str(&format!("{},{v}\n", series.date(i)));
    }
    File::create(path)?.write_all(out.as_bytes())
}

/// Generates the synthetic series described by `spec` and writes it to `path`.
pub fn generate_synthetic(spec: &SyntheticSpec, path: &Path) -> Result<TimeSeries, IngestError> {
    let series = generate(spec)?;
    write_series_csv(path, &series).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(series)
}
