//! CSV ingestion in the FRED export layout (`DATE,VALUE`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Which columns hold the date label and the observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSelector {
    pub date: String,
    pub value: String,
}

impl Default for ColumnSelector {
    fn default() -> Self {
        Self { date: "DATE".into(), value: "VALUE".into() }
    }
}

/// A parsed column with its date labels. Dates are opaque strings compared
/// lexicographically, which orders ISO-8601 dates chronologically.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSeries {
    pub name: String,
    pub dates: Vec<String>,
    pub values: Vec<f64>,
}

impl LoadedSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn find_column(header: &csv::StringRecord, wanted: &str) -> Option<usize> {
    header.iter().position(|h| h.trim().eq_ignore_ascii_case(wanted))
}

/// Reads one series. FRED names the value column after the series id, so a
/// two-column file whose value column is not found falls back to column 2 and
/// takes its header as the series name; `observation_date` is accepted for
/// the date column as in newer exports.
pub fn load_csv(path: &Path, columns: &ColumnSelector) -> CliResult<LoadedSeries> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(false).from_reader(file);
    let header = reader.headers().map_err(|source| CliError::Csv { path: path.into(), source })?.clone();
    let missing = |column: &str| CliError::MissingColumn {
        path: path.into(),
        column: column.into(),
        header: header.iter().collect::<Vec<_>>().join(","),
    };
    let date_col = find_column(&header, &columns.date)
        .or_else(|| (columns.date == "DATE").then(|| find_column(&header, "observation_date")).flatten())
        .ok_or_else(|| missing(&columns.date))?;
    let value_col = match find_column(&header, &columns.value) {
        Some(c) => c,
        None if header.len() == 2 && columns.value == "VALUE" => 1 - date_col,
        None => return Err(missing(&columns.value)),
    };
    let name = match header.get(value_col).map(str::trim) {
        Some(h) if !h.eq_ignore_ascii_case("VALUE") && !h.is_empty() => h.to_string(),
        _ => path.file_stem().map_or_else(|| "series".into(), |s| s.to_string_lossy().into_owned()),
    };

    let mut dates: Vec<String> = Vec::new();
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // header is row 1
        let row = i + 2;
        let record = record.map_err(|source| CliError::Csv { path: path.into(), source })?;
        let date = record.get(date_col).unwrap_or_default().to_string();
        let raw = record.get(value_col).unwrap_or_default();
        if raw.is_empty() || raw == "." {
            return Err(CliError::MissingValue { path: path.into(), row, raw: raw.into() });
        }
        let value: f64 = raw.parse().map_err(|_| CliError::Malformed { path: path.into(), row, raw: raw.into() })?;
        if !value.is_finite() {
            return Err(CliError::Malformed { path: path.into(), row, raw: raw.into() });
        }
        if let Some(previous) = dates.last() {
            if date.as_str() <= previous.as_str() {
                return Err(CliError::NonMonotoneDates { path: path.into(), row, date, previous: previous.clone() });
            }
        }
        dates.push(date);
        values.push(value);
    }
    if values.is_empty() {
        return Err(CliError::Empty { path: path.into() });
    }
    Ok(LoadedSeries { name, dates, values })
}

/// Restricts every series to the dates present in all of them.
pub fn align_on_dates(series: &[LoadedSeries]) -> CliResult<Vec<LoadedSeries>> {
    let Some(first) = series.first() else {
        return Ok(Vec::new());
    };
    let common: Vec<&String> = first
        .dates
        .iter()
        .filter(|d| series[1..].iter().all(|s| s.dates.binary_search(d).is_ok()))
        .collect();
    if common.is_empty() {
        return Err(CliError::NoOverlap);
    }
    Ok(series
        .iter()
        .map(|s| {
            let (dates, values) = common
                .iter()
                .map(|d| {
                    let i = s.dates.binary_search(d).expect("common date");
                    (s.dates[i].clone(), s.values[i])
                })
                .unzip();
            LoadedSeries { name: s.name.clone(), dates, values }
        })
        .collect())
}

pub(crate) fn log_transform(series: &LoadedSeries, path: &Path) -> CliResult<LoadedSeries> {
    let values = series
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| if v > 0.0 { Ok(v.ln()) } else { Err(CliError::NonPositive { path: PathBuf::from(path), row: i + 2, value: v }) })
        .collect::<CliResult<_>>()?;
    Ok(LoadedSeries { values, ..series.clone() })
}
