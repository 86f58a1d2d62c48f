use std::path::PathBuf;

use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: no column named `{column}` (header: {header})")]
    MissingColumn { path: PathBuf, column: String, header: String },
    #[error("{path}, row {row}: missing value `{raw}`")]
    MissingValue { path: PathBuf, row: usize, raw: String },
    #[error("{path}, row {row}: cannot parse `{raw}` as a number")]
    Malformed { path: PathBuf, row: usize, raw: String },
    #[error("{path}, row {row}: date `{date}` does not follow `{previous}`")]
    NonMonotoneDates { path: PathBuf, row: usize, date: String, previous: String },
    #[error("{path}, row {row}: non-positive value {value} cannot be log-transformed")]
    NonPositive { path: PathBuf, row: usize, value: f64 },
    #[error("{path}: file has no data rows")]
    Empty { path: PathBuf },
    #[error("input series share no common dates")]
    NoOverlap,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Core { context: String, source: asymcause_core::Error },
}

impl CliError {
    pub(crate) fn core(context: impl Into<String>) -> impl FnOnce(asymcause_core::Error) -> Self {
        let context = context.into();
        move |source| Self::Core { context, source }
    }
}
