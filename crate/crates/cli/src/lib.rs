//! File ingestion, configuration and report rendering around `asymcause-core`.

pub mod config;
pub mod error;
pub mod input;
pub mod report;

pub use config::{AnalysisConfig, InputSpec, OutputFormat};
pub use error::{CliError, CliResult};
pub use input::{align_on_dates, load_csv, ColumnSelector, LoadedSeries};
pub use report::{components_csv, render_report, run_pipeline, Report};
