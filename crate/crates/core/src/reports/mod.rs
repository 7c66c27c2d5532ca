//! CSV, SVG and manifest writers shared by the command-line front end.
//!
//! Every writer returns the file contents as a string. Numbers go through
//! [`fmt_num`] so that repeated runs produce byte-identical files.

mod manifest;
mod plots;
mod tables;

pub use manifest::{sha256_hex, Command, RunManifest};
pub use plots::{eigenvalue_map_svg, time_series_svg, LABELED_MODES};
pub use tables::{catalog_csv, modal_csv, power_flow_csv, time_series_csv};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("plot: {0}")]
    Plot(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown quantity {0}")]
    UnknownQuantity(String),
}

/// Shortest round-trip decimal form, with negative zero printed as `0`.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}
