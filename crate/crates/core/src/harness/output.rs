//! CSV and JSON writers for raw runs and cell summaries.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::stats::CellSummary;
use super::ExperimentSummary;
use crate::error::{Error, Result};

/// One run as it appears in the raw output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub experiment_id: String,
    pub cell_key: String,
    pub trial_index: u64,
    pub seed: u64,
    pub realized_length: usize,
    pub evaluations: u64,
    pub hit_budget: bool,
}

pub const RAW_COLUMNS: [&str; 7] = [
    "experiment_id",
    "cell_key",
    "trial_index",
    "seed",
    "realized_length",
    "evaluations",
    "hit_budget",
];

pub const SUMMARY_COLUMNS: [&str; 9] = [
    "experiment_id",
    "cell_key",
    "trials",
    "censored",
    "mean",
    "sd",
    "se",
    "ci_lo",
    "ci_hi",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::Config(format!("write failed: {e}"))
}

fn write_csv<W: Write, T: Serialize>(w: W, columns: &[&str], rows: &[T]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(columns).map_err(io)?;
    for row in rows {
        out.serialize(row).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_raw<W: Write>(w: W, rows: &[RawRecord], format: Format) -> Result<()> {
    match format {
        Format::Csv => write_csv(w, &RAW_COLUMNS, rows),
        Format::Json => serde_json::to_writer_pretty(w, rows).map_err(io),
    }
}

pub fn write_summary<W: Write>(w: W, summaries: &[ExperimentSummary], format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let cells: Vec<&CellSummary> = summaries.iter().flat_map(|s| &s.cells).collect();
            write_csv(w, &SUMMARY_COLUMNS, &cells)
        }
        Format::Json => serde_json::to_writer_pretty(w, summaries).map_err(io),
    }
}
