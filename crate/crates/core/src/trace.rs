//! Checkpoint rows written by the engines and their CSV encoding.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{QaeError, Result};

/// Row of a path-integral (or classical annealing) trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealRow {
    pub step: u64,
    /// `Γ(t)`, `T1(t)` or `T(t)` depending on the schedule's control.
    pub control_value: f64,
    pub mean_slice_energy: f64,
    pub best_energy: f64,
    /// Accepted fraction of the proposals since the previous row.
    pub acceptance_rate: f64,
    pub clamp_count: u64,
}

/// Row of a Green's-function walker trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GfmcRow {
    pub step: u64,
    pub gamma: f64,
    pub mean_weight: f64,
    pub effective_population: f64,
    pub best_energy: f64,
    pub histogram_entropy: f64,
}

pub fn to_csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).map_err(csv_error)?;
    }
    writer.into_inner().map_err(|e| QaeError::Io(e.into_error()))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let bytes = to_csv_bytes(rows)?;
    let mut file = File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error)?;
    reader
        .deserialize()
        .map(|r| r.map_err(csv_error))
        .collect()
}

fn csv_error(e: csv::Error) -> QaeError {
    QaeError::Io(std::io::Error::other(e))
}
