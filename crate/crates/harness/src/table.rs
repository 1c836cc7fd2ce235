//! The observables CSV: one row per grid point and observable.

use std::path::Path;

use serde::{Deserialize, Serialize};
use zn_sharpening::DisorderedObservable;

use crate::config::{ExperimentConfig, GridPoint};
use crate::error::{HarnessError, Result};
use crate::runner::TaskResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub t: usize,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub observable: String,
    pub value: f64,
    pub stderr: f64,
    pub n_realizations: usize,
    pub seed: u64,
}

/// Disorder averages per grid point, reduced in task order. `results`
/// must be sorted by task id and contain only successful tasks.
pub fn reduce(
    config: &ExperimentConfig,
    grid: &[GridPoint],
    results: &[TaskResult],
) -> Result<Vec<ObservableRow>> {
    let mut rows = Vec::new();
    for (index, point) in grid.iter().enumerate() {
        let records: Vec<_> = results
            .iter()
            .filter(|r| r.key.point == index)
            .filter_map(|r| r.record.as_ref())
            .collect();
        for name in config.mode.observables() {
            let values: Vec<f64> = records
                .iter()
                .filter_map(|r| r.values.get(*name).copied())
                .collect();
            if values.is_empty() {
                continue;
            }
            let avg = DisorderedObservable::from_values(values)?;
            rows.push(ObservableRow {
                n: config.n,
                l: point.l,
                t: point.t,
                temperature: point.temperature,
                observable: name.to_string(),
                value: avg.value,
                stderr: avg.stderr,
                n_realizations: avg.n_realizations,
                seed: config.seed,
            });
        }
    }
    Ok(rows)
}

pub fn write_rows(path: &Path, rows: &[ObservableRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ObservableRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

fn csv_io(path: &Path, e: csv::Error) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        other => HarnessError::Usage(format!("{}: {other:?}", path.display())),
    }
}
