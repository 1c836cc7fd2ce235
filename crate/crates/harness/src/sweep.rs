//! Sweep orchestration: task pool, single-writer persistence, resume and
//! reduction.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Format, GridPoint};
use crate::error::{HarnessError, Result};
use crate::manifest::{
    read_results, write_atomic, RunManifest, CONFIG_FILE, DEBUG_DIR, OBSERVABLES_FILE,
    RESULTS_FILE, SUMMARY_FILE,
};
use crate::runner::{run_task, task_keys, TaskKey, TaskOutput, TaskResult};
use crate::table::{reduce, write_rows, ObservableRow};

/// Manifest rewrites happen at most once per this many finished tasks.
const MANIFEST_EVERY: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    #[serde(rename = "L")]
    pub l: usize,
    pub t: usize,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub tasks: usize,
    pub failed: usize,
    pub mean_acceptance: f64,
    pub mean_tau: f64,
    pub min_closures: u64,
    /// Records that needed spare chains to see any closure.
    pub spare_chains_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub mode: crate::config::Mode,
    pub n: usize,
    pub seed: u64,
    pub points: Vec<PointSummary>,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub manifest: RunManifest,
    pub rows: Vec<ObservableRow>,
    pub results: Vec<TaskResult>,
    pub output_dir: PathBuf,
}

impl SweepOutcome {
    pub fn failed(&self) -> Vec<usize> {
        self.manifest.missing()
    }
}

/// Runs every task of `config` not already completed in its output
/// directory, then reduces all results into the CSV and summary.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutcome> {
    run_sweep_with(config, |_| {})
}

/// As [`run_sweep`], calling `on_result` from the writer thread after each
/// result is persisted.
pub fn run_sweep_with<F: FnMut(&TaskResult)>(
    config: &ExperimentConfig,
    mut on_result: F,
) -> Result<SweepOutcome> {
    config.validate()?;
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let hash = config.hash();
    check_or_store_config(&dir, config, &hash)?;

    let grid = config.grid()?;
    let keys = task_keys(grid.len(), config.realizations);
    let mut manifest = RunManifest::new(hash.clone(), config.seed, &grid, &keys, config.debug_dump);

    let results_path = dir.join(RESULTS_FILE);
    let mut done: BTreeMap<usize, TaskResult> = BTreeMap::new();
    for r in read_results(&results_path)? {
        if r.error.is_none() && r.key.id < keys.len() && keys[r.key.id] == r.key {
            done.insert(r.key.id, r);
        }
    }
    // Rewrite without failed entries and any partial tail so appends start clean.
    let mut file = File::create(&results_path).map_err(|e| HarnessError::io(&results_path, e))?;
    for r in done.values() {
        writeln!(file, "{}", serde_json::to_string(r)?)
            .map_err(|e| HarnessError::io(&results_path, e))?;
        manifest.record(r);
    }
    file.sync_data()
        .map_err(|e| HarnessError::io(&results_path, e))?;
    drop(file);
    if config.debug_dump {
        let debug = dir.join(DEBUG_DIR);
        std::fs::create_dir_all(&debug).map_err(|e| HarnessError::io(&debug, e))?;
    }
    manifest.save(&dir)?;

    let pending: Vec<TaskKey> = keys
        .iter()
        .filter(|k| !done.contains_key(&k.id))
        .copied()
        .collect();
    let workers = config.resolved_workers()?;
    let mut fresh = Vec::with_capacity(pending.len());
    if !pending.is_empty() {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| HarnessError::Usage(format!("cannot start worker pool: {e}")))?;
        let (sender, receiver) = mpsc::channel::<TaskOutput>();
        let mut writer = OpenOptions::new()
            .append(true)
            .open(&results_path)
            .map_err(|e| HarnessError::io(&results_path, e))?;
        let write_outcome: Result<()> = std::thread::scope(|scope| {
            let grid = &grid;
            let pending = &pending;
            scope.spawn(move || {
                pool.install(|| {
                    pending.par_iter().for_each_with(sender, |tx, key| {
                        let _ = tx.send(run_task(config, &grid[key.point], *key));
                    });
                });
            });
            for (count, output) in receiver.iter().enumerate() {
                let line = serde_json::to_string(&output.result)?;
                writeln!(writer, "{line}").map_err(|e| HarnessError::io(&results_path, e))?;
                writer
                    .flush()
                    .map_err(|e| HarnessError::io(&results_path, e))?;
                if let Some(dump) = &output.dump {
                    let path = dir
                        .join(DEBUG_DIR)
                        .join(format!("task_{:06}.json", output.result.key.id));
                    std::fs::write(&path, dump).map_err(|e| HarnessError::io(&path, e))?;
                }
                manifest.record(&output.result);
                on_result(&output.result);
                if (count + 1) % MANIFEST_EVERY == 0 {
                    manifest.save(&dir)?;
                }
                fresh.push(output.result);
            }
            Ok(())
        });
        write_outcome?;
    }

    let mut results: Vec<TaskResult> = done.into_values().chain(fresh).collect();
    results.sort_by_key(|r| r.key.id);
    let succeeded: Vec<TaskResult> = results
        .iter()
        .filter(|r| r.error.is_none())
        .cloned()
        .collect();
    let rows = reduce(config, &grid, &succeeded)?;
    write_rows(&dir.join(OBSERVABLES_FILE), &rows)?;
    let summary = summarize(config, &hash, &grid, &results);
    write_atomic(
        &dir.join(SUMMARY_FILE),
        &serde_json::to_string_pretty(&summary)?,
    )?;
    manifest.complete = manifest.missing().is_empty();
    manifest.artifacts.observables = Some(PathBuf::from(OBSERVABLES_FILE));
    manifest.artifacts.summary = Some(PathBuf::from(SUMMARY_FILE));
    manifest.save(&dir)?;
    Ok(SweepOutcome {
        manifest,
        rows,
        results,
        output_dir: dir,
    })
}

/// Continues the run stored in `dir`, reusing its saved config.
pub fn resume(dir: &Path) -> Result<SweepOutcome> {
    let path = dir.join(CONFIG_FILE);
    let mut config = ExperimentConfig::load(&path)?;
    config.output_dir = dir.to_path_buf();
    run_sweep(&config)
}

fn check_or_store_config(dir: &Path, config: &ExperimentConfig, hash: &str) -> Result<()> {
    let path = dir.join(CONFIG_FILE);
    if path.exists() {
        let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
        let stored = ExperimentConfig::parse(&text, Format::Json)?;
        let found = stored.hash();
        if found != hash {
            return Err(HarnessError::HashMismatch {
                dir: dir.to_path_buf(),
                found,
                expected: hash.to_string(),
            });
        }
        return Ok(());
    }
    write_atomic(&path, &serde_json::to_string_pretty(config)?)
}

fn summarize(
    config: &ExperimentConfig,
    hash: &str,
    grid: &[GridPoint],
    results: &[TaskResult],
) -> RunSummary {
    let points = grid
        .iter()
        .enumerate()
        .map(|(index, point)| {
            let mine: Vec<&TaskResult> = results.iter().filter(|r| r.key.point == index).collect();
            let diags: Vec<_> = mine
                .iter()
                .filter_map(|r| r.record.as_ref())
                .map(|r| &r.diagnostics)
                .collect();
            let k = diags.len().max(1) as f64;
            PointSummary {
                l: point.l,
                t: point.t,
                temperature: point.temperature,
                tasks: mine.len(),
                failed: mine.iter().filter(|r| r.error.is_some()).count(),
                mean_acceptance: diags.iter().map(|d| d.acceptance_rate).sum::<f64>() / k,
                mean_tau: diags.iter().map(|d| d.tau).sum::<f64>() / k,
                min_closures: diags.iter().map(|d| d.closures).min().unwrap_or(0),
                spare_chains_used: diags.iter().filter(|d| d.chains > config.replicas).count(),
            }
        })
        .collect();
    RunSummary {
        config_hash: hash.to_string(),
        mode: config.mode,
        n: config.n,
        seed: config.seed,
        points,
    }
}
