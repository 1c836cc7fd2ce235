//! Run manifest: config hash, per-task seeds and completion status.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::GridPoint;
use crate::error::{HarnessError, Result};
use crate::runner::{TaskKey, TaskResult};

pub const CONFIG_FILE: &str = "config.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESULTS_FILE: &str = "results.jsonl";
pub const OBSERVABLES_FILE: &str = "observables.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const DEBUG_DIR: &str = "debug";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Pending,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEntry {
    pub id: usize,
    pub point: usize,
    pub realization: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub t: usize,
    #[serde(rename = "T")]
    pub temperature: f64,
    /// ChaCha stream ids under the master seed.
    pub disorder_stream: u64,
    pub chain_stream: u64,
    pub status: TaskStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub config: PathBuf,
    pub results: PathBuf,
    pub observables: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub debug_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub master_seed: u64,
    pub complete: bool,
    pub tasks: Vec<TaskEntry>,
    pub artifacts: Artifacts,
}

impl RunManifest {
    pub fn new(
        config_hash: String,
        master_seed: u64,
        grid: &[GridPoint],
        keys: &[TaskKey],
        debug: bool,
    ) -> Self {
        let tasks = keys
            .iter()
            .map(|k| TaskEntry {
                id: k.id,
                point: k.point,
                realization: k.realization,
                l: grid[k.point].l,
                t: grid[k.point].t,
                temperature: grid[k.point].temperature,
                disorder_stream: k.disorder_stream(),
                chain_stream: k.chain_stream(),
                status: TaskStatus::Pending,
                error: None,
            })
            .collect();
        Self {
            config_hash,
            master_seed,
            complete: false,
            tasks,
            artifacts: Artifacts {
                config: PathBuf::from(CONFIG_FILE),
                results: PathBuf::from(RESULTS_FILE),
                observables: None,
                summary: None,
                debug_dir: debug.then(|| PathBuf::from(DEBUG_DIR)),
            },
        }
    }

    pub fn record(&mut self, result: &TaskResult) {
        let entry = &mut self.tasks[result.key.id];
        entry.status = if result.error.is_some() {
            TaskStatus::Failed
        } else {
            TaskStatus::Done
        };
        entry.error = result.error.clone();
    }

    pub fn missing(&self) -> Vec<usize> {
        self.tasks
            .iter()
            .filter(|t| t.status != TaskStatus::Done)
            .map(|t| t.id)
            .collect()
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Written to a temporary file and renamed so a crash never leaves a
    /// half-written manifest.
    pub fn save(&self, dir: &Path) -> Result<()> {
        write_atomic(
            &dir.join(MANIFEST_FILE),
            &serde_json::to_string_pretty(self)?,
        )
    }
}

pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text).map_err(|e| HarnessError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

/// Reads `results.jsonl`. A malformed final line is the trace of an
/// interrupted write and is dropped; a malformed line elsewhere is an error.
pub fn read_results(path: &Path) -> Result<Vec<TaskResult>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(HarnessError::io(path, e)),
    };
    let lines: Vec<&str> = text.lines().collect();
    let mut results = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TaskResult>(line) {
            Ok(r) => results.push(r),
            Err(_) if i + 1 == lines.len() => break,
            Err(_) => {
                return Err(HarnessError::CorruptResults {
                    path: path.to_path_buf(),
                    line: i + 1,
                })
            }
        }
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::task_keys;

    fn result(id: usize) -> TaskResult {
        TaskResult {
            key: task_keys(1, 10)[id],
            record: None,
            error: Some("boom".into()),
        }
    }

    #[test]
    fn truncated_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(RESULTS_FILE);
        let mut text = String::new();
        for id in 0..3 {
            text.push_str(&serde_json::to_string(&result(id)).unwrap());
            text.push('\n');
        }
        let full = text.clone();
        text.push_str(&serde_json::to_string(&result(3)).unwrap()[..10]);
        std::fs::write(&path, &text).unwrap();
        assert_eq!(read_results(&path).unwrap().len(), 3);

        let corrupt = format!("{{oops\n{full}");
        std::fs::write(&path, corrupt).unwrap();
        assert!(matches!(
            read_results(&path),
            Err(HarnessError::CorruptResults { line: 1, .. })
        ));
        assert!(read_results(&dir.path().join("absent")).unwrap().is_empty());
    }
}
