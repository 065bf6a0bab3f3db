use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{io_error, PipelineError};

/// Directory layout of one run: raw exchanges, derived scores, and report
/// tables, plus ledgers for failures and completed units.
#[derive(Debug, Clone)]
pub struct RunPaths {
    root: PathBuf,
}

impl RunPaths {
    pub fn new(output_dir: &Path, run_id: &str) -> Self {
        RunPaths {
            root: output_dir.join(run_id),
        }
    }

    pub fn create(&self) -> Result<(), PipelineError> {
        for dir in [self.raw(), self.scores(), self.reports()] {
            fs::create_dir_all(&dir).map_err(|e| io_error(dir.clone(), e))?;
        }
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn raw(&self) -> PathBuf {
        self.root.join("raw")
    }

    pub fn scores(&self) -> PathBuf {
        self.root.join("scores")
    }

    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn manifest_file(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn failures_file(&self) -> PathBuf {
        self.root.join("failures.jsonl")
    }

    pub fn units_file(&self) -> PathBuf {
        self.root.join("units.jsonl")
    }

    /// Path of `path` relative to the run root, for manifest entries.
    pub fn relative(&self, path: &Path) -> String {
        path.strip_prefix(&self.root)
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned()
    }
}

/// One command execution recorded in the run manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommandRun {
    pub command: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub artifacts: Vec<String>,
}

/// Durable description of a run directory. Commands append to it, and it
/// pins the config digest so a run directory cannot silently mix configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditManifest {
    pub run_id: String,
    pub config_digest: String,
    pub tool_version: String,
    pub commands: Vec<CommandRun>,
}

impl AuditManifest {
    pub fn load(paths: &RunPaths) -> Result<Option<Self>, PipelineError> {
        let path = paths.manifest_file();
        if !path.exists() {
            return Ok(None);
        }
        read_json(&path).map(Some)
    }

    /// Loads the manifest for this run, creating a fresh one when absent.
    /// A digest mismatch is a config error: the caller is trying to reuse a
    /// run directory with a different configuration.
    pub fn open(
        paths: &RunPaths,
        run_id: &str,
        config_digest: &str,
    ) -> Result<Self, PipelineError> {
        match Self::load(paths)? {
            Some(manifest) => {
                if manifest.config_digest != config_digest {
                    return Err(PipelineError::Config(format!(
                        "run {run_id:?} was created with a different config \
                         (digest {} vs {})",
                        manifest.config_digest, config_digest
                    )));
                }
                Ok(manifest)
            }
            None => Ok(AuditManifest {
                run_id: run_id.to_string(),
                config_digest: config_digest.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                commands: Vec::new(),
            }),
        }
    }

    pub fn record_command(
        &mut self,
        command: &str,
        started_at: DateTime<Utc>,
        artifacts: Vec<String>,
    ) {
        self.commands.push(CommandRun {
            command: command.to_string(),
            started_at,
            finished_at: Utc::now(),
            artifacts,
        });
    }

    pub fn save(&self, paths: &RunPaths) -> Result<(), PipelineError> {
        write_json(&paths.manifest_file(), self)
    }
}

/// One isolated failure, recorded instead of aborting the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureRecord {
    pub unit: String,
    pub stage: String,
    pub detail: String,
    pub occurred_at: DateTime<Utc>,
}

impl FailureRecord {
    pub fn now(unit: &str, stage: &str, detail: impl std::fmt::Display) -> Self {
        FailureRecord {
            unit: unit.to_string(),
            stage: stage.to_string(),
            detail: detail.to_string(),
            occurred_at: Utc::now(),
        }
    }
}

/// Ledger entry marking a unit of work as complete, keyed by an input
/// digest so a rerun can skip it only when the inputs are unchanged.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitRecord {
    pub unit_id: String,
    pub digest: String,
    /// Run-root-relative path of the unit's score artifact.
    pub artifact: String,
    pub completed_at: DateTime<Utc>,
}

/// Completed units by id; later entries win so re-executions supersede.
pub fn load_units(paths: &RunPaths) -> Result<BTreeMap<String, UnitRecord>, PipelineError> {
    let path = paths.units_file();
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let records: Vec<UnitRecord> = read_jsonl(&path)?;
    Ok(records
        .into_iter()
        .map(|record| (record.unit_id.clone(), record))
        .collect())
}

pub(crate) fn append_jsonl<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let line = serde_json::to_string(value)?;
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| io_error(path, e))?;
    writeln!(file, "{line}").map_err(|e| io_error(path, e))
}

pub(crate) fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let raw = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let mut records = Vec::new();
    for (index, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line).map_err(|e| PipelineError::Malformed {
            path: path.to_path_buf(),
            detail: format!("line {}: {e}", index + 1),
        })?;
        records.push(record);
    }
    Ok(records)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, values: &[T]) -> Result<(), PipelineError> {
    let mut out = String::new();
    for value in values {
        out.push_str(&serde_json::to_string(value)?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_error(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    fs::write(path, body).map_err(|e| io_error(path, e))
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let raw = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&raw).map_err(|e| PipelineError::Malformed {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}
