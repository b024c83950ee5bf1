use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::jsonl;

pub const RECORD_FILE: &str = "record.jsonl";
pub const EVENTS_FILE: &str = "events.jsonl";

/// One completed stage in the experiment record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEntry {
    pub run_id: String,
    pub config_fingerprint: String,
    pub stage: String,
    pub outputs: Value,
    pub started_at: u64,
    pub finished_at: u64,
}

/// All stages recorded for a run directory, in completion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentRecord {
    pub entries: Vec<StageEntry>,
}

impl ExperimentRecord {
    pub fn load(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join(RECORD_FILE);
        if !path.exists() {
            return Ok(Self::default());
        }
        Ok(ExperimentRecord {
            entries: jsonl::read_lines(&path)?,
        })
    }

    pub fn stage(&self, name: &str) -> Option<&StageEntry> {
        self.entries.iter().rev().find(|e| e.stage == name)
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or_default()
}

/// Append-only run directory. Each stage writes into a scratch directory
/// that is renamed into place once complete, so a failed stage leaves no
/// partial artifact behind.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
    run_id: String,
    fingerprint: String,
}

impl RunDir {
    /// Opens (creating if needed) a run directory for a configuration.
    /// A directory already used by a different configuration is refused.
    pub fn open(root: &Path, run_id: String, fingerprint: String) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        let record = ExperimentRecord::load(root)?;
        if let Some(e) = record.entries.first() {
            if e.config_fingerprint != fingerprint {
                return Err(Error::InvalidConfig(format!(
                    "run directory {} belongs to configuration {}, not {fingerprint}",
                    root.display(),
                    e.config_fingerprint
                )));
            }
        }
        Ok(RunDir {
            root: root.to_owned(),
            run_id,
            fingerprint,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn path(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.root.join(rel)
    }

    /// Fails with [`Error::MissingArtifact`] unless `rel` exists.
    pub fn require(&self, rel: impl AsRef<Path>, what: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        if p.exists() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact {
                what: what.to_owned(),
                path: p,
            })
        }
    }

    /// Runs `body` against a scratch directory and moves the result to
    /// `rel`. `rel` must not exist yet.
    pub fn produce<T>(&self, rel: impl AsRef<Path>, body: impl FnOnce(&Path) -> Result<T>) -> Result<T> {
        let target = self.path(rel.as_ref());
        if target.exists() {
            return Err(Error::ArtifactExists(target));
        }
        let parent = target.parent().expect("artifact has a parent");
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        let name = target.file_name().expect("artifact has a name").to_string_lossy();
        let scratch = parent.join(format!(".{name}.partial"));
        if scratch.exists() {
            std::fs::remove_dir_all(&scratch).map_err(|e| Error::io(&scratch, e))?;
        }
        std::fs::create_dir_all(&scratch).map_err(|e| Error::io(&scratch, e))?;
        match body(&scratch) {
            Ok(v) => {
                std::fs::rename(&scratch, &target).map_err(|e| Error::io(&target, e))?;
                Ok(v)
            }
            Err(e) => {
                let _ = std::fs::remove_dir_all(&scratch);
                Err(e)
            }
        }
    }

    pub fn record(&self, stage: &str, outputs: Value, started_at: u64) -> Result<()> {
        let entry = StageEntry {
            run_id: self.run_id.clone(),
            config_fingerprint: self.fingerprint.clone(),
            stage: stage.to_owned(),
            outputs,
            started_at,
            finished_at: unix_now(),
        };
        jsonl::append_line(&self.path(RECORD_FILE), &entry)
    }

    /// Structured log line: `{"stage": .., "event": .., ..fields}`.
    pub fn log(&self, stage: &str, event: &str, fields: Value) -> Result<()> {
        let mut line = serde_json::Map::new();
        line.insert("stage".into(), Value::from(stage));
        line.insert("event".into(), Value::from(event));
        if let Value::Object(f) = fields {
            line.extend(f);
        }
        jsonl::append_line(&self.path(EVENTS_FILE), &Value::Object(line))
    }
}
