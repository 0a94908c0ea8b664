//! In-memory run registry backed by an append-only directory of completed
//! runs. A run file is written under a temporary name and renamed into
//! place once complete.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use haas_core::{RunConfig, RunResult};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHandle {
    pub id: String,
    pub status: RunStatus,
    pub config: RunConfig,
    /// Unix milliseconds.
    pub submitted_at: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct StoredRun {
    handle: RunHandle,
    result: RunResult,
}

struct Entry {
    handle: RunHandle,
    result: Option<Arc<RunResult>>,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

pub struct RunStore {
    dir: Option<PathBuf>,
    entries: RwLock<BTreeMap<String, Entry>>,
}

impl RunStore {
    /// Opens the store, loading completed runs found under `dir`.
    pub fn open(dir: Option<PathBuf>) -> std::io::Result<Self> {
        let mut entries = BTreeMap::new();
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)?;
            for file in std::fs::read_dir(d)? {
                let path = file?.path();
                if path.extension().is_some_and(|e| e == "json") {
                    let doc = std::fs::read_to_string(&path)?;
                    if let Ok(s) = serde_json::from_str::<StoredRun>(&doc) {
                        entries.insert(
                            s.handle.id.clone(),
                            Entry {
                                handle: s.handle,
                                result: Some(Arc::new(s.result)),
                            },
                        );
                    }
                }
            }
        }
        Ok(RunStore {
            dir,
            entries: RwLock::new(entries),
        })
    }

    pub fn insert(&self, config: RunConfig) -> RunHandle {
        let handle = RunHandle {
            id: uuid::Uuid::new_v4().simple().to_string(),
            status: RunStatus::Queued,
            config,
            submitted_at: now_ms(),
            started_at: None,
            finished_at: None,
            error: None,
        };
        self.entries.write().unwrap().insert(
            handle.id.clone(),
            Entry {
                handle: handle.clone(),
                result: None,
            },
        );
        handle
    }

    pub fn mark_running(&self, id: &str) {
        if let Some(e) = self.entries.write().unwrap().get_mut(id) {
            if e.handle.status == RunStatus::Queued {
                e.handle.status = RunStatus::Running;
                e.handle.started_at = Some(now_ms());
            }
        }
    }

    fn write_file(dir: &Path, stored: &StoredRun) -> std::io::Result<()> {
        let id = &stored.handle.id;
        let tmp = dir.join(format!(".{id}.partial"));
        let doc = serde_json::to_vec(stored).map_err(std::io::Error::other)?;
        std::fs::write(&tmp, doc)?;
        std::fs::rename(&tmp, dir.join(format!("{id}.json")))
    }

    /// Publishes the outcome of a run. The result is persisted before it
    /// becomes visible.
    pub fn finish(&self, id: &str, outcome: Result<RunResult, String>) {
        let mut handle = match self.handle(id) {
            Some(h) => h,
            None => return,
        };
        handle.finished_at = Some(now_ms());
        let (handle, result) = match outcome {
            Ok(result) => {
                handle.status = RunStatus::Done;
                let stored = StoredRun { handle, result };
                let mut handle = stored.handle.clone();
                if let Some(dir) = &self.dir {
                    if let Err(e) = Self::write_file(dir, &stored) {
                        handle.status = RunStatus::Failed;
                        handle.error = Some(format!("could not persist run: {e}"));
                    }
                }
                let result = (handle.status == RunStatus::Done).then(|| Arc::new(stored.result));
                (handle, result)
            }
            Err(e) => {
                handle.status = RunStatus::Failed;
                handle.error = Some(e);
                (handle, None)
            }
        };
        if let Some(e) = self.entries.write().unwrap().get_mut(id) {
            e.handle = handle;
            e.result = result;
        }
    }

    pub fn handle(&self, id: &str) -> Option<RunHandle> {
        self.entries.read().unwrap().get(id).map(|e| e.handle.clone())
    }

    pub fn result(&self, id: &str) -> Option<Arc<RunResult>> {
        self.entries.read().unwrap().get(id).and_then(|e| e.result.clone())
    }

    /// Handles ordered by submission time, then id.
    pub fn list(&self) -> Vec<RunHandle> {
        let mut v: Vec<RunHandle> = self.entries.read().unwrap().values().map(|e| e.handle.clone()).collect();
        v.sort_by(|a, b| a.submitted_at.cmp(&b.submitted_at).then(a.id.cmp(&b.id)));
        v
    }

    /// Serialised snapshot of every handle and result, for change detection.
    pub fn snapshot(&self) -> String {
        let entries = self.entries.read().unwrap();
        let view: Vec<(&RunHandle, Option<&RunResult>)> =
            entries.values().map(|e| (&e.handle, e.result.as_deref())).collect();
        serde_json::to_string(&view).expect("run store serialises")
    }
}
