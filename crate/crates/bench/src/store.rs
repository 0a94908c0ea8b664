//! On-disk battery layout. Each battery lives in `<root>/<id>/`:
//!
//! - `spec.json`, the battery spec
//! - `summary.json` and `summary.csv`, the summary table
//! - `index.json`, one entry per run with everything but its records
//! - `records.ndjson`, one allocation record per line, tagged with its run
//!
//! A battery directory is written under a temporary name and renamed into
//! place, so readers never observe a partial battery.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use haas_core::engine::AllocationRecord;
use haas_core::metrics::{RunAggregate, ScreenFlags, SprintKpis};
use haas_core::{Domain, Level, RunConfig, RunResult};
use serde::{Deserialize, Serialize};

use crate::battery::BatteryOutput;
use crate::error::{BenchError, Result};
use crate::spec::BatterySpec;
use crate::summary::SummaryTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub run: usize,
    /// Summary row the run contributes to.
    pub row: usize,
    pub config: RunConfig,
    pub domain: Domain,
    pub level: Level,
    /// Half-open line range in `records.ndjson`.
    pub records: (usize, usize),
    pub sprints: Vec<SprintKpis>,
    pub aggregate: RunAggregate,
    pub screens: ScreenFlags,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryIndex {
    pub id: String,
    pub runs: Vec<IndexEntry>,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    run: usize,
    record: AllocationRecord,
}

fn json_err(path: &Path, source: serde_json::Error) -> BenchError {
    BenchError::Json {
        path: path.display().to_string(),
        source,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| BenchError::io(path, e))
}

pub fn battery_dir(root: &Path, id: &str) -> PathBuf {
    root.join(id)
}

pub fn persist(out: &BatteryOutput, root: &Path) -> Result<PathBuf> {
    fs::create_dir_all(root).map_err(|e| BenchError::io(root, e))?;
    let tmp = root.join(format!(".{}.partial", out.id));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| BenchError::io(&tmp, e))?;
    }
    fs::create_dir(&tmp).map_err(|e| BenchError::io(&tmp, e))?;

    let spec = serde_json::to_string_pretty(&out.spec).expect("battery specs serialise");
    write_file(&tmp.join("spec.json"), spec.as_bytes())?;
    write_file(&tmp.join("summary.json"), out.table.to_json().as_bytes())?;
    write_file(&tmp.join("summary.csv"), out.table.to_csv().as_bytes())?;

    let mut row_of = vec![0; out.runs.len()];
    for (i, r) in out.table.rows.iter().enumerate() {
        for &j in &r.runs {
            row_of[j] = i;
        }
    }
    let path = tmp.join("records.ndjson");
    let file = fs::File::create(&path).map_err(|e| BenchError::io(&path, e))?;
    let mut w = BufWriter::new(file);
    let mut entries = Vec::with_capacity(out.runs.len());
    let mut line = 0;
    for (i, r) in out.runs.iter().enumerate() {
        for rec in &r.records {
            let doc = serde_json::to_string(&RecordLine {
                run: i,
                record: rec.clone(),
            })
            .map_err(|e| json_err(&path, e))?;
            writeln!(w, "{doc}").map_err(|e| BenchError::io(&path, e))?;
        }
        entries.push(IndexEntry {
            run: i,
            row: row_of[i],
            config: r.config.clone(),
            domain: r.domain,
            level: r.level,
            records: (line, line + r.records.len()),
            sprints: r.sprints.clone(),
            aggregate: r.aggregate.clone(),
            screens: r.screens,
            warnings: r.warnings.clone(),
        });
        line += r.records.len();
    }
    w.flush().map_err(|e| BenchError::io(&path, e))?;

    let index = BatteryIndex {
        id: out.id.clone(),
        runs: entries,
    };
    let doc = serde_json::to_string(&index).expect("index serialises");
    write_file(&tmp.join("index.json"), doc.as_bytes())?;

    let dir = battery_dir(root, &out.id);
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(|e| BenchError::io(&dir, e))?;
    }
    fs::rename(&tmp, &dir).map_err(|e| BenchError::io(&dir, e))?;
    Ok(dir)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let doc = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    serde_json::from_str(&doc).map_err(|e| json_err(path, e))
}

fn existing_dir(root: &Path, id: &str) -> Result<PathBuf> {
    let valid = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    let dir = battery_dir(root, id);
    if !valid || !dir.is_dir() {
        return Err(BenchError::UnknownBattery(id.to_string()));
    }
    Ok(dir)
}

pub fn load_table(root: &Path, id: &str) -> Result<SummaryTable> {
    read_json(&existing_dir(root, id)?.join("summary.json"))
}

pub fn load_spec(root: &Path, id: &str) -> Result<BatterySpec> {
    read_json(&existing_dir(root, id)?.join("spec.json"))
}

pub fn load_index(root: &Path, id: &str) -> Result<BatteryIndex> {
    read_json(&existing_dir(root, id)?.join("index.json"))
}

/// Reassembles the persisted runs.
pub fn load_runs(root: &Path, id: &str) -> Result<Vec<RunResult>> {
    let dir = existing_dir(root, id)?;
    let index = load_index(root, id)?;
    let mut runs: Vec<RunResult> = index
        .runs
        .into_iter()
        .map(|e| RunResult {
            config: e.config,
            domain: e.domain,
            level: e.level,
            records: Vec::with_capacity(e.records.1 - e.records.0),
            sprints: e.sprints,
            aggregate: e.aggregate,
            screens: e.screens,
            warnings: e.warnings,
        })
        .collect();
    let path = dir.join("records.ndjson");
    let file = fs::File::open(&path).map_err(|e| BenchError::io(&path, e))?;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| BenchError::io(&path, e))?;
        let rec: RecordLine = serde_json::from_str(&line).map_err(|e| json_err(&path, e))?;
        let slot = runs.get_mut(rec.run).ok_or_else(|| BenchError::Io {
            path: path.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, format!("run {} not indexed", rec.run)),
        })?;
        slot.records.push(rec.record);
    }
    Ok(runs)
}

/// Ids of the batteries stored under `root`, sorted.
pub fn list(root: &Path) -> Result<Vec<String>> {
    if !root.is_dir() {
        return Ok(Vec::new());
    }
    let mut ids = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| BenchError::io(root, e))? {
        let entry = entry.map_err(|e| BenchError::io(root, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if !name.starts_with('.') && entry.path().join("summary.json").is_file() {
            ids.push(name);
        }
    }
    ids.sort();
    Ok(ids)
}
