//! Append-only run history: one JSON record per line.
//!
//! Result payloads and statistics are kept as raw JSON text so that what a
//! client receives after a restart is byte-for-byte what it received first.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::runner::{RunOutcome, RunOutput};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("execution id {0} is already in the store")]
    DuplicateExecId(String),
    #[error("store {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunRecord {
    pub exec_id: String,
    pub source_file_name: String,
    pub tool: String,
    pub num_sims: u32,
    pub efficiency_pct: u32,
    pub availability_pct: u32,
    pub conc_cases: u32,
    /// `{min,max,avg,avgExact}` for simulation runs, null otherwise.
    pub time_stats: Option<Box<RawValue>>,
    pub cost_stats: Option<Box<RawValue>>,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
    pub payload: Box<RawValue>,
}

fn raw(json: String) -> Box<RawValue> {
    RawValue::from_string(json).expect("serializer output is valid JSON")
}

impl RunRecord {
    pub fn from_outcome(outcome: &RunOutcome, file: &str) -> Self {
        let (time_stats, cost_stats) = match &outcome.output {
            RunOutput::Simulate(r) => (
                Some(raw(serde_json::to_string(&r.time).expect("summary serializes"))),
                Some(raw(serde_json::to_string(&r.cost).expect("summary serializes"))),
            ),
            _ => (None, None),
        };
        let p = &outcome.profile;
        Self {
            exec_id: outcome.output.exec_id().to_string(),
            source_file_name: file.to_string(),
            tool: p.tool.as_str().to_string(),
            num_sims: p.num_sims,
            efficiency_pct: p.efficiency_pct,
            availability_pct: p.availability_pct,
            conc_cases: p.conc_cases,
            time_stats,
            cost_stats,
            created_at: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0),
            payload: raw(outcome.output.to_json()),
        }
    }

    pub fn overview_row(&self) -> OverviewRow<'_> {
        OverviewRow {
            exec_id: &self.exec_id,
            file: &self.source_file_name,
            executions: self.num_sims,
            efficiency: self.efficiency_pct,
            availability: self.availability_pct,
            cases: self.conc_cases,
            time: self.time_stats.as_deref(),
            cost: self.cost_stats.as_deref(),
            tool: &self.tool,
            created_at: self.created_at,
        }
    }
}

/// One row of the run overview table: eight columns plus the tool and timestamp.
#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OverviewRow<'a> {
    pub exec_id: &'a str,
    pub file: &'a str,
    pub executions: u32,
    pub efficiency: u32,
    pub availability: u32,
    pub cases: u32,
    pub time: Option<&'a RawValue>,
    pub cost: Option<&'a RawValue>,
    pub tool: &'a str,
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug)]
pub struct Store {
    path: PathBuf,
    file: File,
    records: Vec<RunRecord>,
    index: HashMap<String, usize>,
    skipped: Vec<SkippedLine>,
}

impl Store {
    /// Opens or creates the journal. Unreadable lines are skipped with a warning.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let io_err = |source| StoreError::Io { path: path.clone(), source };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_err)?;
        }
        let file = OpenOptions::new().create(true).append(true).read(true).open(&path).map_err(io_err)?;
        let mut store = Self {
            path: path.clone(),
            file,
            records: Vec::new(),
            index: HashMap::new(),
            skipped: Vec::new(),
        };
        let reader = BufReader::new(File::open(&path).map_err(io_err)?);
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(io_err)?;
            if line.trim().is_empty() {
                continue;
            }
            let reason = match serde_json::from_str::<RunRecord>(&line) {
                Ok(r) if store.index.contains_key(&r.exec_id) => format!("duplicate execution id {}", r.exec_id),
                Ok(r) => {
                    store.index.insert(r.exec_id.clone(), store.records.len());
                    store.records.push(r);
                    continue;
                }
                Err(e) => e.to_string(),
            };
            tracing::warn!(path = %path.display(), line = i + 1, %reason, "skipping store record");
            store.skipped.push(SkippedLine { line: i + 1, reason });
        }
        Ok(store)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, exec_id: &str) -> bool {
        self.index.contains_key(exec_id)
    }

    /// Lines ignored while opening.
    pub fn skipped(&self) -> &[SkippedLine] {
        &self.skipped
    }

    /// Writes and syncs one line before the record becomes visible.
    pub fn append(&mut self, record: RunRecord) -> Result<(), StoreError> {
        if self.contains(&record.exec_id) {
            return Err(StoreError::DuplicateExecId(record.exec_id));
        }
        let mut line = serde_json::to_string(&record).expect("record serializes");
        line.push('\n');
        let io_err = |source| StoreError::Io { path: self.path.clone(), source };
        self.file.write_all(line.as_bytes()).map_err(io_err)?;
        self.file.sync_data().map_err(io_err)?;
        self.index.insert(record.exec_id.clone(), self.records.len());
        self.records.push(record);
        Ok(())
    }

    /// Insertion order.
    pub fn list(&self) -> &[RunRecord] {
        &self.records
    }

    pub fn get(&self, exec_id: &str) -> Option<&RunRecord> {
        self.index.get(exec_id).map(|&i| &self.records[i])
    }

    /// Gives the outcome the first salted id not already present and appends it.
    pub fn record(&mut self, outcome: &mut RunOutcome, file: &str) -> Result<&RunRecord, StoreError> {
        let mut salt = self.len() as u64;
        while self.contains(outcome.assign_id(salt)) {
            salt += 1;
        }
        self.append(RunRecord::from_outcome(outcome, file))?;
        Ok(self.records.last().expect("just appended"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str) -> RunRecord {
        RunRecord {
            exec_id: id.into(),
            source_file_name: "m.rpl".into(),
            tool: "simulate".into(),
            num_sims: 1,
            efficiency_pct: 100,
            availability_pct: 100,
            conc_cases: 1,
            time_stats: None,
            cost_stats: None,
            created_at: 0,
            payload: raw(format!(r#"{{"execId":"{id}","x":1.10}}"#)),
        }
    }

    #[test]
    fn payload_round_trips_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.jsonl");
        let mut s = Store::open(&path).unwrap();
        s.append(record("aaaaaaaa")).unwrap();
        assert_eq!(s.get("aaaaaaaa").unwrap().payload.get(), r#"{"execId":"aaaaaaaa","x":1.10}"#);
        let s = Store::open(&path).unwrap();
        assert_eq!(s.get("aaaaaaaa").unwrap().payload.get(), r#"{"execId":"aaaaaaaa","x":1.10}"#);
    }

    #[test]
    fn order_is_preserved() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Store::open(dir.path().join("runs.jsonl")).unwrap();
        s.append(record("bbbbbbbb")).unwrap();
        s.append(record("aaaaaaaa")).unwrap();
        let ids: Vec<_> = s.list().iter().map(|r| r.exec_id.as_str()).collect();
        assert_eq!(ids, ["bbbbbbbb", "aaaaaaaa"]);
    }

    #[test]
    fn duplicate_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Store::open(dir.path().join("runs.jsonl")).unwrap();
        s.append(record("aaaaaaaa")).unwrap();
        assert!(matches!(s.append(record("aaaaaaaa")), Err(StoreError::DuplicateExecId(_))));
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn corrupt_line_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.jsonl");
        let good = |id| serde_json::to_string(&record(id)).unwrap();
        std::fs::write(&path, format!("{}\n{{\"execId\": \"trunc\n{}\n", good("aaaaaaaa"), good("bbbbbbbb"))).unwrap();
        let s = Store::open(&path).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.skipped().len(), 1);
        assert_eq!(s.skipped()[0].line, 2);
    }

    #[test]
    fn creates_missing_directories() {
        let dir = tempfile::tempdir().unwrap();
        let s = Store::open(dir.path().join("a/b/runs.jsonl")).unwrap();
        assert!(s.is_empty());
    }
}
