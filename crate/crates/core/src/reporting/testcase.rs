use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::chart::ChartSpec;
use super::execute::{execute_query, ExecuteError, Page, ResultSet, Value};
use crate::engine::{ConnectionDescriptor, EngineError};
use crate::pipeline::{Attempt, SourceRef};

/// Rows kept in an archived result snapshot.
pub const SNAPSHOT_ROWS: usize = 50;
/// Absolute tolerance for numeric cells on replay.
pub const NUMERIC_TOLERANCE: f64 = 1e-9;

/// A self-contained requirement record. Field order follows the
/// question / query / explanation / results / model / bindings layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCaseRecord {
    pub id: String,
    pub question: String,
    pub query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result_snapshot: Option<ResultSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_ontology_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bindings_snippet: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart_spec: Option<ChartSpec>,
    #[serde(default)]
    pub checker_trail: Vec<Attempt>,
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_ref: Option<SourceRef>,
}

/// Inputs to [`TestCaseStore::archive`]; only question and query are required.
#[derive(Debug, Clone, Default)]
pub struct TestCaseParts<'a> {
    pub question: &'a str,
    pub query: &'a str,
    pub explanation: Option<&'a str>,
    pub result: Option<&'a ResultSet>,
    pub sub_ontology_text: Option<&'a str>,
    pub bindings_snippet: Option<&'a str>,
    pub chart_spec: Option<&'a ChartSpec>,
    pub checker_trail: &'a [Attempt],
    pub source_ref: Option<&'a SourceRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StorageError {
    #[error("test case {0} not found")]
    NotFound(String),
    #[error("test case store: {0}")]
    Io(String),
    #[error("test case {id} is unreadable: {message}")]
    Corrupt { id: String, message: String },
    #[error("test case needs a question and a query")]
    Incomplete,
}

/// Append-only directory of records, one JSON document per file named by id.
#[derive(Debug, Clone)]
pub struct TestCaseStore {
    dir: PathBuf,
}

impl TestCaseStore {
    /// Records live in `<catalog_root>/testcases/`.
    pub fn new(catalog_root: &Path) -> Self {
        Self { dir: catalog_root.join("testcases") }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn archive(&self, parts: TestCaseParts<'_>) -> Result<TestCaseRecord, StorageError> {
        if parts.question.trim().is_empty() || parts.query.trim().is_empty() {
            return Err(StorageError::Incomplete);
        }
        let io = |e: std::io::Error| StorageError::Io(e.to_string());
        let snapshot = parts.result.map(|r| {
            let mut s = r.clone();
            s.rows.truncate(SNAPSHOT_ROWS);
            s.page.limit = s.page.limit.min(SNAPSHOT_ROWS);
            s
        });
        let record = TestCaseRecord {
            id: uuid::Uuid::new_v4().to_string(),
            question: parts.question.to_string(),
            query: parts.query.to_string(),
            explanation: parts.explanation.map(str::to_string),
            result_snapshot: snapshot,
            sub_ontology_text: parts.sub_ontology_text.map(str::to_string),
            bindings_snippet: parts.bindings_snippet.map(str::to_string),
            chart_spec: parts.chart_spec.cloned(),
            checker_trail: parts.checker_trail.to_vec(),
            created_at: Utc::now(),
            source_ref: parts.source_ref.cloned(),
        };
        fs::create_dir_all(&self.dir).map_err(io)?;
        let bytes = serde_json::to_vec_pretty(&record).expect("records serialize");
        let tmp = self.dir.join(format!(".{}.tmp", record.id));
        let mut f = File::create(&tmp).map_err(io)?;
        f.write_all(&bytes).map_err(io)?;
        f.sync_all().map_err(io)?;
        // hard_link fails if the target exists, so a record is never replaced
        fs::hard_link(&tmp, self.dir.join(&record.id)).map_err(io)?;
        fs::remove_file(&tmp).map_err(io)?;
        Ok(record)
    }

    pub fn load(&self, id: &str) -> Result<TestCaseRecord, StorageError> {
        if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
            return Err(StorageError::NotFound(id.to_string()));
        }
        let bytes = match fs::read(self.dir.join(id)) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(StorageError::NotFound(id.to_string())),
            Err(e) => return Err(StorageError::Io(e.to_string())),
        };
        serde_json::from_slice(&bytes).map_err(|e| StorageError::Corrupt { id: id.to_string(), message: e.to_string() })
    }

    /// All records, oldest first, optionally only those of one source.
    pub fn list(&self, source_id: Option<&str>) -> Result<Vec<TestCaseRecord>, StorageError> {
        let entries = match fs::read_dir(&self.dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(StorageError::Io(e.to_string())),
        };
        let mut out = Vec::new();
        for entry in entries {
            let name = entry.map_err(|e| StorageError::Io(e.to_string()))?.file_name().to_string_lossy().into_owned();
            if name.starts_with('.') {
                continue;
            }
            let r = self.load(&name)?;
            if source_id.is_none_or(|s| r.source_ref.as_ref().is_some_and(|sr| sr.source_id == s)) {
                out.push(r);
            }
        }
        out.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Difference {
    Execution { message: String },
    Columns { expected: Vec<String>, actual: Vec<String> },
    Cell { row: String, column: String, expected: Value, actual: Value },
    MissingRow { row: String },
    ExtraRow { row: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ReplayOutcome {
    Pass,
    Fail { diff: Vec<Difference> },
}

impl ReplayOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, ReplayOutcome::Pass)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReplayError {
    #[error("test case {0} has no result snapshot")]
    NoSnapshot(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

fn same(a: &Value, b: &Value) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => (x - y).abs() <= NUMERIC_TOLERANCE,
        _ => a == b,
    }
}

/// Rows are matched by their first cell when it is unique on both sides,
/// otherwise by position.
fn row_keys(rows: &[Vec<Value>]) -> Option<Vec<String>> {
    let keys: Vec<String> = rows.iter().map(|r| r.first().map(Value::to_string).unwrap_or_default()).collect();
    let unique: std::collections::BTreeSet<&String> = keys.iter().collect();
    (unique.len() == keys.len()).then_some(keys)
}

fn diff_results(expected: &ResultSet, actual: &ResultSet) -> Vec<Difference> {
    let names = |r: &ResultSet| r.columns.iter().map(|c| c.name.clone()).collect::<Vec<_>>();
    let (en, an) = (names(expected), names(actual));
    if en != an {
        return vec![Difference::Columns { expected: en, actual: an }];
    }
    let mut out = Vec::new();
    let cells = |key: &str, e: &[Value], a: &[Value], out: &mut Vec<Difference>| {
        for ((col, x), y) in en.iter().zip(e).zip(a) {
            if !same(x, y) {
                out.push(Difference::Cell { row: key.to_string(), column: col.clone(), expected: x.clone(), actual: y.clone() });
            }
        }
    };
    match (row_keys(&expected.rows), row_keys(&actual.rows)) {
        (Some(ek), Some(ak)) => {
            for (k, e) in ek.iter().zip(&expected.rows) {
                match ak.iter().position(|x| x == k) {
                    Some(i) => cells(k, e, &actual.rows[i], &mut out),
                    None => out.push(Difference::MissingRow { row: k.clone() }),
                }
            }
            for k in ak.iter().filter(|k| !ek.contains(k)) {
                out.push(Difference::ExtraRow { row: k.clone() });
            }
        }
        _ => {
            for (i, (e, a)) in expected.rows.iter().zip(&actual.rows).enumerate() {
                cells(&format!("#{i}"), e, a, &mut out);
            }
            for i in actual.rows.len()..expected.rows.len() {
                out.push(Difference::MissingRow { row: format!("#{i}") });
            }
            for i in expected.rows.len()..actual.rows.len() {
                out.push(Difference::ExtraRow { row: format!("#{i}") });
            }
        }
    }
    out
}

/// Re-executes the archived query and compares the first rows with the
/// snapshot. Query failures are a `Fail`; an unreachable database is an error.
pub fn replay_testcase(record: &TestCaseRecord, conn: &ConnectionDescriptor) -> Result<ReplayOutcome, ReplayError> {
    let snapshot = record.result_snapshot.as_ref().ok_or_else(|| ReplayError::NoSnapshot(record.id.clone()))?;
    let actual = match execute_query(conn, &record.query, Page::new(0, SNAPSHOT_ROWS)) {
        Ok(r) => r,
        Err(ExecuteError::Engine(EngineError::Connection(m))) => return Err(EngineError::Connection(m).into()),
        Err(e) => return Ok(ReplayOutcome::Fail { diff: vec![Difference::Execution { message: e.to_string() }] }),
    };
    let diff = diff_results(snapshot, &actual);
    Ok(if diff.is_empty() { ReplayOutcome::Pass } else { ReplayOutcome::Fail { diff } })
}
