use std::fmt;

use rusqlite::types::ValueRef;
use serde::{Deserialize, Serialize};

use crate::engine::{read_only_guard, ConnectionDescriptor, EngineError, GuardError};
use crate::physical::SqlType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Integer,
    Real,
    Text,
    Blob,
    /// No declared type and no non-null value to infer from.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultColumn {
    pub name: String,
    #[serde(rename = "type")]
    pub column_type: ColumnType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
    Blob(Vec<u8>),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Integer(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    fn column_type(&self) -> Option<ColumnType> {
        match self {
            Value::Null => None,
            Value::Integer(_) => Some(ColumnType::Integer),
            Value::Real(_) => Some(ColumnType::Real),
            Value::Text(_) => Some(ColumnType::Text),
            Value::Blob(_) => Some(ColumnType::Blob),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Integer(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Text(s) => f.write_str(s),
            Value::Blob(b) => write!(f, "<{} bytes>", b.len()),
        }
    }
}

impl From<ValueRef<'_>> for Value {
    fn from(v: ValueRef<'_>) -> Self {
        match v {
            ValueRef::Null => Value::Null,
            ValueRef::Integer(i) => Value::Integer(i),
            ValueRef::Real(r) => Value::Real(r),
            ValueRef::Text(t) => Value::Text(String::from_utf8_lossy(t).into_owned()),
            ValueRef::Blob(b) => Value::Blob(b.to_vec()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Page {
    pub offset: usize,
    pub limit: usize,
}

impl Page {
    pub fn new(offset: usize, limit: usize) -> Self {
        Self { offset, limit }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageInfo {
    pub offset: usize,
    pub limit: usize,
    pub total_rows: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub columns: Vec<ResultColumn>,
    pub rows: Vec<Vec<Value>>,
    pub page: PageInfo,
}

impl ResultSet {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name).or_else(|| self.columns.iter().position(|c| c.name.eq_ignore_ascii_case(name)))
    }

    /// The first `rows` rows and `cols` columns.
    pub fn sample(&self, rows: usize, cols: usize) -> ResultSet {
        let cols = cols.min(self.columns.len());
        ResultSet {
            columns: self.columns[..cols].to_vec(),
            rows: self.rows.iter().take(rows).map(|r| r[..cols].to_vec()).collect(),
            page: PageInfo { offset: self.page.offset, limit: rows.min(self.page.limit), total_rows: self.page.total_rows },
        }
    }

    /// Pipe-separated text table with a header row.
    pub fn to_text(&self) -> String {
        let mut out = self.columns.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(" | ");
        for r in &self.rows {
            out.push('\n');
            out.push_str(&r.iter().map(Value::to_string).collect::<Vec<_>>().join(" | "));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecuteError {
    #[error(transparent)]
    Guard(#[from] GuardError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

fn declared(decl: Option<&str>) -> Option<ColumnType> {
    Some(match SqlType::from_declared(decl?)? {
        SqlType::Int | SqlType::BigInt | SqlType::Boolean => ColumnType::Integer,
        SqlType::Float | SqlType::Decimal => ColumnType::Real,
        SqlType::Varchar | SqlType::Date | SqlType::DateTime => ColumnType::Text,
    })
}

/// Runs a guarded SELECT and returns rows `[offset, offset + limit)`.
/// `total_rows` counts the whole result.
pub fn execute_query(conn: &ConnectionDescriptor, query: &str, page: Page) -> Result<ResultSet, ExecuteError> {
    let q = read_only_guard(query)?;
    let c = conn.open_read_only()?;
    let engine = |e: rusqlite::Error| EngineError::Execution(e.to_string());
    let limit = i64::try_from(page.limit).unwrap_or(i64::MAX);
    let offset = i64::try_from(page.offset).unwrap_or(i64::MAX);
    let mut stmt = c.prepare(&format!("SELECT * FROM ({q}) LIMIT ?1 OFFSET ?2")).map_err(engine)?;
    let names: Vec<String> = stmt.column_names().into_iter().map(str::to_string).collect();
    let decls: Vec<Option<ColumnType>> = stmt.columns().iter().map(|c| declared(c.decl_type())).collect();
    let mut rows = Vec::new();
    let mut cursor = stmt.query([limit, offset]).map_err(engine)?;
    while let Some(row) = cursor.next().map_err(engine)? {
        let mut values = Vec::with_capacity(names.len());
        for i in 0..names.len() {
            values.push(Value::from(row.get_ref(i).map_err(engine)?));
        }
        rows.push(values);
    }
    let total: i64 = c.query_row(&format!("SELECT COUNT(*) FROM ({q})"), [], |r| r.get(0)).map_err(engine)?;
    let columns = names
        .into_iter()
        .enumerate()
        .map(|(i, name)| {
            let inferred = rows.iter().find_map(|r: &Vec<Value>| r[i].column_type());
            ResultColumn { name, column_type: decls[i].or(inferred).unwrap_or(ColumnType::Unknown) }
        })
        .collect();
    Ok(ResultSet {
        columns,
        rows,
        page: PageInfo { offset: page.offset, limit: page.limit, total_rows: usize::try_from(total).ok() },
    })
}
