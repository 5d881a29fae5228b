//! Access to the embedded SQL engine and the read-only statement guard.

use std::fmt;
use std::path::{Path, PathBuf};

use rusqlite::{Connection, OpenFlags};
use serde::{Deserialize, Serialize};

use crate::sql::{self, ast::Statement};

/// `file:<path>` pointing at an embedded-engine database file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ConnectionDescriptor {
    path: PathBuf,
}

impl ConnectionDescriptor {
    pub fn parse(uri: &str) -> Result<Self, EngineError> {
        match uri.strip_prefix("file:") {
            Some(p) if !p.is_empty() => Ok(Self { path: PathBuf::from(p) }),
            _ => Err(EngineError::Connection(format!("unsupported connection URI {uri:?}; expected file:<path>"))),
        }
    }

    pub fn from_path(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn open_read_only(&self) -> Result<Connection, EngineError> {
        if !self.path.exists() {
            return Err(EngineError::Connection(format!("database {} does not exist", self.path.display())));
        }
        Connection::open_with_flags(&self.path, OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX)
            .map_err(|e| EngineError::Connection(format!("{}: {e}", self.path.display())))
    }

    pub fn open_read_write(&self) -> Result<Connection, EngineError> {
        Connection::open(&self.path).map_err(|e| EngineError::Connection(format!("{}: {e}", self.path.display())))
    }
}

impl fmt::Display for ConnectionDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "file:{}", self.path.display())
    }
}

impl TryFrom<String> for ConnectionDescriptor {
    type Error = EngineError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::parse(&value)
    }
}

impl From<ConnectionDescriptor> for String {
    fn from(value: ConnectionDescriptor) -> Self {
        value.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("connection error: {0}")]
    Connection(String),
    #[error("{0}")]
    Execution(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GuardError {
    #[error("statement is not read-only")]
    NotReadOnly,
    #[error("only a single statement is allowed")]
    MultipleStatements,
    #[error("{0}")]
    Syntax(#[from] sql::ParseError),
}

/// Admits exactly one SELECT statement. Returns the query text with any
/// trailing semicolons removed, ready to be wrapped.
pub fn read_only_guard(query: &str) -> Result<String, GuardError> {
    let stmts = sql::parse_statements(query)?;
    if stmts.iter().any(|s| matches!(s, Statement::Other { .. })) {
        return Err(GuardError::NotReadOnly);
    }
    if stmts.len() != 1 {
        return Err(GuardError::MultipleStatements);
    }
    Ok(query.trim().trim_end_matches(|c: char| c == ';' || c.is_whitespace()).to_string())
}

/// Creates (or overwrites) a database file from DDL plus optional data statements.
pub fn create_database(path: &Path, ddl: &str, data: Option<&str>) -> Result<ConnectionDescriptor, EngineError> {
    if path.exists() {
        std::fs::remove_file(path).map_err(|e| EngineError::Connection(e.to_string()))?;
    }
    let desc = ConnectionDescriptor::from_path(path);
    let conn = desc.open_read_write()?;
    conn.execute_batch(ddl).map_err(|e| EngineError::Execution(e.to_string()))?;
    if let Some(data) = data {
        conn.execute_batch(data).map_err(|e| EngineError::Execution(e.to_string()))?;
    }
    Ok(desc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guard_admits_single_select_only() {
        assert_eq!(read_only_guard("SELECT 1;").unwrap(), "SELECT 1");
        assert_eq!(read_only_guard("DROP TABLE Product"), Err(GuardError::NotReadOnly));
        assert_eq!(read_only_guard("SELECT 1; DELETE FROM Product"), Err(GuardError::NotReadOnly));
        assert_eq!(read_only_guard("SELECT 1; SELECT 2"), Err(GuardError::MultipleStatements));
        assert!(matches!(read_only_guard("SELEC 1"), Err(GuardError::Syntax(_))));
    }

    #[test]
    fn descriptor_round_trips() {
        let d = ConnectionDescriptor::parse("file:/tmp/x.db").unwrap();
        assert_eq!(d.to_string(), "file:/tmp/x.db");
        assert!(ConnectionDescriptor::parse("postgres://x").is_err());
        assert!(ConnectionDescriptor::parse("file:").is_err());
    }

    #[test]
    fn missing_file_is_a_connection_error() {
        let d = ConnectionDescriptor::from_path("/nonexistent/dir/x.db");
        assert!(matches!(d.open_read_only(), Err(EngineError::Connection(_))));
    }
}
