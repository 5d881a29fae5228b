use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Closed set of column types understood by every layer above the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SqlType {
    Int,
    BigInt,
    Float,
    Decimal,
    Varchar,
    Date,
    DateTime,
    Boolean,
}

impl SqlType {
    pub const ALL: [SqlType; 8] = [
        SqlType::Int,
        SqlType::BigInt,
        SqlType::Float,
        SqlType::Decimal,
        SqlType::Varchar,
        SqlType::Date,
        SqlType::DateTime,
        SqlType::Boolean,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SqlType::Int => "INT",
            SqlType::BigInt => "BIGINT",
            SqlType::Float => "FLOAT",
            SqlType::Decimal => "DECIMAL",
            SqlType::Varchar => "VARCHAR",
            SqlType::Date => "DATE",
            SqlType::DateTime => "DATETIME",
            SqlType::Boolean => "BOOLEAN",
        }
    }

    /// Maps a declared type name (any case, optional `(n)` / `(p,s)` suffix)
    /// onto the closed set. Common synonyms are accepted.
    pub fn from_declared(decl: &str) -> Option<SqlType> {
        let base = decl.split('(').next().unwrap_or("").trim().to_ascii_uppercase();
        let ty = match base.as_str() {
            "INT" | "INTEGER" | "SMALLINT" | "TINYINT" => SqlType::Int,
            "BIGINT" => SqlType::BigInt,
            "FLOAT" | "REAL" | "DOUBLE" => SqlType::Float,
            "DECIMAL" | "NUMERIC" | "MONEY" => SqlType::Decimal,
            "VARCHAR" | "NVARCHAR" | "CHAR" | "NCHAR" | "TEXT" => SqlType::Varchar,
            "DATE" => SqlType::Date,
            "DATETIME" | "TIMESTAMP" => SqlType::DateTime,
            "BOOLEAN" | "BOOL" | "BIT" => SqlType::Boolean,
            _ => return None,
        };
        Some(ty)
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, SqlType::Int | SqlType::BigInt | SqlType::Float | SqlType::Decimal | SqlType::Boolean)
    }

    /// Whether values of the two types may be compared in a join predicate.
    pub fn comparable_with(self, other: SqlType) -> bool {
        let textual = |t: SqlType| matches!(t, SqlType::Varchar | SqlType::Date | SqlType::DateTime);
        (self.is_numeric() && other.is_numeric()) || (textual(self) && textual(other))
    }
}

impl fmt::Display for SqlType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SqlType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SqlType::from_declared(s).ok_or_else(|| format!("unsupported column type {s}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    pub sql_type: SqlType,
    pub nullable: bool,
}

impl ColumnDef {
    pub fn new(name: impl Into<String>, sql_type: SqlType) -> Self {
        Self { name: name.into(), sql_type, nullable: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForeignKey {
    pub columns: Vec<String>,
    pub target_table: String,
    pub target_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableDef {
    pub name: String,
    pub columns: Vec<ColumnDef>,
    pub primary_key: Vec<String>,
    pub foreign_keys: Vec<ForeignKey>,
}

impl TableDef {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), columns: Vec::new(), primary_key: Vec::new(), foreign_keys: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<&ColumnDef> {
        self.columns.iter().find(|c| c.name.eq_ignore_ascii_case(name))
    }

    /// `CREATE TABLE` text in the layout used for prompts and DDL round trips.
    pub fn to_create_statement(&self) -> String {
        let mut lines: Vec<String> = self
            .columns
            .iter()
            .map(|c| {
                let ty = c.sql_type.as_str().to_ascii_lowercase();
                if c.nullable {
                    format!("  {} {}", c.name, ty)
                } else {
                    format!("  {} {} NOT NULL", c.name, ty)
                }
            })
            .collect();
        if !self.primary_key.is_empty() {
            lines.push(format!("  PRIMARY KEY ({})", self.primary_key.join(", ")));
        }
        for fk in &self.foreign_keys {
            lines.push(format!(
                "  FOREIGN KEY ({}) REFERENCES {}({})",
                fk.columns.join(", "),
                fk.target_table,
                fk.target_columns.join(", ")
            ));
        }
        format!("CREATE TABLE {} (\n{}\n);", self.name, lines.join(",\n"))
    }
}

/// The schema as stored in the source system.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PhysicalModel {
    pub source_id: String,
    pub tables: Vec<TableDef>,
}

impl PhysicalModel {
    pub fn new(source_id: impl Into<String>, tables: Vec<TableDef>) -> Self {
        Self { source_id: source_id.into(), tables }
    }

    pub fn table(&self, name: &str) -> Option<&TableDef> {
        self.tables.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn foreign_key_count(&self) -> usize {
        self.tables.iter().map(|t| t.foreign_keys.len()).sum()
    }

    /// Serializes back to DDL accepted by [`super::parse_ddl`].
    pub fn to_ddl(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tables.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            out.push_str(&t.to_create_statement());
        }
        if !out.is_empty() {
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declared_type_mapping() {
        assert_eq!(SqlType::from_declared("varchar(50)"), Some(SqlType::Varchar));
        assert_eq!(SqlType::from_declared("DECIMAL(10, 2)"), Some(SqlType::Decimal));
        assert_eq!(SqlType::from_declared("int"), Some(SqlType::Int));
        assert_eq!(SqlType::from_declared("BLOB"), None);
        assert_eq!(SqlType::from_declared(""), None);
    }

    #[test]
    fn type_compatibility() {
        assert!(SqlType::Int.comparable_with(SqlType::Decimal));
        assert!(SqlType::Varchar.comparable_with(SqlType::DateTime));
        assert!(!SqlType::Int.comparable_with(SqlType::Varchar));
        assert!(!SqlType::Varchar.is_numeric());
    }
}
