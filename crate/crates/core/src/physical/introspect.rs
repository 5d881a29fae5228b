use rusqlite::Connection;

use super::model::{ColumnDef, ForeignKey, PhysicalModel, SqlType, TableDef};
use crate::engine::{ConnectionDescriptor, EngineError};

/// Lossy mapping applied during introspection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeWarning {
    pub table: String,
    pub column: String,
    pub declared: String,
}

impl std::fmt::Display for TypeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "column {}.{} has unsupported type {:?}; mapped to VARCHAR",
            self.table, self.column, self.declared
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Introspection {
    pub model: PhysicalModel,
    pub warnings: Vec<TypeWarning>,
}

/// Reads the stored schema of an embedded-engine database file.
pub fn introspect(conn: &ConnectionDescriptor) -> Result<Introspection, EngineError> {
    let db = conn.open_read_only()?;
    let mut introspection = introspect_connection(&db)?;
    introspection.model.source_id = conn.to_string();
    Ok(introspection)
}

pub(crate) fn introspect_connection(db: &Connection) -> Result<Introspection, EngineError> {
    let err = |e: rusqlite::Error| EngineError::Execution(e.to_string());
    let mut stmt = db
        .prepare("SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY rowid")
        .map_err(err)?;
    let names: Vec<String> = stmt.query_map([], |r| r.get(0)).map_err(err)?.collect::<Result<_, _>>().map_err(err)?;

    let mut warnings = Vec::new();
    let mut tables = Vec::with_capacity(names.len());
    for name in names {
        let mut table = TableDef::new(name.clone());
        let mut pk: Vec<(i64, String)> = Vec::new();
        let mut info = db.prepare("SELECT name, type, \"notnull\", pk FROM pragma_table_info(?1) ORDER BY cid").map_err(err)?;
        let cols = info
            .query_map([&name], |r| Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?, r.get::<_, i64>(2)?, r.get::<_, i64>(3)?)))
            .map_err(err)?;
        for col in cols {
            let (col_name, declared, notnull, pk_index) = col.map_err(err)?;
            let sql_type = SqlType::from_declared(&declared).unwrap_or_else(|| {
                warnings.push(TypeWarning { table: name.clone(), column: col_name.clone(), declared: declared.clone() });
                SqlType::Varchar
            });
            if pk_index > 0 {
                pk.push((pk_index, col_name.clone()));
            }
            table.columns.push(ColumnDef { name: col_name, sql_type, nullable: notnull == 0 });
        }
        pk.sort();
        table.primary_key = pk.into_iter().map(|(_, c)| c).collect();

        // The engine numbers foreign keys in reverse declaration order.
        let mut fk_stmt = db
            .prepare("SELECT id, seq, \"table\", \"from\", \"to\" FROM pragma_foreign_key_list(?1) ORDER BY id DESC, seq")
            .map_err(err)?;
        let rows = fk_stmt
            .query_map([&name], |r| {
                Ok((r.get::<_, i64>(0)?, r.get::<_, String>(2)?, r.get::<_, String>(3)?, r.get::<_, Option<String>>(4)?))
            })
            .map_err(err)?;
        let mut current: Option<(i64, ForeignKey)> = None;
        for row in rows {
            let (id, target, from, to) = row.map_err(err)?;
            if current.as_ref().map(|(cid, _)| *cid) != Some(id) {
                if let Some((_, fk)) = current.take() {
                    table.foreign_keys.push(fk);
                }
                current = Some((id, ForeignKey { columns: Vec::new(), target_table: target, target_columns: Vec::new() }));
            }
            let (_, fk) = current.as_mut().expect("set above");
            fk.columns.push(from);
            fk.target_columns.push(to.unwrap_or_default());
        }
        if let Some((_, fk)) = current {
            table.foreign_keys.push(fk);
        }
        tables.push(table);
    }

    // Implicit references to the target's primary key.
    let snapshot = tables.clone();
    for table in &mut tables {
        for fk in &mut table.foreign_keys {
            if fk.target_columns.iter().any(String::is_empty) {
                if let Some(target) = snapshot.iter().find(|t| t.name.eq_ignore_ascii_case(&fk.target_table)) {
                    fk.target_columns = target.primary_key.clone();
                }
            }
        }
    }

    Ok(Introspection { model: PhysicalModel::new("", tables), warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::create_database;
    use crate::fixtures;
    use crate::physical::parse_ddl;

    #[test]
    fn fixture_database_matches_parsed_ddl() {
        let dir = tempfile::tempdir().unwrap();
        let db = fixtures::adventure_database(dir.path()).unwrap();
        let got = introspect(&db).unwrap();
        assert!(got.warnings.is_empty());
        let expected = parse_ddl(fixtures::ADVENTURE_MINI_DDL).unwrap();
        assert_eq!(got.model.tables, expected.tables);
        assert!(got.model.source_id.starts_with("file:"));
    }

    #[test]
    fn every_fixture_survives_the_engine() {
        let dir = tempfile::tempdir().unwrap();
        for (i, ddl) in [fixtures::INVENTORY_DDL, fixtures::FILES_DDL].into_iter().enumerate() {
            let path = dir.path().join(format!("f{i}.db"));
            let db = create_database(&path, ddl, None).unwrap();
            assert_eq!(introspect(&db).unwrap().model.tables, parse_ddl(ddl).unwrap().tables);
        }
    }

    #[test]
    fn empty_database_gives_empty_model() {
        let dir = tempfile::tempdir().unwrap();
        let db = create_database(&dir.path().join("empty.db"), "", None).unwrap();
        assert!(introspect(&db).unwrap().model.tables.is_empty());
    }

    #[test]
    fn unsupported_type_is_mapped_with_one_warning() {
        let dir = tempfile::tempdir().unwrap();
        let db = create_database(
            &dir.path().join("blob.db"),
            "CREATE TABLE Doc (DocID int, Body BLOB, Title varchar, PRIMARY KEY (DocID));",
            None,
        )
        .unwrap();
        let got = introspect(&db).unwrap();
        assert_eq!(got.warnings.len(), 1);
        assert_eq!(got.warnings[0].column, "Body");
        let doc = got.model.table("Doc").unwrap();
        assert_eq!(doc.columns.len(), 3);
        assert_eq!(doc.column("Body").unwrap().sql_type, SqlType::Varchar);
    }

    #[test]
    fn missing_file_is_a_connection_error() {
        let desc = ConnectionDescriptor::from_path("/definitely/not/here.db");
        assert!(matches!(introspect(&desc), Err(EngineError::Connection(_))));
    }
}
