use std::collections::HashSet;

use super::model::PhysicalModel;
use crate::diagnostics::{Diagnostic, Diagnostics};

/// Checks every physical-model invariant; one diagnostic per violation.
pub fn validate_physical(model: &PhysicalModel) -> Diagnostics {
    let mut out = Vec::new();
    let mut seen_tables = HashSet::new();
    for table in &model.tables {
        if !seen_tables.insert(table.name.to_ascii_lowercase()) {
            out.push(Diagnostic::new(&table.name, format!("duplicate table {}", table.name)));
        }
        let mut seen_cols = HashSet::new();
        for col in &table.columns {
            if !seen_cols.insert(col.name.to_ascii_lowercase()) {
                out.push(Diagnostic::new(
                    format!("{}.{}", table.name, col.name),
                    format!("duplicate column {} in table {}", col.name, table.name),
                ));
            }
        }
        for pk in &table.primary_key {
            if table.column(pk).is_none() {
                out.push(Diagnostic::new(
                    format!("{}.{pk}", table.name),
                    format!("primary key column {pk} does not exist in table {}", table.name),
                ));
            }
        }
        for fk in &table.foreign_keys {
            let loc = format!("{}({})", table.name, fk.columns.join(", "));
            if fk.columns.len() != fk.target_columns.len() {
                out.push(Diagnostic::new(&loc, "foreign key column counts differ"));
            }
            for c in &fk.columns {
                if table.column(c).is_none() {
                    out.push(Diagnostic::new(&loc, format!("Column {c} does not exist in table {}", table.name)));
                }
            }
            match model.table(&fk.target_table) {
                None => out.push(Diagnostic::new(&loc, format!("Table {} does not exist", fk.target_table))),
                Some(target) => {
                    for c in &fk.target_columns {
                        if target.column(c).is_none() {
                            out.push(Diagnostic::new(
                                &loc,
                                format!("Column {c} does not exist in table {}", target.name),
                            ));
                        }
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::physical::{parse_ddl, ColumnDef, ForeignKey, SqlType, TableDef};

    #[test]
    fn fixture_is_clean() {
        assert!(validate_physical(&parse_ddl(fixtures::ADVENTURE_MINI_DDL).unwrap()).is_empty());
    }

    #[test]
    fn reference_to_missing_table() {
        let mut t = TableDef::new("Employee");
        t.columns.push(ColumnDef::new("DeptID", SqlType::Int));
        t.foreign_keys.push(ForeignKey {
            columns: vec!["DeptID".into()],
            target_table: "BadTableName".into(),
            target_columns: vec!["DeptID".into()],
        });
        let d = validate_physical(&PhysicalModel::new("x", vec![t]));
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("BadTableName"));
        assert_eq!(d[0].message, "Table BadTableName does not exist");
    }

    #[test]
    fn one_diagnostic_per_duplicate_column() {
        let mut t = TableDef::new("T");
        for name in ["a", "b", "A", "b", "c"] {
            t.columns.push(ColumnDef::new(name, SqlType::Int));
        }
        let d = validate_physical(&PhysicalModel::new("x", vec![t]));
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].location, "T.A");
        assert_eq!(d[1].location, "T.b");
    }
}
