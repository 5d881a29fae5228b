//! Reader for the `CREATE TABLE` subset: column definitions with optional
//! `NOT NULL`, table-level `PRIMARY KEY (...)` and
//! `FOREIGN KEY (...) REFERENCES t(...)`. Anything else is a syntax error.

use super::model::{ColumnDef, ForeignKey, PhysicalModel, SqlType, TableDef};
use crate::sql::lexer::{tokenize, Position, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DdlError {
    #[error("syntax error on line {line}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("reference error in table {table}: {message}")]
    Reference { table: String, message: String },
}

impl DdlError {
    fn at(pos: Position, message: impl Into<String>) -> Self {
        DdlError::Syntax { line: pos.line, column: pos.column, message: message.into() }
    }
}

pub fn parse_ddl(ddl: &str) -> Result<PhysicalModel, DdlError> {
    let tokens = tokenize(ddl).map_err(|e| DdlError::at(e.pos, e.message))?;
    let end = tokens.last().map(|t| t.pos).unwrap_or(Position { line: 1, column: 1 });
    let mut p = DdlParser { tokens, idx: 0, end };
    let mut tables: Vec<(TableDef, Vec<Position>)> = Vec::new();

    while !p.at_end() {
        if p.eat(&TokenKind::Semicolon) {
            continue;
        }
        let start = p.pos();
        let (table, fk_positions) = p.create_table()?;
        if tables.iter().any(|(t, _)| t.name.eq_ignore_ascii_case(&table.name)) {
            return Err(DdlError::at(start, format!("duplicate table {}", table.name)));
        }
        tables.push((table, fk_positions));
        if !p.at_end() {
            p.expect(&TokenKind::Semicolon, ";")?;
        }
    }

    let model = PhysicalModel::new("", tables.iter().map(|(t, _)| t.clone()).collect());
    for (table, _) in &tables {
        for fk in &table.foreign_keys {
            let Some(target) = model.table(&fk.target_table) else {
                return Err(DdlError::Reference {
                    table: table.name.clone(),
                    message: format!("Table {} does not exist", fk.target_table),
                });
            };
            for col in &fk.target_columns {
                if target.column(col).is_none() {
                    return Err(DdlError::Reference {
                        table: table.name.clone(),
                        message: format!("Column {col} does not exist in table {}", target.name),
                    });
                }
            }
        }
    }
    Ok(model)
}

struct DdlParser {
    tokens: Vec<Token>,
    idx: usize,
    end: Position,
}

impl DdlParser {
    fn at_end(&self) -> bool {
        self.idx >= self.tokens.len()
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.idx)
    }

    fn pos(&self) -> Position {
        self.peek().map(|t| t.pos).unwrap_or(self.end)
    }

    fn unexpected(&self, expected: &str) -> DdlError {
        let found = self.peek().map(|t| t.kind.to_string()).unwrap_or_else(|| "end of input".into());
        DdlError::at(self.pos(), format!("expected {expected}, found {found}"))
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: &TokenKind, what: &str) -> Result<(), DdlError> {
        if self.eat(kind) {
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.peek().is_some_and(|t| t.is_keyword(kw)) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), DdlError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(kw))
        }
    }

    fn name(&mut self, what: &str) -> Result<(String, Position), DdlError> {
        let Some(t) = self.peek().cloned() else {
            return Err(self.unexpected(what));
        };
        match t.kind {
            TokenKind::Word(w) | TokenKind::QuotedIdent(w) | TokenKind::DoubleQuoted(w) => {
                self.idx += 1;
                Ok((w, t.pos))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn name_list(&mut self) -> Result<Vec<String>, DdlError> {
        self.expect(&TokenKind::LParen, "(")?;
        let mut names = vec![self.name("column name")?.0];
        while self.eat(&TokenKind::Comma) {
            names.push(self.name("column name")?.0);
        }
        self.expect(&TokenKind::RParen, ")")?;
        Ok(names)
    }

    fn create_table(&mut self) -> Result<(TableDef, Vec<Position>), DdlError> {
        self.expect_kw("CREATE")?;
        self.expect_kw("TABLE")?;
        let (name, _) = self.name("table name")?;
        let mut table = TableDef::new(name);
        let mut fk_positions = Vec::new();
        self.expect(&TokenKind::LParen, "(")?;
        loop {
            let pos = self.pos();
            if self.eat_kw("PRIMARY") {
                self.expect_kw("KEY")?;
                if !table.primary_key.is_empty() {
                    return Err(DdlError::at(pos, format!("table {} declares two primary keys", table.name)));
                }
                let cols = self.name_list()?;
                for c in &cols {
                    if table.column(c).is_none() {
                        return Err(DdlError::at(pos, format!("primary key column {c} is not defined")));
                    }
                }
                table.primary_key = cols;
            } else if self.eat_kw("FOREIGN") {
                self.expect_kw("KEY")?;
                let columns = self.name_list()?;
                self.expect_kw("REFERENCES")?;
                let (target_table, _) = self.name("referenced table")?;
                let target_columns = self.name_list()?;
                if columns.len() != target_columns.len() {
                    return Err(DdlError::at(pos, "foreign key column counts differ"));
                }
                for c in &columns {
                    if table.column(c).is_none() {
                        return Err(DdlError::at(pos, format!("foreign key column {c} is not defined")));
                    }
                }
                table.foreign_keys.push(ForeignKey { columns, target_table, target_columns });
                fk_positions.push(pos);
            } else {
                let col = self.column()?;
                if table.column(&col.name).is_some() {
                    return Err(DdlError::at(pos, format!("duplicate column {}", col.name)));
                }
                table.columns.push(col);
            }
            if self.eat(&TokenKind::RParen) {
                break;
            }
            self.expect(&TokenKind::Comma, ", or )")?;
        }
        Ok((table, fk_positions))
    }

    fn column(&mut self) -> Result<ColumnDef, DdlError> {
        let (name, _) = self.name("column definition")?;
        let (type_name, type_pos) = self.name("column type")?;
        let sql_type = SqlType::from_declared(&type_name)
            .ok_or_else(|| DdlError::at(type_pos, format!("unsupported column type {type_name}")))?;
        if self.eat(&TokenKind::LParen) {
            // length / precision arguments are accepted and dropped
            loop {
                match self.peek().map(|t| &t.kind) {
                    Some(TokenKind::Number(_)) => self.idx += 1,
                    _ => return Err(self.unexpected("type length")),
                }
                if self.eat(&TokenKind::RParen) {
                    break;
                }
                self.expect(&TokenKind::Comma, ", or )")?;
            }
        }
        let mut nullable = true;
        if self.eat_kw("NOT") {
            self.expect_kw("NULL")?;
            nullable = false;
        } else {
            self.eat_kw("NULL");
        }
        Ok(ColumnDef { name, sql_type, nullable })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn inventory_schema_parses() {
        let m = parse_ddl(fixtures::INVENTORY_DDL).unwrap();
        let names: Vec<_> = m.tables.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, ["Product", "ProductInventory"]);
        let inv = &m.tables[1];
        assert_eq!(inv.primary_key, ["ProductID", "LocationID"]);
        assert_eq!(
            inv.foreign_keys,
            vec![ForeignKey {
                columns: vec!["ProductID".into()],
                target_table: "Product".into(),
                target_columns: vec!["ProductID".into()],
            }]
        );
        assert_eq!(m.foreign_key_count(), 1);
    }

    #[test]
    fn empty_text_gives_empty_model() {
        assert!(parse_ddl("").unwrap().tables.is_empty());
        assert!(parse_ddl("  -- nothing here\n").unwrap().tables.is_empty());
    }

    #[test]
    fn fixture_foreign_keys_match_textual_count() {
        let text = fixtures::ADVENTURE_MINI_DDL;
        let grep_count = text.lines().filter(|l| l.contains("FOREIGN KEY")).count();
        let m = parse_ddl(text).unwrap();
        assert_eq!(m.tables.len(), 8);
        assert_eq!(grep_count, 7);
        assert_eq!(m.foreign_key_count(), grep_count);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let bad = "CREATE TABLE A (\n  x int,\n  y widget\n);";
        match parse_ddl(bad).unwrap_err() {
            DdlError::Syntax { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("widget"));
            }
            e => panic!("unexpected {e:?}"),
        }
        let bad = "CREATE TABLE A (x int);\nCREATE VIEW v AS SELECT 1;";
        assert!(matches!(parse_ddl(bad), Err(DdlError::Syntax { line: 2, .. })));
        let bad = "CREATE TABLE A (x int, x int);";
        assert!(matches!(parse_ddl(bad), Err(DdlError::Syntax { line: 1, .. })));
        let bad = "CREATE TABLE A (x int, PRIMARY KEY (y));";
        assert!(matches!(parse_ddl(bad), Err(DdlError::Syntax { .. })));
    }

    #[test]
    fn unknown_reference_is_reported() {
        let bad = "CREATE TABLE A (x int, FOREIGN KEY (x) REFERENCES BadTableName(id));";
        match parse_ddl(bad).unwrap_err() {
            DdlError::Reference { table, message } => {
                assert_eq!(table, "A");
                assert_eq!(message, "Table BadTableName does not exist");
            }
            e => panic!("unexpected {e:?}"),
        }
        let bad = "CREATE TABLE B (id int);\nCREATE TABLE A (x int, FOREIGN KEY (x) REFERENCES B(nope));";
        assert!(matches!(parse_ddl(bad), Err(DdlError::Reference { .. })));
    }

    #[test]
    fn forward_references_resolve() {
        let m = parse_ddl("CREATE TABLE A (x int, FOREIGN KEY (x) REFERENCES B(id));\nCREATE TABLE B (id int, PRIMARY KEY (id));")
            .unwrap();
        assert_eq!(m.foreign_key_count(), 1);
    }

    #[test]
    fn round_trip_is_a_fixed_point() {
        for ddl in [fixtures::ADVENTURE_MINI_DDL, fixtures::INVENTORY_DDL, fixtures::FILES_DDL] {
            let once = parse_ddl(ddl).unwrap();
            let text = once.to_ddl();
            let twice = parse_ddl(&text).unwrap();
            assert_eq!(once, twice);
            assert_eq!(text, twice.to_ddl());
        }
    }
}
