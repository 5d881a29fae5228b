use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::{read_only_guard, ConnectionDescriptor, EngineError};
use crate::ontology::GroundedSchema;
use crate::physical::{ColumnDef, TableDef};
use crate::sql::ast::{BinaryOp, Expr, Ident, Select, SelectItem, Statement};
use crate::sql::parse_statements;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Valid,
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckerType {
    Syntax,
    Semantic,
    Execution,
}

impl CheckerType {
    /// Corrective guideline appended to repair notes for this checker.
    pub fn guideline(self) -> &'static str {
        match self {
            CheckerType::Syntax => "Generate syntactically valid SQL only.",
            CheckerType::Semantic => "Only generate queries with the provided tables.",
            CheckerType::Execution => "Generate a query that executes without errors on the provided schema.",
        }
    }
}

impl fmt::Display for CheckerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckerType::Syntax => "Syntax",
            CheckerType::Semantic => "Semantic",
            CheckerType::Execution => "Execution",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckerReport {
    pub status: Status,
    pub checker_type: CheckerType,
    pub messages: Vec<String>,
}

impl CheckerReport {
    pub fn valid(checker_type: CheckerType) -> Self {
        Self { status: Status::Valid, checker_type, messages: Vec::new() }
    }

    pub fn invalid(checker_type: CheckerType, messages: Vec<String>) -> Self {
        assert!(!messages.is_empty(), "an invalid report needs a message");
        Self { status: Status::Invalid, checker_type, messages }
    }

    fn from_messages(checker_type: CheckerType, messages: Vec<String>) -> Self {
        if messages.is_empty() {
            Self::valid(checker_type)
        } else {
            Self::invalid(checker_type, messages)
        }
    }

    pub fn is_valid(&self) -> bool {
        self.status == Status::Valid
    }
}

impl fmt::Display for CheckerReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match self.status {
            Status::Valid => "Valid",
            Status::Invalid => "Invalid",
        };
        write!(f, "Status: '{status}'\nChecker Type: '{}'", self.checker_type)?;
        for m in &self.messages {
            write!(f, "\nError message: '{m}'")?;
        }
        Ok(())
    }
}

/// SQL dialects the grammar can check. One for now.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    #[default]
    Sqlite,
}

pub fn check_syntax(query: &str, dialect: Dialect) -> CheckerReport {
    let Dialect::Sqlite = dialect;
    match parse_statements(query) {
        Ok(_) => CheckerReport::valid(CheckerType::Syntax),
        Err(e) => CheckerReport::invalid(CheckerType::Syntax, vec![e.to_string()]),
    }
}

struct Scope<'a> {
    /// (name the table is addressed by, table name as written, definition)
    entries: Vec<(&'a Ident, &'a Ident, Option<&'a TableDef>)>,
    aliases: Vec<&'a str>,
    grounded: &'a GroundedSchema,
}

enum Resolution<'a> {
    Column(&'a TableDef, &'a ColumnDef),
    /// Cannot be judged (unknown table in scope, output alias, literal).
    Unknown,
    Missing(String),
}

impl<'a> Scope<'a> {
    fn new(select: &'a Select, grounded: &'a GroundedSchema) -> Self {
        let refs = select.from.iter().chain(select.joins.iter().map(|j| &j.table));
        let entries = refs.map(|t| (t.scope_name(), &t.name, grounded.table(&t.name.value))).collect();
        let aliases = select
            .items
            .iter()
            .filter_map(|i| match i {
                SelectItem::Expr { alias: Some(a), .. } => Some(a.value.as_str()),
                _ => None,
            })
            .collect();
        Self { entries, aliases, grounded }
    }

    fn resolve(&self, qualifier: Option<&Ident>, name: &Ident) -> Resolution<'a> {
        match qualifier {
            Some(q) => match self.entries.iter().find(|(s, _, _)| s.matches(&q.value)) {
                Some((_, _, Some(t))) => match t.column(&name.value) {
                    Some(c) => Resolution::Column(t, c),
                    None => Resolution::Missing(format!("Column {} does not exist in table {}", name.value, t.name)),
                },
                Some((_, _, None)) => Resolution::Unknown,
                None if self.grounded.table(&q.value).is_some() => {
                    Resolution::Missing(format!("Table {} is referenced but not joined", q.value))
                }
                None => Resolution::Missing(format!("Table {} does not exist", q.value)),
            },
            None => {
                for (_, _, t) in &self.entries {
                    if let Some(c) = t.and_then(|t| t.column(&name.value).map(|c| (t, c))) {
                        return Resolution::Column(c.0, c.1);
                    }
                }
                let opaque = self.entries.iter().any(|(_, _, t)| t.is_none())
                    || name.double_quoted
                    || self.aliases.iter().any(|a| a.eq_ignore_ascii_case(&name.value));
                if opaque {
                    Resolution::Unknown
                } else {
                    Resolution::Missing(format!("Column {} does not exist", name.value))
                }
            }
        }
    }

    fn column_of(&self, e: &Expr) -> Option<(&'a TableDef, &'a ColumnDef)> {
        match e {
            Expr::Column { qualifier, name } => match self.resolve(qualifier.as_ref(), name) {
                Resolution::Column(t, c) => Some((t, c)),
                _ => None,
            },
            Expr::Nested(inner) => self.column_of(inner),
            _ => None,
        }
    }
}

fn is_fk_pair(a: (&TableDef, &ColumnDef), b: (&TableDef, &ColumnDef)) -> bool {
    let one_way = |(t, c): (&TableDef, &ColumnDef), (u, d): (&TableDef, &ColumnDef)| {
        t.foreign_keys.iter().any(|fk| {
            fk.target_table.eq_ignore_ascii_case(&u.name)
                && fk.columns.iter().zip(&fk.target_columns).any(|(x, y)| {
                    x.eq_ignore_ascii_case(&c.name) && y.eq_ignore_ascii_case(&d.name)
                })
        })
    };
    one_way(a, b) || one_way(b, a)
}

fn check_select(select: &Select, grounded: &GroundedSchema, out: &mut Vec<String>) {
    let scope = Scope::new(select, grounded);
    for (_, name, def) in &scope.entries {
        if def.is_none() {
            out.push(format!("Table {} does not exist", name.value));
        }
    }

    let mut exprs: Vec<&Expr> = Vec::new();
    for item in &select.items {
        match item {
            SelectItem::Expr { expr, .. } => exprs.push(expr),
            SelectItem::QualifiedWildcard(q) => {
                if !scope.entries.iter().any(|(s, _, _)| s.matches(&q.value)) {
                    out.push(format!("Table {} does not exist", q.value));
                }
            }
            SelectItem::Wildcard => {}
        }
    }
    exprs.extend(select.joins.iter().filter_map(|j| j.on.as_ref()));
    exprs.extend(select.selection.iter());
    exprs.extend(select.group_by.iter());
    exprs.extend(select.having.iter());
    exprs.extend(select.order_by.iter().map(|o| &o.expr));

    for e in &exprs {
        e.walk(&mut |sub| match sub {
            Expr::Column { qualifier, name } => {
                if let Resolution::Missing(m) = scope.resolve(qualifier.as_ref(), name) {
                    out.push(m);
                }
            }
            Expr::Function { name, args, .. } if name.matches("SUM") || name.matches("AVG") => {
                if let Some((_, c)) = args.first().and_then(|a| scope.column_of(a)) {
                    if !c.sql_type.is_numeric() {
                        out.push(format!(
                            "{} over non-numeric column {} of type {}",
                            name.value.to_ascii_uppercase(),
                            c.name,
                            c.sql_type
                        ));
                    }
                }
            }
            _ => {}
        });
    }

    for on in select.joins.iter().filter_map(|j| j.on.as_ref()) {
        on.walk(&mut |sub| {
            if let Expr::Binary { left, op: BinaryOp::Eq, right } = sub {
                if let (Some(l), Some(r)) = (scope.column_of(left), scope.column_of(right)) {
                    if !is_fk_pair(l, r) && !l.1.sql_type.comparable_with(r.1.sql_type) {
                        out.push(format!(
                            "Join condition {}.{} = {}.{} compares incompatible types {} and {}",
                            l.0.name, l.1.name, r.0.name, r.1.name, l.1.sql_type, r.1.sql_type
                        ));
                    }
                }
            }
        });
    }
}

/// Reference and type consistency of every SELECT against the grounded
/// schema. Other statement kinds are left to the read-only guard.
pub fn check_semantics(query: &str, grounded: &GroundedSchema) -> CheckerReport {
    let stmts = match parse_statements(query) {
        Ok(s) => s,
        Err(e) => return CheckerReport::invalid(CheckerType::Semantic, vec![format!("query does not parse: {e}")]),
    };
    let mut messages = Vec::new();
    for s in &stmts {
        if let Statement::Select(select) = s {
            check_select(select, grounded, &mut messages);
        }
    }
    let mut seen = std::collections::HashSet::new();
    messages.retain(|m| seen.insert(m.clone()));
    CheckerReport::from_messages(CheckerType::Semantic, messages)
}

/// Runs the query, wrapped in a row limit, on a read-only connection. Guard
/// violations and engine errors are reported as Invalid; only a failure to
/// connect is an `Err`.
pub fn check_execution(query: &str, conn: &ConnectionDescriptor, row_limit: usize) -> Result<CheckerReport, EngineError> {
    let q = match read_only_guard(query) {
        Ok(q) => q,
        Err(e) => return Ok(CheckerReport::invalid(CheckerType::Execution, vec![e.to_string()])),
    };
    let c = conn.open_read_only()?;
    let run = || -> rusqlite::Result<()> {
        let mut stmt = c.prepare(&format!("SELECT * FROM ({q}) LIMIT {row_limit}"))?;
        let mut rows = stmt.query([])?;
        while rows.next()?.is_some() {}
        Ok(())
    };
    Ok(match run() {
        Ok(()) => CheckerReport::valid(CheckerType::Execution),
        Err(e) => CheckerReport::invalid(CheckerType::Execution, vec![e.to_string()]),
    })
}

/// The checker battery, run in order Syntax, Semantic, Execution and stopped
/// at the first Invalid report. Execution is skipped without a connection.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Checkers {
    pub dialect: Dialect,
    pub connection: Option<ConnectionDescriptor>,
    pub row_limit: usize,
}

impl Checkers {
    pub const DEFAULT_ROW_LIMIT: usize = 100;

    pub fn new(connection: Option<ConnectionDescriptor>) -> Self {
        Self { dialect: Dialect::Sqlite, connection, row_limit: Self::DEFAULT_ROW_LIMIT }
    }

    pub fn run(&self, query: &str, grounded: &GroundedSchema) -> Result<Vec<CheckerReport>, EngineError> {
        let mut reports = vec![check_syntax(query, self.dialect)];
        if !reports[0].is_valid() {
            return Ok(reports);
        }
        reports.push(check_semantics(query, grounded));
        if !reports[1].is_valid() {
            return Ok(reports);
        }
        if let Some(conn) = &self.connection {
            reports.push(check_execution(query, conn, self.row_limit.max(1))?);
        }
        Ok(reports)
    }
}

/// Feedback for the next prompt: one bullet per message of every Invalid
/// report, then one guideline per distinct checker type.
pub fn repair_instruction(reports: &[CheckerReport]) -> String {
    let mut out = String::from("Generated query may be invalid because:");
    let mut kinds: Vec<CheckerType> = Vec::new();
    for r in reports.iter().filter(|r| !r.is_valid()) {
        for m in &r.messages {
            let m = m.trim();
            let stop = if m.ends_with(['.', '!', '?']) { "" } else { "." };
            out.push_str(&format!("\n- {m}{stop}"));
        }
        if !kinds.contains(&r.checker_type) {
            kinds.push(r.checker_type);
        }
    }
    for k in kinds {
        out.push('\n');
        out.push_str(k.guideline());
    }
    out
}
