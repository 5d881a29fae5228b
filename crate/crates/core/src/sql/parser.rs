//! Recursive-descent parser for the query dialect.
//!
//! Grammar: `SELECT [DISTINCT] items [FROM tables joins*] [WHERE e] [GROUP BY e,..]
//! [HAVING e] [ORDER BY e [ASC|DESC],..] [LIMIT e [OFFSET e]]`, with the usual
//! operator precedence `OR < AND < NOT < comparison < additive < multiplicative < unary`.
//! Non-query statements are recognized by their head keyword only.

use super::ast::*;
use super::lexer::{tokenize, Position, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("syntax error at {pos}: {message}")]
pub struct ParseError {
    pub pos: Position,
    pub message: String,
}

const RESERVED: &[&str] = &[
    "SELECT", "FROM", "WHERE", "GROUP", "BY", "HAVING", "ORDER", "LIMIT", "OFFSET", "JOIN", "INNER",
    "LEFT", "RIGHT", "FULL", "OUTER", "CROSS", "ON", "AS", "AND", "OR", "NOT", "LIKE", "IN", "IS",
    "NULL", "BETWEEN", "DISTINCT", "ASC", "DESC", "UNION", "CASE", "WHEN", "THEN", "ELSE", "END",
    "EXISTS", "WITH", "INTERSECT", "EXCEPT", "USING",
];

const OTHER_STATEMENTS: &[&str] = &[
    "INSERT", "UPDATE", "DELETE", "DROP", "CREATE", "ALTER", "TRUNCATE", "REPLACE", "MERGE",
    "ATTACH", "DETACH", "PRAGMA", "VACUUM", "GRANT", "REVOKE", "EXEC", "EXECUTE", "REINDEX",
    "ANALYZE", "BEGIN", "COMMIT", "ROLLBACK",
];

fn is_reserved(word: &str) -> bool {
    RESERVED.iter().any(|r| r.eq_ignore_ascii_case(word))
}

/// Parses one or more `;`-separated statements.
pub fn parse_statements(sql: &str) -> Result<Vec<Statement>, ParseError> {
    let tokens = tokenize(sql).map_err(|e| ParseError { pos: e.pos, message: e.message })?;
    let end = tokens.last().map(end_position).unwrap_or(Position { line: 1, column: 1 });
    let mut p = Parser { tokens, idx: 0, end };
    let mut out = Vec::new();
    loop {
        while p.eat(&TokenKind::Semicolon) {}
        if p.at_end() {
            break;
        }
        out.push(p.statement()?);
        if !p.at_end() && !p.eat(&TokenKind::Semicolon) {
            return Err(p.unexpected("end of statement"));
        }
    }
    if out.is_empty() {
        return Err(ParseError { pos: p.end, message: "empty query".into() });
    }
    Ok(out)
}

/// Parses exactly one SELECT statement.
pub fn parse_select(sql: &str) -> Result<Select, ParseError> {
    let stmts = parse_statements(sql)?;
    match stmts.into_iter().next() {
        Some(Statement::Select(s)) => Ok(*s),
        Some(Statement::Other { keyword, pos }) => {
            Err(ParseError { pos, message: format!("expected SELECT, found {keyword}") })
        }
        None => unreachable!("parse_statements never returns an empty list"),
    }
}

fn end_position(t: &Token) -> Position {
    let width = t.kind.to_string().chars().count();
    Position { line: t.pos.line, column: t.pos.column + width }
}

struct Parser {
    tokens: Vec<Token>,
    idx: usize,
    end: Position,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.idx)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.idx + offset)
    }

    fn at_end(&self) -> bool {
        self.idx >= self.tokens.len()
    }

    fn pos(&self) -> Position {
        self.peek().map(|t| t.pos).unwrap_or(self.end)
    }

    fn advance(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.idx).cloned();
        self.idx += 1;
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn check_kw(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.check_kw(kw) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let found = match self.peek() {
            Some(t) => t.kind.to_string(),
            None => "end of input".to_string(),
        };
        ParseError { pos: self.pos(), message: format!("expected {expected}, found {found}") }
    }

    fn expect(&mut self, kind: &TokenKind, expected: &str) -> Result<(), ParseError> {
        if self.eat(kind) {
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(kw))
        }
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        if self.check_kw("SELECT") {
            return Ok(Statement::Select(Box::new(self.select()?)));
        }
        if let Some(t) = self.peek() {
            if let TokenKind::Word(w) = &t.kind {
                if OTHER_STATEMENTS.iter().any(|k| k.eq_ignore_ascii_case(w)) {
                    let keyword = w.to_ascii_uppercase();
                    let pos = t.pos;
                    while !self.at_end() && self.peek().map(|t| &t.kind) != Some(&TokenKind::Semicolon) {
                        self.idx += 1;
                    }
                    return Ok(Statement::Other { keyword, pos });
                }
            }
        }
        Err(self.unexpected("SELECT"))
    }

    fn select(&mut self) -> Result<Select, ParseError> {
        self.expect_kw("SELECT")?;
        let distinct = self.eat_kw("DISTINCT");
        if !distinct {
            self.eat_kw("ALL");
        }
        let mut items = vec![self.select_item()?];
        while self.eat(&TokenKind::Comma) {
            items.push(self.select_item()?);
        }

        let mut from = Vec::new();
        let mut joins = Vec::new();
        if self.eat_kw("FROM") {
            from.push(self.table_ref()?);
            loop {
                if self.eat(&TokenKind::Comma) {
                    from.push(self.table_ref()?);
                } else if let Some(kind) = self.join_kind()? {
                    let table = self.table_ref()?;
                    let on = if kind == JoinKind::Cross {
                        None
                    } else {
                        self.expect_kw("ON")?;
                        Some(self.expr()?)
                    };
                    joins.push(Join { kind, table, on });
                } else {
                    break;
                }
            }
        }

        let selection = if self.eat_kw("WHERE") { Some(self.expr()?) } else { None };
        let mut group_by = Vec::new();
        if self.eat_kw("GROUP") {
            self.expect_kw("BY")?;
            group_by.push(self.expr()?);
            while self.eat(&TokenKind::Comma) {
                group_by.push(self.expr()?);
            }
        }
        let having = if self.eat_kw("HAVING") { Some(self.expr()?) } else { None };
        let mut order_by = Vec::new();
        if self.eat_kw("ORDER") {
            self.expect_kw("BY")?;
            loop {
                let expr = self.expr()?;
                let descending = if self.eat_kw("DESC") {
                    true
                } else {
                    self.eat_kw("ASC");
                    false
                };
                order_by.push(OrderItem { expr, descending });
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        let mut limit = None;
        let mut offset = None;
        if self.eat_kw("LIMIT") {
            limit = Some(self.expr()?);
            if self.eat_kw("OFFSET") {
                offset = Some(self.expr()?);
            }
        }
        for kw in ["UNION", "INTERSECT", "EXCEPT"] {
            if self.check_kw(kw) {
                return Err(ParseError {
                    pos: self.pos(),
                    message: format!("{kw} is not supported"),
                });
            }
        }
        Ok(Select { distinct, items, from, joins, selection, group_by, having, order_by, limit, offset })
    }

    fn join_kind(&mut self) -> Result<Option<JoinKind>, ParseError> {
        let kind = if self.eat_kw("JOIN") {
            return Ok(Some(JoinKind::Inner));
        } else if self.eat_kw("INNER") {
            JoinKind::Inner
        } else if self.eat_kw("LEFT") {
            self.eat_kw("OUTER");
            JoinKind::Left
        } else if self.eat_kw("RIGHT") {
            self.eat_kw("OUTER");
            JoinKind::Right
        } else if self.eat_kw("FULL") {
            self.eat_kw("OUTER");
            JoinKind::Full
        } else if self.eat_kw("CROSS") {
            JoinKind::Cross
        } else {
            return Ok(None);
        };
        self.expect_kw("JOIN")?;
        Ok(Some(kind))
    }

    fn table_ref(&mut self) -> Result<TableRef, ParseError> {
        if self.peek().map(|t| &t.kind) == Some(&TokenKind::LParen) {
            return Err(ParseError { pos: self.pos(), message: "subqueries are not supported".into() });
        }
        let name = self.ident("table name")?;
        if self.peek().map(|t| &t.kind) == Some(&TokenKind::Dot) {
            return Err(ParseError {
                pos: self.pos(),
                message: "schema-qualified table names are not supported".into(),
            });
        }
        let alias = self.alias()?;
        Ok(TableRef { name, alias })
    }

    fn alias(&mut self) -> Result<Option<Ident>, ParseError> {
        if self.eat_kw("AS") {
            return self.ident("alias").map(Some);
        }
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Word(w)) if !is_reserved(w) => self.ident("alias").map(Some),
            Some(TokenKind::QuotedIdent(_)) | Some(TokenKind::DoubleQuoted(_)) => {
                self.ident("alias").map(Some)
            }
            _ => Ok(None),
        }
    }

    fn ident(&mut self, what: &str) -> Result<Ident, ParseError> {
        let Some(t) = self.peek().cloned() else {
            return Err(self.unexpected(what));
        };
        let ident = match t.kind {
            TokenKind::Word(w) if !is_reserved(&w) => Ident { value: w, double_quoted: false, pos: t.pos },
            TokenKind::QuotedIdent(w) => Ident { value: w, double_quoted: false, pos: t.pos },
            TokenKind::DoubleQuoted(w) => Ident { value: w, double_quoted: true, pos: t.pos },
            _ => return Err(self.unexpected(what)),
        };
        self.idx += 1;
        Ok(ident)
    }

    fn select_item(&mut self) -> Result<SelectItem, ParseError> {
        if self.eat(&TokenKind::Star) {
            return Ok(SelectItem::Wildcard);
        }
        // qualifier.*
        if let (Some(_), Some(dot), Some(star)) = (self.peek(), self.peek_at(1), self.peek_at(2)) {
            if dot.kind == TokenKind::Dot && star.kind == TokenKind::Star {
                let q = self.ident("table name")?;
                self.idx += 2;
                return Ok(SelectItem::QualifiedWildcard(q));
            }
        }
        let expr = self.expr()?;
        let alias = self.alias()?;
        Ok(SelectItem::Expr { expr, alias })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.and_expr()?;
        while self.eat_kw("OR") {
            let right = self.and_expr()?;
            left = Expr::Binary { left: Box::new(left), op: BinaryOp::Or, right: Box::new(right) };
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.not_expr()?;
        while self.eat_kw("AND") {
            let right = self.not_expr()?;
            left = Expr::Binary { left: Box::new(left), op: BinaryOp::And, right: Box::new(right) };
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        if self.eat_kw("NOT") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let left = self.additive()?;
        let op = match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Eq) => Some(BinaryOp::Eq),
            Some(TokenKind::NotEq) => Some(BinaryOp::NotEq),
            Some(TokenKind::Lt) => Some(BinaryOp::Lt),
            Some(TokenKind::LtEq) => Some(BinaryOp::LtEq),
            Some(TokenKind::Gt) => Some(BinaryOp::Gt),
            Some(TokenKind::GtEq) => Some(BinaryOp::GtEq),
            _ => None,
        };
        if let Some(op) = op {
            self.idx += 1;
            let right = self.additive()?;
            return Ok(Expr::Binary { left: Box::new(left), op, right: Box::new(right) });
        }

        if self.eat_kw("IS") {
            let negated = self.eat_kw("NOT");
            self.expect_kw("NULL")?;
            return Ok(Expr::IsNull { expr: Box::new(left), negated });
        }
        let negated = if self.check_kw("NOT")
            && self.peek_at(1).is_some_and(|t| t.is_keyword("LIKE") || t.is_keyword("IN") || t.is_keyword("BETWEEN"))
        {
            self.idx += 1;
            true
        } else {
            false
        };
        if self.eat_kw("LIKE") {
            let pattern = self.additive()?;
            return Ok(Expr::Like { expr: Box::new(left), pattern: Box::new(pattern), negated });
        }
        if self.eat_kw("IN") {
            self.expect(&TokenKind::LParen, "(")?;
            if self.check_kw("SELECT") {
                return Err(ParseError { pos: self.pos(), message: "subqueries are not supported".into() });
            }
            let mut list = vec![self.expr()?];
            while self.eat(&TokenKind::Comma) {
                list.push(self.expr()?);
            }
            self.expect(&TokenKind::RParen, ")")?;
            return Ok(Expr::InList { expr: Box::new(left), list, negated });
        }
        if self.eat_kw("BETWEEN") {
            let low = self.additive()?;
            self.expect_kw("AND")?;
            let high = self.additive()?;
            return Ok(Expr::Between { expr: Box::new(left), low: Box::new(low), high: Box::new(high), negated });
        }
        Ok(left)
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.multiplicative()?;
        loop {
            let op = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Plus) => BinaryOp::Plus,
                Some(TokenKind::Minus) => BinaryOp::Minus,
                Some(TokenKind::Concat) => BinaryOp::Concat,
                _ => return Ok(left),
            };
            self.idx += 1;
            let right = self.multiplicative()?;
            left = Expr::Binary { left: Box::new(left), op, right: Box::new(right) };
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.unary()?;
        loop {
            let op = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Star) => BinaryOp::Multiply,
                Some(TokenKind::Slash) => BinaryOp::Divide,
                Some(TokenKind::Percent) => BinaryOp::Modulo,
                _ => return Ok(left),
            };
            self.idx += 1;
            let right = self.unary()?;
            left = Expr::Binary { left: Box::new(left), op, right: Box::new(right) };
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&TokenKind::Minus) {
            return Ok(Expr::Negate(Box::new(self.unary()?)));
        }
        if self.eat(&TokenKind::Plus) {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.unexpected("expression"));
        };
        match tok.kind {
            TokenKind::Number(n) => {
                self.idx += 1;
                Ok(Expr::Literal(Literal::Number(n)))
            }
            TokenKind::String(s) => {
                self.idx += 1;
                Ok(Expr::Literal(Literal::String(s)))
            }
            TokenKind::LParen => {
                self.idx += 1;
                if self.check_kw("SELECT") {
                    return Err(ParseError { pos: self.pos(), message: "subqueries are not supported".into() });
                }
                let e = self.expr()?;
                self.expect(&TokenKind::RParen, ")")?;
                Ok(Expr::Nested(Box::new(e)))
            }
            TokenKind::Word(ref w) if w.eq_ignore_ascii_case("NULL") => {
                self.idx += 1;
                Ok(Expr::Literal(Literal::Null))
            }
            TokenKind::Word(ref w) if w.eq_ignore_ascii_case("TRUE") || w.eq_ignore_ascii_case("FALSE") => {
                self.idx += 1;
                Ok(Expr::Literal(Literal::Boolean(w.eq_ignore_ascii_case("TRUE"))))
            }
            TokenKind::Word(ref w) if w.eq_ignore_ascii_case("CASE") => {
                self.idx += 1;
                self.case_expr()
            }
            TokenKind::Word(ref w) if w.eq_ignore_ascii_case("CAST") => {
                self.idx += 1;
                self.expect(&TokenKind::LParen, "(")?;
                let expr = self.expr()?;
                self.expect_kw("AS")?;
                let ty = self.ident("type name")?;
                let mut type_name = ty.value.to_ascii_uppercase();
                if self.eat(&TokenKind::LParen) {
                    while !self.eat(&TokenKind::RParen) {
                        if self.advance().is_none() {
                            return Err(self.unexpected(")"));
                        }
                    }
                    type_name.push_str("(..)");
                }
                self.expect(&TokenKind::RParen, ")")?;
                Ok(Expr::Cast { expr: Box::new(expr), type_name })
            }
            TokenKind::Word(_) | TokenKind::QuotedIdent(_) | TokenKind::DoubleQuoted(_) => {
                let first = self.ident("expression")?;
                if self.peek().map(|t| &t.kind) == Some(&TokenKind::LParen) && !first.double_quoted {
                    self.idx += 1;
                    return self.function_call(first);
                }
                if self.eat(&TokenKind::Dot) {
                    let name = self.ident("column name")?;
                    return Ok(Expr::Column { qualifier: Some(first), name });
                }
                Ok(Expr::Column { qualifier: None, name: first })
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    fn function_call(&mut self, name: Ident) -> Result<Expr, ParseError> {
        if self.eat(&TokenKind::Star) {
            self.expect(&TokenKind::RParen, ")")?;
            return Ok(Expr::Function { name, args: Vec::new(), distinct: false, star: true });
        }
        if self.eat(&TokenKind::RParen) {
            return Ok(Expr::Function { name, args: Vec::new(), distinct: false, star: false });
        }
        let distinct = self.eat_kw("DISTINCT");
        let mut args = vec![self.expr()?];
        while self.eat(&TokenKind::Comma) {
            args.push(self.expr()?);
        }
        self.expect(&TokenKind::RParen, ")")?;
        Ok(Expr::Function { name, args, distinct, star: false })
    }

    fn case_expr(&mut self) -> Result<Expr, ParseError> {
        let operand = if self.check_kw("WHEN") { None } else { Some(Box::new(self.expr()?)) };
        let mut branches = Vec::new();
        while self.eat_kw("WHEN") {
            let cond = self.expr()?;
            self.expect_kw("THEN")?;
            branches.push((cond, self.expr()?));
        }
        if branches.is_empty() {
            return Err(self.unexpected("WHEN"));
        }
        let otherwise = if self.eat_kw("ELSE") { Some(Box::new(self.expr()?)) } else { None };
        self.expect_kw("END")?;
        Ok(Expr::Case { operand, branches, otherwise })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EARNINGS_QUERY: &str = "SELECT Product.ProductNumber, SUM(SalesOrderDetail.LineTotal*CurrencyRate.AverageRate) AS TotalEarnings
FROM Product
JOIN SalesOrderDetail ON SalesOrderDetail.ProductID = Product.ProductID
JOIN SalesOrderHeader ON SalesOrderDetail.SalesOrderID = SalesOrderHeader.SalesOrderID
JOIN CurrencyRate ON SalesOrderHeader.CurrencyRateID = CurrencyRate.CurrencyRateID
JOIN Currency ON CurrencyRate.ToCurrencyCode = Currency.CurrencyCode
WHERE CurrencyRate.ToCurrencyCode = \"Euro\"
GROUP BY Product.ProductNumber";

    #[test]
    fn parses_earnings_query() {
        let s = parse_select(EARNINGS_QUERY).unwrap();
        assert_eq!(s.items.len(), 2);
        assert_eq!(s.from.len(), 1);
        assert_eq!(s.joins.len(), 4);
        assert_eq!(s.group_by.len(), 1);
        match &s.items[1] {
            SelectItem::Expr { expr, alias } => {
                assert!(expr.is_aggregate_call());
                assert_eq!(alias.as_ref().unwrap().value, "TotalEarnings");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parses_like_query() {
        let s = parse_select("SELECT Name FROM Product WHERE Name LIKE '%Helmet%'").unwrap();
        assert!(matches!(s.selection, Some(Expr::Like { negated: false, .. })));
    }

    #[test]
    fn missing_select_list_names_offending_token() {
        let err = parse_select("SELECT FROM WHERE").unwrap_err();
        assert_eq!(err.pos, Position { line: 1, column: 8 });
        assert_eq!(err.to_string(), "syntax error at line 1, column 8: expected expression, found FROM");
    }

    #[test]
    fn recognizes_non_query_statements() {
        let stmts = parse_statements("DROP TABLE Product").unwrap();
        assert_eq!(stmts, vec![Statement::Other { keyword: "DROP".into(), pos: Position { line: 1, column: 1 } }]);
        let stmts = parse_statements("SELECT 1; DELETE FROM Product;").unwrap();
        assert_eq!(stmts.len(), 2);
    }

    #[test]
    fn operator_precedence() {
        let s = parse_select("SELECT a + b * c FROM t WHERE x = 1 OR y = 2 AND NOT z = 3").unwrap();
        let SelectItem::Expr { expr, .. } = &s.items[0] else { panic!() };
        let Expr::Binary { op: BinaryOp::Plus, right, .. } = expr else { panic!("{expr:?}") };
        assert!(matches!(**right, Expr::Binary { op: BinaryOp::Multiply, .. }));
        let Some(Expr::Binary { op: BinaryOp::Or, right, .. }) = &s.selection else { panic!() };
        assert!(matches!(**right, Expr::Binary { op: BinaryOp::And, .. }));
    }

    #[test]
    fn aliases_and_join_kinds() {
        let s = parse_select(
            "SELECT p.Name AS n, COUNT(*) FROM Product p LEFT OUTER JOIN ProductInventory AS i ON i.ProductID = p.ProductID CROSS JOIN Currency GROUP BY p.Name ORDER BY 2 DESC LIMIT 5 OFFSET 1",
        )
        .unwrap();
        assert_eq!(s.from[0].alias.as_ref().unwrap().value, "p");
        assert_eq!(s.joins[0].kind, JoinKind::Left);
        assert_eq!(s.joins[1].kind, JoinKind::Cross);
        assert!(s.order_by[0].descending);
        assert!(s.limit.is_some() && s.offset.is_some());
    }

    #[test]
    fn rejects_subqueries_and_trailing_garbage() {
        assert!(parse_select("SELECT * FROM (SELECT 1)").is_err());
        assert!(parse_select("SELECT a FROM t WHERE a IN (SELECT b FROM u)").is_err());
        let err = parse_select("SELECT a FROM t t2 t3").unwrap_err();
        assert!(err.message.contains("end of statement"), "{err}");
        assert!(parse_select("SELECT a FROM t UNION SELECT b FROM u").is_err());
    }

    #[test]
    fn case_and_cast() {
        let s = parse_select(
            "SELECT SUM(CASE WHEN Color = 'Red' THEN 1 ELSE 0 END), CAST(ListPrice AS DECIMAL(10,2)) FROM Product",
        )
        .unwrap();
        assert_eq!(s.items.len(), 2);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(parse_statements("  ; ").is_err());
    }
}
