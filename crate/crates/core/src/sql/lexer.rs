//! Tokenizer shared by the DDL reader and the query grammar.

use std::fmt;

/// Line/column of a token's first character, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// Bare word. Keywords are not distinguished here.
    Word(String),
    /// `[name]` or `` `name` ``: always an identifier.
    QuotedIdent(String),
    /// `"text"`: an identifier when it resolves, otherwise a string literal.
    DoubleQuoted(String),
    String(String),
    Number(String),
    Comma,
    Dot,
    LParen,
    RParen,
    Semicolon,
    Star,
    Plus,
    Minus,
    Slash,
    Percent,
    Concat,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Word(w) => write!(f, "{w}"),
            TokenKind::QuotedIdent(w) => write!(f, "[{w}]"),
            TokenKind::DoubleQuoted(w) => write!(f, "\"{w}\""),
            TokenKind::String(s) => write!(f, "'{s}'"),
            TokenKind::Number(n) => write!(f, "{n}"),
            TokenKind::Comma => f.write_str(","),
            TokenKind::Dot => f.write_str("."),
            TokenKind::LParen => f.write_str("("),
            TokenKind::RParen => f.write_str(")"),
            TokenKind::Semicolon => f.write_str(";"),
            TokenKind::Star => f.write_str("*"),
            TokenKind::Plus => f.write_str("+"),
            TokenKind::Minus => f.write_str("-"),
            TokenKind::Slash => f.write_str("/"),
            TokenKind::Percent => f.write_str("%"),
            TokenKind::Concat => f.write_str("||"),
            TokenKind::Eq => f.write_str("="),
            TokenKind::NotEq => f.write_str("<>"),
            TokenKind::Lt => f.write_str("<"),
            TokenKind::LtEq => f.write_str("<="),
            TokenKind::Gt => f.write_str(">"),
            TokenKind::GtEq => f.write_str(">="),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Position,
}

impl Token {
    /// Case-insensitive keyword test on bare words.
    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.kind, TokenKind::Word(w) if w.eq_ignore_ascii_case(kw))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message} at {pos}")]
pub struct LexError {
    pub pos: Position,
    pub message: String,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn pos(&self) -> Position {
        Position { line: self.line, column: self.column }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, mut pred: impl FnMut(char) -> bool) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            out.push(c);
            self.bump();
        }
        out
    }

    /// Reads up to `close`; a doubled `close` is an escaped literal character.
    fn quoted(&mut self, close: char, start: Position, what: &str) -> Result<String, LexError> {
        let mut out = String::new();
        loop {
            match self.bump() {
                None => {
                    return Err(LexError { pos: start, message: format!("unterminated {what}") });
                }
                Some(c) if c == close => {
                    if self.peek() == Some(close) && close != ']' {
                        self.bump();
                        out.push(close);
                    } else {
                        return Ok(out);
                    }
                }
                Some(c) => out.push(c),
            }
        }
    }
}

pub fn tokenize(input: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor { chars: input.chars().peekable(), line: 1, column: 1 };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        let pos = cur.pos();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let kind = match c {
            '-' => {
                cur.bump();
                if cur.peek() == Some('-') {
                    cur.take_while(|c| c != '\n');
                    continue;
                }
                TokenKind::Minus
            }
            '/' => {
                cur.bump();
                if cur.peek() == Some('*') {
                    cur.bump();
                    let mut prev = '\0';
                    loop {
                        match cur.bump() {
                            None => {
                                return Err(LexError {
                                    pos,
                                    message: "unterminated block comment".into(),
                                })
                            }
                            Some('/') if prev == '*' => break,
                            Some(c) => prev = c,
                        }
                    }
                    continue;
                }
                TokenKind::Slash
            }
            '\'' => {
                cur.bump();
                TokenKind::String(cur.quoted('\'', pos, "string literal")?)
            }
            '"' => {
                cur.bump();
                TokenKind::DoubleQuoted(cur.quoted('"', pos, "quoted identifier")?)
            }
            '`' => {
                cur.bump();
                TokenKind::QuotedIdent(cur.quoted('`', pos, "quoted identifier")?)
            }
            '[' => {
                cur.bump();
                TokenKind::QuotedIdent(cur.quoted(']', pos, "bracketed identifier")?)
            }
            c if c.is_ascii_digit() => TokenKind::Number(number(&mut cur)),
            '.' => {
                cur.bump();
                match cur.peek() {
                    Some(d) if d.is_ascii_digit() => {
                        let frac = cur.take_while(|c| c.is_ascii_digit());
                        TokenKind::Number(format!(".{frac}"))
                    }
                    _ => TokenKind::Dot,
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                TokenKind::Word(cur.take_while(|c| c.is_alphanumeric() || c == '_' || c == '$'))
            }
            ',' | '(' | ')' | ';' | '*' | '+' | '%' | '=' => {
                cur.bump();
                match c {
                    ',' => TokenKind::Comma,
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    ';' => TokenKind::Semicolon,
                    '*' => TokenKind::Star,
                    '+' => TokenKind::Plus,
                    '%' => TokenKind::Percent,
                    _ => {
                        if cur.peek() == Some('=') {
                            cur.bump();
                        }
                        TokenKind::Eq
                    }
                }
            }
            '|' => {
                cur.bump();
                if cur.bump() != Some('|') {
                    return Err(LexError { pos, message: "unexpected character '|'".into() });
                }
                TokenKind::Concat
            }
            '!' => {
                cur.bump();
                if cur.bump() != Some('=') {
                    return Err(LexError { pos, message: "unexpected character '!'".into() });
                }
                TokenKind::NotEq
            }
            '<' => {
                cur.bump();
                match cur.peek() {
                    Some('=') => {
                        cur.bump();
                        TokenKind::LtEq
                    }
                    Some('>') => {
                        cur.bump();
                        TokenKind::NotEq
                    }
                    _ => TokenKind::Lt,
                }
            }
            '>' => {
                cur.bump();
                if cur.peek() == Some('=') {
                    cur.bump();
                    TokenKind::GtEq
                } else {
                    TokenKind::Gt
                }
            }
            other => {
                return Err(LexError { pos, message: format!("unexpected character '{other}'") });
            }
        };
        tokens.push(Token { kind, pos });
    }
    Ok(tokens)
}

fn number(cur: &mut Cursor<'_>) -> String {
    let mut text = cur.take_while(|c| c.is_ascii_digit());
    if cur.peek() == Some('.') {
        cur.bump();
        text.push('.');
        text.push_str(&cur.take_while(|c| c.is_ascii_digit()));
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        cur.bump();
        text.push('e');
        if let Some(sign @ ('+' | '-')) = cur.peek() {
            cur.bump();
            text.push(sign);
        }
        text.push_str(&cur.take_while(|c| c.is_ascii_digit()));
    }
    text
}
