//! Lexer and parser for the SQL subset used by DDL ingestion and query checking.

pub mod ast;
pub mod lexer;
pub mod parser;

pub use parser::{parse_select, parse_statements, ParseError};
