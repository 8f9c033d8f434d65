//! Textual `.spl` format: parser and deterministic printer.

mod lexer;
mod parser;
mod printer;

use std::fmt;

use thiserror::Error;

pub use parser::{parse_formula, parse_spl};
pub use printer::{print_expr, print_program, print_spl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("duplicate {0}")]
    Duplicate(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("order mismatch: {0}")]
    OrderMismatch(String),
    #[error("cyclic extends relation through class `{0}`")]
    ExtendsCycle(String),
    #[error("`original` may only appear in the body of a method modification")]
    OriginalOutsideModifies,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {kind}")]
pub struct ParseError {
    pub pos: Pos,
    pub kind: ParseErrorKind,
}
