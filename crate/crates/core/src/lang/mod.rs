//! Text formats: the guarded-command model language (`.gcm`) and CTL
//! property formulas (`.ctl`).

mod formula;
mod lexer;
mod model_text;

use thiserror::Error;

pub use formula::{parse_formula, print_formula, CtlFormula};
pub use model_text::{parse_model, print_expr, print_model};

use crate::model::ModelError;

const RESERVED: &[&str] = &[
    "const", "var", "init", "skip", "true", "false", "EX", "EF", "EG", "AX", "AF", "AG",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word)
}

/// `[A-Za-z_][A-Za-z0-9_]*`, not reserved.
pub fn is_identifier(word: &str) -> bool {
    let mut chars = word.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !is_reserved(word)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, col: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("syntax error at {0}")]
    Syntax(#[from] ParseError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
