//! Line-oriented text encoding of programs (`.sfir` files).
//!
//! ```text
//! type Object {}
//! type Box extends Object { field v : int }
//! root Object.main
//! method Object.main() {
//!   b0: start()
//!     x = 5
//!     return x
//! }
//! ```
//!
//! Blocks are `LABEL: BEGIN STMT* END` where BEGIN is `start(p..)`,
//! `merge [v = phi(a, ..), ..]` or `label`, and END is `return v`, `jump L`
//! or `if COND then L1 else L2`. Comments run from `#` to end of line.

mod lexer;
mod parse;
mod print;

use std::fmt;

use thiserror::Error;

pub use parse::{parse_unchecked, Spans};
pub use print::print_program;

use crate::ir::{validate, Program, Site, Violation};

pub const KEYWORDS: &[&str] = &[
    "type", "extends", "field", "int", "method", "root", "start", "merge", "label", "phi",
    "return", "jump", "if", "then", "else", "instanceof", "any", "new", "null",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Program text plus a display name for diagnostics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceFile {
    pub origin: String,
    pub text: String,
}

impl SourceFile {
    pub fn new(origin: impl Into<String>, text: impl Into<String>) -> Self {
        SourceFile {
            origin: origin.into(),
            text: text.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(pos: Pos, message: impl Into<String>) -> Self {
        ParseError {
            pos,
            message: message.into(),
        }
    }
}

/// A validation violation placed at a source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub pos: Pos,
    pub violation: Violation,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("{origin}:{err}")]
    Syntax { origin: String, err: ParseError },
    #[error("{origin}: {} validation error(s){}", .diagnostics.len(), render_diagnostics(.origin, .diagnostics))]
    Invalid {
        origin: String,
        diagnostics: Vec<Diagnostic>,
    },
}

fn render_diagnostics(origin: &str, ds: &[Diagnostic]) -> String {
    ds.iter()
        .map(|d| format!("\n  {origin}:{}: {}", d.pos, d.violation))
        .collect()
}

/// Parses and validates a program. Violations come back as positioned
/// diagnostics.
pub fn parse_program(src: &SourceFile) -> Result<Program, TextError> {
    let (program, spans) = parse_unchecked(&src.text).map_err(|err| TextError::Syntax {
        origin: src.origin.clone(),
        err,
    })?;
    let violations = validate(&program);
    if violations.is_empty() {
        return Ok(program);
    }
    let diagnostics = violations
        .into_iter()
        .map(|v| Diagnostic {
            pos: spans.locate(&v.site),
            violation: v,
        })
        .collect();
    Err(TextError::Invalid {
        origin: src.origin.clone(),
        diagnostics,
    })
}

impl Spans {
    pub fn locate(&self, site: &Site) -> Pos {
        match *site {
            Site::Type { index } => self.types.get(index).copied(),
            Site::Method { index } => self.methods.get(index).copied(),
            Site::Block { method, block } => self
                .blocks
                .get(method)
                .and_then(|bs| bs.get(block))
                .copied(),
            Site::Root { index } => self.roots.get(index).copied(),
        }
        .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests;
