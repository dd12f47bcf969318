//! Text formats: theories (`.pth`), structures (`.pstruct`), QE rules
//! (`.rules`), formulas, and the JSON inputs and reports used by the CLI.

pub mod json;
pub mod lexer;
pub mod text;

use std::fmt;
use std::path::Path;

use thiserror::Error;

pub use json::{
    grid_from_json, grid_to_json, map_from_json, map_to_json, report_json, sequence_from_json, sequence_to_json, span_from_json,
    tree_from_json, tree_to_json, JsonError, Report, Span,
};
pub use text::{
    element_lookup, parse_cont_formula, parse_formula, parse_formula_in, parse_formula_list, parse_formula_with, parse_rules, parse_sentence, parse_structure,
    parse_theory, parse_thresholds, print_rules, print_structure,
};

/// A named UTF-8 text with a line index for diagnostics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
    line_starts: Vec<usize>,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let mut line_starts = vec![0];
        line_starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        SourceFile {
            path: path.into(),
            text,
            line_starts,
        }
    }

    /// Reads a file; invalid UTF-8 is a parse error at the first bad byte.
    pub fn read(path: &Path) -> Result<Self, IoError> {
        let bytes = std::fs::read(path).map_err(|e| IoError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_bytes(&path.display().to_string(), &bytes).map_err(IoError::Parse)
    }

    pub fn from_bytes(path: &str, bytes: &[u8]) -> Result<Self, ParseError> {
        match std::str::from_utf8(bytes) {
            Ok(s) => Ok(SourceFile::new(path, s)),
            Err(e) => {
                let ok = e.valid_up_to();
                let src = SourceFile::new(path, String::from_utf8_lossy(&bytes[..ok]).into_owned());
                Err(src.error(ok, ok, "invalid UTF-8"))
            }
        }
    }

    /// 1-based line and column (in characters) of a byte offset.
    pub fn line_col(&self, offset: usize) -> (usize, usize) {
        let offset = offset.min(self.text.len());
        let line = self.line_starts.partition_point(|&s| s <= offset) - 1;
        let start = self.line_starts[line];
        let col = self.text.get(start..offset).map(|s| s.chars().count()).unwrap_or(offset - start);
        (line + 1, col + 1)
    }

    pub fn error(&self, start: usize, end: usize, msg: impl Into<String>) -> ParseError {
        self.error_of(ErrorKind::Syntax, start, end, msg)
    }

    pub fn error_of(&self, kind: ErrorKind, start: usize, end: usize, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.line_col(start);
        ParseError {
            kind,
            path: self.path.clone(),
            start,
            end: end.max(start),
            line,
            col,
            message: msg.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    Syntax,
    Sort,
    UnknownSymbol,
    UnknownElement,
    PartialInterpretation,
    Duplicate,
    Invalid,
}

/// A diagnostic with its source span (byte offsets) and position.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ParseError {
    pub kind: ErrorKind,
    pub path: String,
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}", self.path, self.line, self.col, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum IoError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
}
