use std::fmt;

/// A lexical, syntactic or semantic error in model text, with the 1-based
/// position it refers to and a one-line hint on how to fix it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub hint: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>, hint: impl Into<String>) -> Self {
        ParseError { line, column, message: message.into(), hint: hint.into() }
    }

    pub fn at(pos: super::ast::Pos, message: impl Into<String>, hint: impl Into<String>) -> Self {
        Self::new(pos.line, pos.column, message, hint)
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.hint.is_empty() {
            write!(f, "\n  hint: {}", self.hint)?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}
