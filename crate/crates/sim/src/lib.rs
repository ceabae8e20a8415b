//! File formats, reports and the experiment runner for the MCP simulator.

pub mod cli;
pub mod csv;
pub mod kml;
pub mod map;
pub mod runner;
pub mod summary;
pub mod trace;
pub mod xml;

/// Parse failure in one of the line-oriented input formats.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message} at `{token}`")]
pub struct ParseError {
    pub line: usize,
    pub token: String,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, token: &str, message: impl Into<String>) -> Self {
        Self {
            line,
            token: token.to_string(),
            message: message.into(),
        }
    }
}
