use thiserror::Error;

use crate::diag::Diagnostic;
use crate::dsl::ParseError;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed arguments that violate an operation's precondition.
    #[error("usage error: {0}")]
    Usage(String),
    /// The model is structurally broken (after parsing succeeded).
    #[error("model error: {0}")]
    Model(String),
    /// Assumption checks failed; building the semantics was refused.
    #[error("model violates the digital-clocks assumptions:\n{}", render(.0))]
    Assumptions(Vec<Diagnostic>),
    #[error("state limit of {limit} states exceeded while building the game")]
    StateLimit { limit: usize },
    #[error("refused: {0}")]
    Refused(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn render(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}
