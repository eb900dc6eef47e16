use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{op}: argument outside domain: {detail}")]
    Domain { op: &'static str, detail: String },
    #[error("singular step matrix: {0}")]
    Singular(String),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("root not bracketed: {0}")]
    RootBracket(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Short machine-readable tag, used by the CLI in `ERROR <code>:` lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Singular(_) => "singular",
            Error::SizeLimit(_) => "size-limit",
            Error::Precondition(_) => "precondition",
            Error::RootBracket(_) => "root-bracket",
            Error::DegenerateFit(_) => "degenerate-fit",
            Error::InvalidInput(_) => "invalid-input",
        }
    }

    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain { op, detail: detail.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
