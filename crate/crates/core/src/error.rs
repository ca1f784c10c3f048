use thiserror::Error;

/// Errors reported by every fallible operation in the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Input text could not be parsed (malformed JSON or schema violation).
    #[error("parse error: {0}")]
    Parse(String),
    /// A structure, relation, or table violates its invariants.
    #[error("invalid data: {0}")]
    Invalid(String),
    /// Two structures that must be similar have different signatures.
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    /// A search, enumeration, or size cap was hit before the question was settled.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    /// The pair (A, B) is not a template because A does not map to B.
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    /// An instance promised to map to A turned out not to.
    #[error("promise violation: {0}")]
    PromiseViolation(String),
    #[error("unknown catalog key `{0}`")]
    UnknownKey(String),
}

impl Error {
    /// True for outcomes that mean "gave up", as opposed to "answered no".
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, Error::ResourceLimit(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}
