use thiserror::Error;

/// Everything that can go wrong between loading an instance and emitting a report.
///
/// The variants map onto process exit codes (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    /// The instance or report does not match the published schema.
    #[error("schema error in `{field}`: {message}")]
    Schema { field: String, message: String },

    /// The request is well-formed but exceeds what this build can evaluate exactly
    /// (ff cap, exhaustive-enumeration cap, bitset width).
    #[error("capability error: {0}")]
    Capability(String),

    /// A precondition or internal invariant did not hold.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn capability(message: impl Into<String>) -> Self {
        Error::Capability(message.into())
    }

    pub fn contract(message: impl Into<String>) -> Self {
        Error::Contract(message.into())
    }

    /// 0 ok, 2 schema, 3 capability, 4 contract violation; I/O failures use 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema { .. } => 2,
            Error::Capability(_) => 3,
            Error::Contract(_) => 4,
            Error::Io(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
