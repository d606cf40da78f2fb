use thiserror::Error;

use crate::mail::TransportError;
use crate::repo::AccessState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("not found: {0}")]
    NotFound(String),

    /// The eprint is Open Access; the request button is never offered for it.
    #[error("eprint {0} is open access and cannot be requested")]
    NotRequestable(String),

    #[error("the fair dealing statement must be accepted before a request is made")]
    AttestationRequired,

    #[error("invalid email address: {0:?}")]
    InvalidAddress(String),

    #[error("unknown decision token")]
    UnknownToken,

    #[error("request {request_id} was already {recorded}")]
    DecisionConflict { request_id: String, recorded: &'static str },

    #[error("actor {actor:?} may not change access from {from:?} to {to:?}")]
    ForbiddenTransition { actor: String, from: AccessState, to: AccessState },

    #[error("invalid period: start is after end")]
    InvalidPeriod,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("template error: {0}")]
    Template(String),

    #[error(transparent)]
    Transport(#[from] TransportError),

    #[error("storage error: {0}")]
    Storage(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Storage(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Storage(err.to_string())
    }
}

impl From<minijinja::Error> for Error {
    fn from(err: minijinja::Error) -> Self {
        Error::Template(err.to_string())
    }
}
