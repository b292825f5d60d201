use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown layer `{name}` at line {line}")]
    UnknownLayer { name: String, line: usize },

    #[error("cycle detected through layer `{0}`")]
    Cycle(String),

    #[error("strategy not applicable: {0}")]
    StrategyNotApplicable(String),

    #[error("routing impossible between fabric vertices {from} and {to}")]
    RoutingImpossible { from: usize, to: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
