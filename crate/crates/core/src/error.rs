use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("exponent m must be a finite real >= 1, got {0}")]
    InvalidExponent(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("sampling acceptance rate {rate:.3e} below the 1e-4 floor")]
    LowAcceptance { rate: f64 },

    #[error("root finder failed to converge (bracket [{lo}, {hi}])")]
    RootFinding { lo: f64, hi: f64 },

    #[error("quadrature did not reach tolerance; last estimate {estimate}")]
    Quadrature { estimate: f64 },

    #[error("point lies strictly below the graph (t = {t}, phi = {phi})")]
    BelowGraph { t: f64, phi: f64 },

    #[error("planar point ({x}, {y}) is outside the graph domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("unknown surface `{0}`")]
    UnknownSurface(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
