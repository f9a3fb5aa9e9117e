use thiserror::Error;

/// Errors raised across the solver, simulator and configuration layers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("violated assumption at {location}: {detail}")]
    ViolatedAssumption { location: String, detail: String },

    #[error("not positive semidefinite at {location}: {detail}")]
    NotPsd { location: String, detail: String },

    #[error("problem is neither standard nor singular: {0}")]
    NeitherCase(String),

    #[error("hamiltonian is not coercive on the cone: {0}")]
    NonCoercive(String),

    #[error("convexity certificate violated: {0}")]
    ConvexityViolated(String),

    #[error("riccati flow exceeded the blow-up ceiling {ceiling:e} at node {node}")]
    BlowUp { node: usize, ceiling: f64 },

    #[error("solution invariant violated: {0}")]
    InvariantViolation(String),

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("degenerate dual: N0*exp(-2*int r) = {ratio} is not below 1")]
    DegenerateDual { ratio: f64 },

    #[error("infeasible target z = {z}: must be at least {minimum}")]
    InfeasibleTarget { z: f64, minimum: f64 },

    #[error("market is infeasible (excess-return integral {integral:e})")]
    InfeasibleMarket { integral: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("schema error at `{key}`: {detail}")]
    Schema { key: String, detail: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

impl Error {
    /// Process exit code for the command-line driver; distinct per variant.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::VerificationFailed(_) => 1,
            Error::Parse(_) => 2,
            Error::Schema { .. } => 3,
            Error::ViolatedAssumption { .. } => 4,
            Error::NotPsd { .. } => 5,
            Error::NeitherCase(_) => 6,
            Error::OutOfRange(_) => 7,
            Error::InvalidInput(_) => 8,
            Error::NonCoercive(_) => 9,
            Error::ConvexityViolated(_) => 10,
            Error::BlowUp { .. } => 11,
            Error::InvariantViolation(_) => 12,
            Error::NonFinite { .. } => 13,
            Error::DegenerateDual { .. } => 14,
            Error::InfeasibleTarget { .. } => 15,
            Error::InfeasibleMarket { .. } => 16,
            Error::Io(_) => 17,
        }
    }

    /// Short variant name, used in verification reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OutOfRange(_) => "OutOfRange",
            Error::ViolatedAssumption { .. } => "ViolatedAssumption",
            Error::NotPsd { .. } => "NotPSD",
            Error::NeitherCase(_) => "NeitherCase",
            Error::NonCoercive(_) => "NonCoercive",
            Error::ConvexityViolated(_) => "ConvexityViolated",
            Error::BlowUp { .. } => "BlowUp",
            Error::InvariantViolation(_) => "InvariantViolation",
            Error::NonFinite { .. } => "NonFinite",
            Error::DegenerateDual { .. } => "DegenerateDual",
            Error::InfeasibleTarget { .. } => "InfeasibleTarget",
            Error::InfeasibleMarket { .. } => "InfeasibleMarket",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Parse(_) => "ParseError",
            Error::Schema { .. } => "SchemaError",
            Error::Io(_) => "Io",
            Error::VerificationFailed(_) => "VerificationFailed",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
