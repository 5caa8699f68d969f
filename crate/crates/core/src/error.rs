use thiserror::Error;

/// Errors produced by the network, operator, algorithm and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("perron iteration stalled after {0} iterations")]
    PerronStalled(usize),

    #[error("power iteration did not converge within {0} iterations")]
    PowerIterationCap(usize),

    #[error("nonpositive weight {value} at index {index}")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("degenerate constraint matrix")]
    DegenerateConstraint,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph is not strongly connected")]
    NotStronglyConnected,

    #[error("no informative samples")]
    NoInformativeSamples,

    #[error("claimed fixed point #{index} has residual {residual:e}")]
    NotAFixedPoint { index: usize, residual: f64 },

    #[error("no admissible stepsize")]
    NoAdmissibleStepsize,

    #[error("oracle requires separable-in-Ex form")]
    NotSeparable,

    #[error("insufficient points for rate fit: {got} < {need}")]
    InsufficientPoints { got: usize, need: usize },

    #[error("operator has no fixed-point distance attached")]
    MissingFixDistance,

    #[error("malformed edge list at line {line}: {msg}")]
    EdgeListParse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
