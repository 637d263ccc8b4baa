use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("{what} = {requested} exceeds the configured limit of {limit}")]
    Capacity {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("posterior mass is numerically zero for every model")]
    DegenerateWeights,

    #[error("correlation undefined: {0}")]
    DegenerateCorrelation(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("truncation infeasible: acceptance probability {0:e} is below 1e-6")]
    InfeasibleTruncation(f64),

    #[error(
        "quadrature bounds [{lower}, {upper}] do not cover the required range [{need_lower}, {need_upper}]"
    )]
    Coverage {
        lower: f64,
        upper: f64,
        need_lower: f64,
        need_upper: f64,
    },

    #[error("row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the `rbf` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity { .. } => 4,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}
