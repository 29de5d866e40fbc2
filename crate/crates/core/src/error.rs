use thiserror::Error;

/// Errors raised by the solvers, the estimators and the budget optimizer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solver diverged at step {step}: {reason}")]
    SolverDiverged { step: usize, reason: String },

    #[error("training point {index} ({nu}, {u0m}) failed: {source}")]
    TrainingFailed {
        index: usize,
        nu: f64,
        u0m: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("sample {index} failed: {source}")]
    SampleFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("snapshot matrix has only {available} significant singular values, {requested} requested")]
    RankDeficient { requested: usize, available: usize },

    #[error("certified bound exceeded cap {cap:e} at step {step} (value {value:e})")]
    BoundBlowup { step: usize, value: f64, cap: f64 },

    #[error("output variance is numerically zero")]
    DegenerateVariance,

    #[error("variance enclosure [{lo:e}, {hi:e}] contains zero; index bounds are unbounded")]
    DenominatorStraddlesZero { lo: f64, hi: f64 },

    #[error("precision model fit failed: {0}")]
    FitFailed(String),

    #[error("no basis size reaches precision {target}: {reason}")]
    InfeasibleRounding { target: f64, reason: String },

    #[error("basis file: {0}")]
    BasisFormat(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::BasisFormat(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
