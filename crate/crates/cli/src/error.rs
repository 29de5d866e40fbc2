use certsa_core::Error;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    /// 2 for configuration and input problems, 3 for numerical failures,
    /// 4 for an infeasible budget.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

fn core_exit_code(e: &Error) -> i32 {
    match e {
        Error::InfeasibleRounding { .. } => 4,
        Error::TrainingFailed { source, .. } | Error::SampleFailed { source, .. } => core_exit_code(source),
        Error::InvalidDiscretization(_)
        | Error::InvalidParameter(_)
        | Error::InvalidArgument(_)
        | Error::BasisFormat(_)
        | Error::Csv(_)
        | Error::Io(_) => 2,
        Error::SolverDiverged { .. }
        | Error::RankDeficient { .. }
        | Error::BoundBlowup { .. }
        | Error::DegenerateVariance
        | Error::DenominatorStraddlesZero { .. }
        | Error::FitFailed(_) => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::from(Error::DegenerateVariance).exit_code(), 3);
        let nested = Error::SampleFailed {
            index: 3,
            source: Box::new(Error::SolverDiverged { step: 1, reason: "nan".into() }),
        };
        assert_eq!(CliError::from(nested).exit_code(), 3);
        let infeasible = Error::InfeasibleRounding { target: 0.1, reason: String::new() };
        assert_eq!(CliError::from(infeasible).exit_code(), 4);
    }
}
