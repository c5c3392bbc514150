use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step size {name} = {value} outside admissible range {range}")]
    InadmissibleStep {
        name: &'static str,
        value: f64,
        range: String,
    },

    #[error("rejected schedule: {0}")]
    Schedule(String),

    #[error("initial point not admissible: {0}")]
    Infeasible(String),

    #[error("oracle residual {residual:e} above tolerance {tol:e} at iteration {iteration}: {what}")]
    OracleResidual {
        iteration: usize,
        what: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("linear system is singular: {0}")]
    Singular(String),

    #[error("operator evaluation failed: {0}")]
    Evaluation(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
