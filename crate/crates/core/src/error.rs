use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mesh generation failed: {0}")]
    GenerationFailure(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("mesh validation failed: {0}")]
    Validation(String),

    #[error("source compatibility violated: integral {integral:.3e} exceeds tolerance {tolerance:.3e}")]
    Compatibility { integral: f64, tolerance: f64 },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("solver did not converge: relative residual {residual:.3e} > {tolerance:.3e}")]
    Convergence { residual: f64, tolerance: f64 },

    #[error("point ({0}, {1}) lies on the interface where the source is undefined")]
    UndefinedPoint(f64, f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{context}: {source}")]
    Annotated {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn annotate(self, context: impl Into<String>) -> Self {
        Error::Annotated {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for failures of the numerical pipeline (solver breakdown,
    /// non-convergence, incompatible data) as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Solver(_)
            | Error::Convergence { .. }
            | Error::Compatibility { .. }
            | Error::GenerationFailure(_)
            | Error::Internal(_) => true,
            Error::Annotated { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
