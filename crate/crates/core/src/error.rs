use thiserror::Error;

/// Errors raised across the meshing and inversion pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("mesh topology error: {0}")]
    Topology(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("numerical failure in {context} at iteration {iteration}")]
    Numerical {
        context: &'static str,
        iteration: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for failures of the numerical kernels (used by the CLI exit code).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical { .. } | Error::Factorization(_) => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Stage { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        })
    }
}
