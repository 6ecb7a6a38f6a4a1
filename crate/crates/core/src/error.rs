use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate source: {0}")]
    DegenerateSource(String),

    #[error("integration did not converge on [{lo}, {hi}]: estimated error {residual:e} after {evaluations} evaluations")]
    Integration {
        lo: f64,
        hi: f64,
        residual: f64,
        evaluations: usize,
    },

    /// The code-length solver ran out of iterations. Carries the best iterate.
    #[error("code-length solver did not converge: residual {residual:e} after {iterations} iterations")]
    Solver {
        best: Vec<f64>,
        residual: f64,
        iterations: usize,
    },

    #[error("did not converge: {0}")]
    Convergence(String),

    #[error("age of information is undefined: mean cycle length E[L+Z] is zero")]
    DegenerateAoi,

    #[error("{context}: {source}")]
    Combination {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// The underlying error beneath any combination context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Combination { source, .. } => source.root(),
            e => e,
        }
    }

    /// Whether the error stems from bad input rather than a failed computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self.root(),
            Error::Parameter(_) | Error::Config(_) | Error::DegenerateSource(_)
        )
    }

    /// Wraps an error with the sweep combination that produced it.
    pub(crate) fn in_combination(self, context: impl Into<String>) -> Self {
        Error::Combination {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
