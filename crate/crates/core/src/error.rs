use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("drift matrix is not Hurwitz (max real part of spectrum {max_real_part:e})")]
    Stability { max_real_part: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {lambda_min:e})")]
    Definiteness { lambda_min: f64 },

    #[error("numerical failure in {context}: residual {residual:e}")]
    Numerical {
        context: &'static str,
        residual: f64,
    },

    #[error("covariance factorization failed: residual {residual:e}")]
    Factorization { residual: f64 },

    #[error("problem too large: {0}")]
    Scale(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("chain is reducible: {} communicating classes", classes.len())]
    Reducible { classes: Vec<Vec<usize>> },

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
