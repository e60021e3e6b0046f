use num_complex::Complex64;

/// Errors produced by the estimation routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Root finding did not reach the requested residual; carries the best
    /// iterates found so far.
    #[error("root finding did not converge (max residual {max_residual:.3e})")]
    RootFinding {
        max_residual: f64,
        best: Vec<Complex64>,
    },

    /// Numerical rank of a matrix fell below the model order.
    #[error("rank collapse: numerical rank {rank} < model order {needed}")]
    RankCollapse { rank: usize, needed: usize },

    #[error("linear algebra backend failure: {0}")]
    Backend(String),

    /// Fewer nonempty histogram bins than nodes; dealiasing cannot proceed.
    #[error("dealiasing failed: only {nonempty} nonempty bins for {needed} nodes")]
    TooFewBins { nonempty: usize, needed: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
