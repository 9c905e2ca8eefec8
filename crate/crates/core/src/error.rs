use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("grid dimension mismatch: expected {expected_m}x{expected_n}, got {got_m}x{got_n}")]
    DimensionMismatch {
        expected_m: usize,
        expected_n: usize,
        got_m: usize,
        got_n: usize,
    },

    #[error("no common tangent: {0}")]
    NoTangent(String),

    #[error("singular local system at cell ({i}, {j}), determinant {det:e}")]
    SingularLocalSystem { i: usize, j: usize, det: f64 },

    /// The V-cycle loop hit its cycle limit. `history` holds the residual
    /// norm after every cycle that was run.
    #[error("multigrid did not reach tolerance {tol:e} within {cycles} V-cycles (last residual {last:e})", last = history.last().copied().unwrap_or(f64::NAN))]
    NotConverged {
        tol: f64,
        cycles: usize,
        history: Vec<f64>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
