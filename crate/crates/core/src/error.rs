use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("data error: {0}")]
    Data(String),

    /// The gradient vanished, so the linear minimization oracle has no unique answer.
    /// Callers treat the current point as optimal.
    #[error("degenerate gradient: the linear minimization oracle is undefined at a zero gradient")]
    DegenerateGradient,

    #[error("backtracking did not accept a constant after {0} doublings")]
    BacktrackingCap(usize),

    #[error("objective returned a non-finite value")]
    NonFinite,

    #[error("suboptimality {0:e} is negative beyond tolerance; the supplied optimal value is inconsistent")]
    FstarInconsistent(f64),

    #[error("Frank-Wolfe gap {gap:e} is negative at iteration {iteration}")]
    NegativeGap { iteration: usize, gap: f64 },

    #[error("iterate {iteration} left the feasible set")]
    InfeasibleIterate { iteration: usize },

    #[error("step strategy failed at iteration {iteration}: {source}")]
    Strategy {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found })
        }
    }
}
