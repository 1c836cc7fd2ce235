use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("symmetry order N must be at least 2, got {0}")]
    InvalidOrder(usize),

    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),

    #[error("expected {expected} couplings for N = {n}, got {got}")]
    CouplingLength { n: usize, expected: usize, got: usize },

    #[error("coupling vector contains a non-finite entry")]
    NonFiniteCoupling,

    #[error("{what} {index} out of range 0..{bound}")]
    OutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("lattice must be at least 2x2, got {width}x{height}")]
    LatticeTooSmall { width: usize, height: usize },

    #[error("schedule field `{0}` must be positive")]
    InvalidSchedule(&'static str),

    #[error("winding histogram has no measurements")]
    EmptyHistogram,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("sector probabilities have zero total")]
    ZeroTotal,

    #[error("instance too large for exact enumeration: {0}")]
    TooLarge(String),

    #[error("not a valid density matrix: {0}")]
    NotAState(String),

    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    #[error("degenerate design matrix in least-squares fit")]
    DegenerateFit,

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
}
