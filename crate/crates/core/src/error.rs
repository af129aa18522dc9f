use thiserror::Error;

/// Everything that can go wrong while building or running a walk.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("unsupported coin dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("coin parameter rho = {0} outside [-1, 1] \\ {{0}}")]
    InvalidRho(f64),

    #[error("matrix is not unitary: max |U^dag U - I| entry deviation {max_deviation:.3e} (tolerance {tolerance:.0e})")]
    NonUnitary { max_deviation: f64, tolerance: f64 },

    #[error("{shift} shift requires a {expected}-dimensional coin, got {actual}")]
    DimensionMismatch {
        shift: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("vector is not normalized: norm^2 = {0}")]
    NotNormalized(f64),

    #[error("brute-force enumeration limited to {max} steps, got {requested}")]
    TooManySteps { requested: usize, max: usize },

    #[error("record stride must be at least 1")]
    InvalidStride,

    #[error("probability {value:e} at position {position} is negative beyond roundoff")]
    NegativeProbability { position: i64, value: f64 },

    #[error("probabilities sum to {0}, expected 1")]
    BadTotal(f64),

    #[error("k-grid needs an even number of points >= 64, got {0}")]
    InvalidGrid(usize),

    #[error("eigen-decomposition failed at k = {0}")]
    EigenFailure(f64),

    #[error("band tracking ambiguous at k = {k}: best eigenvector overlap {overlap:.3}")]
    AmbiguousBand { k: f64, overlap: f64 },

    #[error("moment order {0} not supported (expected 1..=4)")]
    UnsupportedMomentOrder(u32),

    #[error("velocity histogram needs at least 32 bins, got {0}")]
    TooFewBins(usize),

    #[error("velocity {v} outside the open support (-{limit}, {limit})")]
    OutsideSupport { v: f64, limit: f64 },

    #[error("parameter out of range: {0}")]
    InvalidParameter(String),

    #[error("occupancy threshold delta = {delta} outside (0, {range}]")]
    InvalidDelta { delta: f64, range: u64 },

    #[error("step law probabilities ({0}, {1}, {2}) must be non-negative and sum to 1")]
    InvalidStepLaw(f64, f64, f64),

    #[error("time {0} too small for the asymptotic formula (need 8t > pi)")]
    TimeTooSmall(u64),

    #[error("metric series times must be strictly increasing ({prev} then {next})")]
    NonIncreasingTime { prev: u64, next: u64 },

    #[error("cannot parse coin description {0:?}")]
    BadCoinSpec(String),

    #[error("cannot parse complex literal {0:?}")]
    BadComplex(String),
}

pub type Result<T> = std::result::Result<T, WalkError>;
