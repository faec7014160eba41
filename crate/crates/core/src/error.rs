use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("degree {degree} exceeds available truncation {available}")]
    DegreeOverflow { degree: usize, available: usize },
    #[error("total mass m(0) = {0} is negative")]
    NegativeMass(String),
    #[error("moment for multi-index {0:?} is missing")]
    MissingMoment(Vec<u32>),
    #[error("moment for multi-index {0:?} given more than once")]
    DuplicateMoment(Vec<u32>),
    #[error("matrix is not symmetric: |H[{row},{col}] - H[{col},{row}]| = {gap}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("diagonal even moment of order {order} on axis {axis} is negative ({value})")]
    NegativeEvenMoment { axis: usize, order: usize, value: f64 },
    #[error("sequence term {index} is not strictly positive ({value})")]
    NonPositiveTerm { index: usize, value: f64 },
    #[error("need at least {required} terms, have {available}")]
    InsufficientTerms { required: usize, available: usize },
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("sequence is not non-increasing at index {0}")]
    NotDecreasing(usize),
    #[error("tail sum at index {0} is not computable")]
    TailNotComputable(usize),
    #[error("sequence is quasi-analytic; a compactly supported bump needs a non-quasi-analytic bound sequence")]
    SequenceIsQuasiAnalytic,
    #[error("quasi-analyticity of the bound sequence is inconclusive")]
    ClassificationInconclusive,
    #[error("tensor order {order} exceeds max order {max_order}")]
    OrderOverflow { order: usize, max_order: usize },
    #[error("objects live on different grids")]
    GridMismatch,
    #[error("dense tensor of order {order} would hold {entries} entries (limit {limit})")]
    TensorTooLarge { order: usize, entries: u128, limit: usize },
    #[error("tensor of order {0} is not symmetric under coordinate permutations")]
    NotSymmetricTensor(usize),
    #[error("atomic weights must be strictly positive (atom {index}: {value})")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("grid measure has a negative weight at cell {0}")]
    NegativeMeasure(usize),
    #[error("test function {0} takes a negative value")]
    NegativePhi(usize),
    #[error("density bound c must be positive, got {0}")]
    NonPositiveC(f64),
    #[error("moment sequence carries no density flag")]
    NoDensity,
    #[error("contraction of order {order} is negative ({value}); input is not a valid Radon moment sequence")]
    NegativeContraction { order: usize, value: f64 },
    #[error("weight function drops below 1 ({value} at {at:?})")]
    WeightBelowOne { value: f64, at: Vec<f64> },
    #[error("no bound supplied for order {0}")]
    MissingOrder(usize),
    #[error("lattice has {nodes} nodes on an axis, need at least {required}")]
    LatticeTooCoarse { nodes: usize, required: usize },
    #[error("sampled derivative of order {order} reaches {value}, above the bound {bound}")]
    DerivativeBoundViolated { order: usize, value: f64, bound: f64 },
    #[error("weight family not supported: {0}")]
    UnsupportedFamily(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
