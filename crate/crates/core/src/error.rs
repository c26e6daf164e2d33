use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid edge: {0}")]
    InvalidEdge(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid graph configuration: {0}")]
    InvalidGraph(String),

    #[error("generator index {index} out of range for rank {rank}")]
    GeneratorOutOfRange { index: usize, rank: usize },

    #[error("word is not reduced at position {0}")]
    NonReducedWord(usize),

    #[error("point x = {x} outside edge [0, {length}]")]
    OutOfRange { x: f64, length: f64 },

    #[error("lambda = {0} is exceptional (S_m(l_m, lambda) vanishes for some edge type)")]
    Exceptional(Complex64),

    #[error("near-zero divisor in {0}")]
    NearZeroDivisor(&'static str),

    #[error("degenerate leading coefficient: lambda lies in the leading-coefficient zero set")]
    DegenerateLeading,

    #[error("operation requires rank {expected}, got {actual}")]
    RankMismatch { expected: usize, actual: usize },

    #[error("no multiplier candidate survived the filters at lambda = {0}")]
    NoCandidate(Complex64),

    #[error("continuation stalled near lambda = {0}")]
    PathStall(Complex64),

    #[error("invalid continuation path: {0}")]
    InvalidPath(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no spectral band found below {0}")]
    NoBandFound(f64),

    #[error("truncated tree dimension {0} exceeds the size cap")]
    SizeCap(usize),

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
