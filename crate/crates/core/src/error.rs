use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric: max asymmetry {asymmetry:e} exceeds {allowed:e}")]
    NotSymmetric { asymmetry: f64, allowed: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("symmetric eigen-solver did not converge within {iterations} iterations")]
    EigenNoConvergence { iterations: usize },

    #[error("invalid tolerance {0:e}: must be positive and finite")]
    InvalidTolerance(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid scalar kernel: {0}")]
    InvalidScalarKernel(String),

    #[error("coefficient matrix {term} is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    CoefficientNotPsd { term: usize, min_eigenvalue: f64 },

    #[error("coefficient matrix {term} has dimension {got}, kernel output dimension is {expected}")]
    CoefficientDimension { term: usize, expected: usize, got: usize },

    #[error("a separable kernel needs at least one term")]
    EmptyKernel,

    #[error("centers {first} and {second} coincide (distance {distance:e})")]
    DuplicateCenters { first: usize, second: usize, distance: f64 },

    #[error("negative exponent {0} for a kernel power")]
    NegativeExponent(i64),

    #[error("Gramian factorization failed for a strictly positive definite kernel (min eigenvalue estimate {min_eigenvalue:e})")]
    Conditioning { min_eigenvalue: f64 },

    #[error("numerical breakdown: {quantity} = {value:e} is negative beyond tolerance")]
    NumericalBreakdown { quantity: &'static str, value: f64 },

    #[error("kernel of the target function differs from the kernel of the interpolant")]
    KernelMismatch,

    #[error("Gramian has a negative eigenvalue {0:e} above the rank threshold; kernel is not positive semi-definite")]
    IndefiniteGramian(f64),

    #[error("matrix family does not commute: pair ({first}, {second}) has relative commutator {residual:e}")]
    NotCommuting { first: usize, second: usize, residual: f64 },

    #[error("sampled kernel values are not value-symmetric: k(x,y) != k(y,x) at sample {sample} (deviation {deviation:e})")]
    NotValueSymmetric { sample: usize, deviation: f64 },

    #[error("ambiguous proportionality grouping between diagonal entries {first} and {second} (distance {distance:e})")]
    AmbiguousGrouping { first: usize, second: usize, distance: f64 },

    #[error("ambiguous term matching: term {term} has several candidates within tolerance")]
    AmbiguousMatching { term: usize },

    #[error("invalid grid configuration: {0}")]
    InvalidGrid(String),

    #[error("all {failures} grid candidates failed to fit")]
    AllCandidatesFailed { failures: usize },

    #[error("too many grid candidates: {count} exceeds cap {cap}")]
    TooManyCandidates { count: usize, cap: usize },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error in {source_name}: {message}")]
    Parse { source_name: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
