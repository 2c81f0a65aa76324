use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, QmError>;

/// One violated invariant found by [`crate::linalg::validate_density`].
#[derive(Debug, Clone, PartialEq)]
pub enum DensityViolation {
    Trace { trace: f64 },
    NonHermitian { residual: f64 },
    NegativeEigenvalue { min: f64 },
}

impl fmt::Display for DensityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityViolation::Trace { trace } => write!(f, "trace {trace} != 1"),
            DensityViolation::NonHermitian { residual } => {
                write!(f, "not Hermitian (residual {residual:e})")
            }
            DensityViolation::NegativeEigenvalue { min } => {
                write!(f, "negative eigenvalue {min:e}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QmError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator must be square and non-empty, got {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },

    #[error("operator is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("invalid density operator: {}", join(.0))]
    InvalidDensity(Vec<DensityViolation>),

    #[error("operator has eigenvalue {min:e} below the positivity tolerance")]
    NotPositive { min: f64 },

    #[error("vector norm {norm} is not 1")]
    NotNormalized { norm: f64 },

    #[error("invalid outcome space: {0}")]
    InvalidOutcomeSpace(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid instrument: {0}")]
    InvalidInstrument(String),

    #[error("unknown outcome label {0:?}")]
    UnknownOutcome(String),

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("site {site} out of range for lattice with {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("spin must be a positive half-integer, got 2j = {two_j}")]
    InvalidSpin { two_j: u32 },

    #[error("rotation axis must be a unit vector, got norm {norm}")]
    BadAxis { norm: f64 },

    #[error("mass must be positive, got {0}")]
    InvalidMass(f64),

    #[error("step count must be at least 1")]
    InvalidSteps,

    #[error("{what} exceeds size guard: {size} > {limit}")]
    SizeGuard { what: &'static str, size: usize, limit: usize },

    #[error("factor index {index} out of range for {factors} factors")]
    BadFactor { index: usize, factors: usize },

    #[error("invalid transposition ({i}, {j}) for {n} particles")]
    BadTransposition { i: usize, j: usize, n: usize },

    #[error("charge operator is not integer-diagonal: {0}")]
    InvalidCharge(String),

    #[error("composite layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("window family is not nested at row {row}")]
    NonNestedFamily { row: usize },

    #[error("field model unbounded: sqrt(2)*u = {a}, sqrt(2)*v = {b}")]
    Unbounded { a: f64, b: f64 },

    #[error("numerical check failed: {0}")]
    Numerical(String),
}

fn join(v: &[DensityViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
