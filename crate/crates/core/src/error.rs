use thiserror::Error;

/// Errors raised by the frame toolkit.
///
/// Variants fall into three groups, see [`ErrorClass`]: malformed input,
/// violated mathematical preconditions, and internal certificate failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid weight function: {0}")]
    InvalidWeight(String),
    #[error("invalid subspace: {0}")]
    InvalidSubspace(String),
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("operator is not Hermitian (deviation {deviation:e} > {tol:e})")]
    NotHermitian { deviation: f64, tol: f64 },
    #[error("operator is not positive (min eigenvalue {min_eig:e} < -{tol:e})")]
    NotPositive { min_eig: f64, tol: f64 },
    #[error("operator is not positive definite (min eigenvalue {min_eig:e} < {tol:e})")]
    NotPositiveDefinite { min_eig: f64, tol: f64 },
    #[error("pencil denominator is the zero operator")]
    ZeroDenominator,
    #[error("frame functional is not real (imaginary part {imag:e})")]
    NonRealFunctional { imag: f64 },
    #[error("frame operator is not Hermitian (deviation {deviation:e} > {tol:e})")]
    NonHermitianFrameOperator { deviation: f64, tol: f64 },
    #[error("frame operator is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPositiveSemidefinite { min_eig: f64 },
    #[error("block of atom {atom} is not Hermitian positive semidefinite: {reason}")]
    NonPositiveBlock { atom: usize, reason: String },
    #[error("operator is not invertible (inverse condition {rcond:e})")]
    NotInvertible { rcond: f64 },
    #[error("{left} does not commute with {right} (defect {defect:e})")]
    CommutationViolated {
        left: &'static str,
        right: &'static str,
        defect: f64,
    },
    #[error("target operator is zero")]
    ZeroOperator,
    #[error("range of the transfer operator is not contained in the range of K")]
    RangeNotContained,
    #[error("families live on different measure spaces: {0}")]
    MeasureMismatch(String),
    #[error("hypothesis violated: {which} (defect {defect:e})")]
    HypothesisViolated { which: &'static str, defect: f64 },
    #[error("family is not a frame for the requested target")]
    NotAFrame,

    #[error("equivalent predicates disagree: {0}")]
    EquivalenceViolation(String),
    #[error("certificate check failed: {0}")]
    CertificateFailed(String),
}

/// Coarse classification used to map errors onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Precondition,
    Internal,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            DimensionMismatch(_) | NonFinite(_) | InvalidInterval { .. } | InvalidMeasure(_)
            | InvalidWeight(_) | InvalidSubspace(_) | InvalidSpec(_) | MeasureMismatch(_) => {
                ErrorClass::Input
            }
            EquivalenceViolation(_) | CertificateFailed(_) => ErrorClass::Internal,
            _ => ErrorClass::Precondition,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
