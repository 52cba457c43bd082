use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad classes used by front ends to map failures onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// A numerical routine did not reach its accuracy target.
    Numeric,
    /// The model or its inputs are outside the supported domain.
    Domain,
    /// A precondition of the order-recovery problem is violated.
    InversePrecondition,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("series did not converge after {terms} terms (remainder bound {bound:e})")]
    NonConvergence { terms: usize, bound: f64 },

    #[error("argument z = {re}{im:+}i is not left of the Hankel contour with theta = {theta}")]
    ContourViolation { re: f64, im: f64, theta: f64 },

    #[error("contour quadrature did not stabilise (last change {change:e} with {nodes} nodes)")]
    QuadratureFailure { change: f64, nodes: usize },

    #[error("value is not representable in double precision: {0}")]
    Overflow(String),

    #[error("eigenvalue {index} = {re}{im:+}i violates |arg| > pi/2")]
    SpectralConditionViolation { index: usize, re: f64, im: f64 },

    #[error("eigenvalue {index} = {re}{im:+}i has |Re| = |Im|; the Riemann-Liouville sign is undefined")]
    DegenerateSignCondition { index: usize, re: f64, im: f64 },

    #[error("time {0} is not admissible here")]
    InvalidTime(f64),

    #[error("frequency {xi:?} lies outside the frequency box")]
    OutOfDomain { xi: Vec<f64> },

    #[error("frequency {xi:?} is not a node of the tabulation grid")]
    OffGrid { xi: Vec<f64> },

    #[error("symbol is not symmetric at {xi:?} (entry ({row},{col}) differs by {gap:e})")]
    NonSymmetric { xi: Vec<f64>, row: usize, col: usize, gap: f64 },

    #[error("symbol is not diagonalizable at {xi:?}: {reason}")]
    NotDiagonalizable { xi: Vec<f64>, reason: String },

    #[error("eigenvalues {first} and {second} coincide at {xi:?}; modes cannot be separated")]
    DegenerateEigenvalues { xi: Vec<f64>, first: usize, second: usize },

    #[error("mode matrix K is singular at the observation frequency (|det| = {det:e}, cond = {cond:e}); choose a frequency where det K != 0")]
    SingularK { det: f64, cond: f64 },

    #[error("target {index}: Re b = {value:e} lies outside the admissible range [{lower:e}, {upper:e}]")]
    RangeViolation { index: usize, value: f64, lower: f64, upper: f64 },

    #[error("target {index}: map values at the interval ends do not bracket {value:e}")]
    NoRoot { index: usize, value: f64 },

    #[error("target {index}: real part matched but complex residual {residual:e} exceeds {tolerance:e}")]
    InconsistentData { index: usize, residual: f64, tolerance: f64 },

    #[error("target {index}: monotonicity not certified at t0 = {t0} ({reason})")]
    MonotonicityNotCertified { index: usize, t0: f64, reason: String },

    #[error("no observation time up to {t_max:e} certifies monotonicity for eigenvalue {re}{im:+}i")]
    NoMonotoneTime { re: f64, im: f64, t_max: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            NonConvergence { .. } | QuadratureFailure { .. } | Overflow(_) | ContourViolation { .. } => {
                ErrorClass::Numeric
            }
            SpectralConditionViolation { .. }
            | DegenerateSignCondition { .. }
            | DegenerateEigenvalues { .. }
            | SingularK { .. }
            | RangeViolation { .. }
            | NoRoot { .. }
            | InconsistentData { .. }
            | MonotonicityNotCertified { .. }
            | NoMonotoneTime { .. } => ErrorClass::InversePrecondition,
            InvalidParameter { .. }
            | InvalidTime(_)
            | OutOfDomain { .. }
            | OffGrid { .. }
            | NonSymmetric { .. }
            | NotDiagonalizable { .. }
            | DimensionMismatch(_) => ErrorClass::Domain,
        }
    }

    /// Re-labels a per-target error with the index of the offending mode.
    pub fn at_index(self, l: usize) -> Self {
        use Error::*;
        match self {
            SpectralConditionViolation { re, im, .. } => SpectralConditionViolation { index: l, re, im },
            DegenerateSignCondition { re, im, .. } => DegenerateSignCondition { index: l, re, im },
            RangeViolation { value, lower, upper, .. } => RangeViolation { index: l, value, lower, upper },
            NoRoot { value, .. } => NoRoot { index: l, value },
            InconsistentData { residual, tolerance, .. } => InconsistentData { index: l, residual, tolerance },
            MonotonicityNotCertified { t0, reason, .. } => MonotonicityNotCertified { index: l, t0, reason },
            other => other,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
