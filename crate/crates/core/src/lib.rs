//! Forward solves and order recovery for time-fractional systems of
//! pseudo-differential equations, built on a Mittag-Leffler evaluator.

// NaN must fail validation, so negated comparisons are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod forward;
pub mod inverse;
pub mod mlfunc;
pub mod quad;
pub mod special;
pub mod symbol;

pub use error::{Error, ErrorClass, Result};
pub use forward::{BandLimitedData, DataPreset, DerivativeKind, ObservationRecord, VectorOrder};
pub use inverse::{Certificate, Inverse, RecoveryResult, SuggestedTime, Tolerances};
pub use mlfunc::{MittagLeffler, MlPolicy};
pub use symbol::{ConditionReport, Diagonalization, FrequencyBox, MatrixSymbol};
