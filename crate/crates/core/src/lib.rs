//! Weighted mean-difference tests for partially paired two-group data.
//!
//! Subjects may have both measurements, only the group-1 measurement, or
//! only the group-2 measurement. Under MCAR, the weighted mean difference
//! combines complete and incomplete blocks with weights in `[0, 1]`; the
//! variance-minimizing weight has a closed form on the unit square.

pub mod baseline;
pub mod bootstrap;
pub mod cli;
pub mod error;
pub mod method;
pub mod sample;
pub mod sim;
pub mod stats;
pub mod weights;
pub mod wmd;

pub use error::{Error, ErrorClass, Result};
pub use method::{Method, SeMode};
pub use sample::{
    summarize, validate, MissingPattern, Moments, PartiallyPairedSample, SummaryStats,
};
pub use weights::{optimal_weights, OptimalWeightSolution, WeightKind, WeightPair, WeightStrategy};
pub use wmd::{
    analytic_power, asymptotic_variance, estimate_d, test, PowerParams, SeMethod, TestResult,
};
