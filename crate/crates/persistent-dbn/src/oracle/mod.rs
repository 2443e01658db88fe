//! Exact baselines that do not use the changepoint transformation.
//!
//! These exist to ground-truth the message engine and to quantify what the
//! transformation buys. [`enumerate_changepoint_posteriors`] and
//! [`enumerate_binary_dbn_posteriors`] brute-force the posterior from the
//! transformed and the raw representation respectively; their mutual
//! agreement checks the transformation, and their agreement with
//! [`crate::smooth`] checks the message recurrences.
//! [`ve_exact_unrolled`] is the strongest baseline that scales past toy
//! sizes: exact variable elimination on the unrolled network, with an
//! explicit factor-entry budget so hopeless networks abort instead of
//! thrashing.

pub mod enumerate;
pub mod factor;
pub mod ve;

pub use enumerate::{
    enumerate_binary_dbn_posteriors, enumerate_changepoint_posteriors, EnumerationResult,
    DEFAULT_ENUM_BUDGET,
};
pub use factor::FactorTable;
pub use ve::{ve_exact_unrolled, VeOptions, VeResult, VeTargets, DEFAULT_VE_BUDGET};
