//! Acceptance suite. The checks live in `clf_core::harness::verify`; this
//! crate hosts the `acceptance` test target, which prints one PASS/FAIL line
//! per criterion and fails if any criterion fails.

pub use clf_core::harness::verify::{run_all, CriterionResult};

/// Seed of the randomized criteria in the acceptance target.
pub const ACCEPTANCE_SEED: u64 = 0;
