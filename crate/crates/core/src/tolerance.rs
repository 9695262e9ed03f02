//! Numerical tolerances shared by every module.
//!
//! All checks in the crate read their thresholds from here so that a single
//! edit retunes the whole toolkit.

/// Unit-norm check for complex vectors and unit-trace check for states.
pub const NORMALIZATION: f64 = 1e-12;

/// Hermiticity check, entrywise.
pub const HERMITIAN: f64 = 1e-12;

/// Smallest admissible eigenvalue for positive semidefinite operators (negated).
pub const PSD: f64 = 1e-10;

/// Algebraic operator identities (POVM completeness, unitarity, operator equality).
pub const IDENTITY: f64 = 1e-10;

/// Slack granted to points on the boundary of the joint-measurability region.
pub const MEMBERSHIP: f64 = 1e-10;

/// Bisection stops once the bracket on the threshold is this narrow.
pub const BISECTION: f64 = 1e-12;

/// Allowed backwards step of p(t) when verifying monotonicity numerically.
pub const MONOTONE_SLACK: f64 = 1e-13;

/// Monte-Carlo agreement threshold, in standard errors.
pub const MC_SIGMAS: f64 = 5.0;

/// Efficiency calibration threshold of perturbed response families, in standard errors.
pub const CALIBRATION_SIGMAS: f64 = 3.0;

/// Probabilities below this are treated as structural zeros by goodness-of-fit tests.
pub const ZERO_PROBABILITY: f64 = 1e-12;
