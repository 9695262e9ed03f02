//! Joint-measurability region of noisy projective measurements with finite
//! detection efficiency.
//!
//! A pair `(eta, p)` of efficiency and visibility is jointly measurable for all
//! bases in dimension `d` when it lies under the boundary curve traced by a
//! threshold response on a covariant parent measurement. The crate evaluates
//! that curve in closed form, estimates it by Monte Carlo, answers membership
//! queries, and reproduces noisy-PVM statistics classically.

pub mod closed_form;
pub mod error;
pub mod export;
pub mod measurement;
pub mod oracle;
pub mod precision;
pub mod region;
pub mod stats;
pub mod tolerance;
pub mod types;

pub use closed_form::{boundary_point, eval_a, eval_t, EvalMode};
pub use error::{Error, Result};
pub use measurement::{
    analytic_simulated_povm, make_noisy_pvm, simulate_measurement, NoisyPvm, OutcomeCounts,
    QuantumState,
};
pub use region::{eta_max, export_curve, is_jointly_measurable, BoundaryCurve, MembershipVerdict};
pub use types::{
    validate_povm, BoundarySample, ComplexUnitVector, Dimension, NoiseParams, OperatorMatrix,
    Outcome, Threshold,
};
