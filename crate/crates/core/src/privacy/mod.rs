//! The private learner oracle: a pure ε-DP exponential-mechanism learner over
//! a finite class, an exact privacy auditor, and PAC sample-complexity tools.

mod audit;
mod exponential;
mod sample_complexity;

pub use audit::{
    audit_privacy, exhaustive_group_audit, exhaustive_neighbor_audit, ExhaustiveAudit,
    PrivacyAuditReport,
};
pub use exponential::{
    exponential_mechanism_distribution, exponential_mechanism_log_distribution, train,
    ExponentialMechanism, LearnerOracle, PrivacyParams, DEFAULT_EPSILON,
};
pub use sample_complexity::{
    calibrate_sample_complexity, pac_validate, random_realizable_distribution,
    sample_complexity_formula, Calibration, CalibrationCache, CalibrationOptions, LearningParams,
    PacEstimate,
};
