//! Jump-process specifications, assumption checks, elementary
//! construction, generators and the constants ledger.

pub mod assumptions;
pub mod config;
pub mod elementary;
pub mod ledger;
pub mod operators;
pub mod process;
pub mod rate;

pub use assumptions::{check_assumptions, AssumptionReport, Verdict};
pub use elementary::{build_elementary, ElementaryProcess};
pub use ledger::{constants_ledger, ConstantsLedger};
pub use operators::{
    apply_generator, apply_reduced_generator, delta, delta2, newton_remainder_e2, TruncatedModel,
};
pub use process::{drift_field, jacobian_at_equilibrium, local_covariance, ProcessSpec};
pub use rate::{MassAction, RateFunction, Saturating, SmoothRate};
