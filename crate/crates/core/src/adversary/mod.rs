//! Attacks on Bell-measurement position verification.
//!
//! Adversaries sharing entanglement break the protocol outright
//! ([`simulate_epr_attack`]). Adversaries limited to local operations and
//! classical communication can at best steer the verifiers' photons into a
//! product state, and every such state costs at least a 1/4 error rate
//! ([`avg_error_rate`], [`minimize_avg_error`]).
//!
//! The post-selected family assumes the adversaries can always realize the
//! pure target state they want; results for it are a most-favourable bound,
//! not a proven-achievable attack.

mod analytic;
mod attack;
mod optimize;

pub use analytic::{avg_error_rate, error_rate_x, error_rate_z, predicted_rates, AnalyticRates, AttackState};
pub use attack::{simulate_epr_attack, simulate_locc_attack, AttackError, AttackReport, LoccStrategy, Placement};
pub use optimize::{
    grid_minimum, minimize_avg_error, minimize_avg_error_seeded, GridMinimum, Minimum, OptimizeError, DEFAULT_START_SEED,
};
