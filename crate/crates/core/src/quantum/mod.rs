//! Exact pure-state arithmetic for one and two photons, BB84 preparation,
//! scalar channel and detector models, and the Bell-state analyzer.

mod bell;
mod channel;
mod register;
mod state;

use thiserror::Error;

pub use bell::{bell_measure, bell_outcome_probs, BellOutcome, BellProbs, DetectorModel, OutcomeSet};
pub use channel::{apply_channel, ChannelModel};
pub use register::FourQubitState;
pub use state::{prepare_bb84, tensor, Basis, QubitState, TwoQubitState, NORM_TOLERANCE};

pub(crate) use bell::{bell_measure_lossy, dark_event, sample_index};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("state is not normalized (squared norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("{field} must lie in [0, 1], got {value}")]
    OutOfRange { field: &'static str, value: f64 },
    #[error("NoDetection cannot be a resolvable analyzer outcome")]
    NoDetectionNotResolvable,
}
