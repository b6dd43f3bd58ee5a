//! Measurement-device-independent sessions.
//!
//! Alice and Bob each prepare a random BB84 state and send it to an
//! untrusted relay that performs a Bell-state measurement and announces the
//! result. Basis-matched rounds with a Ψ± announcement are kept; Bob flips
//! his bit whenever the announced state is anti-correlated in the shared
//! basis (always in Z, only for Ψ⁻ in X).

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantum::{
    apply_channel, bell_measure_lossy, prepare_bb84, tensor, Basis, BellOutcome, ChannelModel, DetectorModel,
    QuantumError,
};
use crate::rng::{seeded, SimRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdiError {
    #[error("a session needs at least one round")]
    ZeroRounds,
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

/// A user's private choice for one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preparation {
    pub bit: bool,
    pub basis: Basis,
}

impl Preparation {
    pub fn new(bit: bool, basis: Basis) -> Self {
        Self { bit, basis }
    }

    /// Uniform bit and uniform basis.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let bit = rng.random::<bool>();
        let basis = Basis::from_bit(rng.random::<bool>());
        Self { bit, basis }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdiRound {
    pub alice: Preparation,
    pub bob: Preparation,
    pub announced: BellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MdiSessionConfig {
    pub rounds: u64,
    #[serde(default)]
    pub channel_a: ChannelModel,
    #[serde(default)]
    pub channel_b: ChannelModel,
    #[serde(default)]
    pub detector: DetectorModel,
    pub seed: u64,
}

impl MdiSessionConfig {
    /// Ideal channels, ideal detectors behind the default {Ψ⁺, Ψ⁻} analyzer.
    pub fn ideal(rounds: u64, seed: u64) -> Self {
        Self {
            rounds,
            channel_a: ChannelModel::ideal(),
            channel_b: ChannelModel::ideal(),
            detector: DetectorModel::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), MdiError> {
        if self.rounds == 0 {
            return Err(MdiError::ZeroRounds);
        }
        self.channel_a.validate()?;
        self.channel_b.validate()?;
        self.detector.validate()?;
        Ok(())
    }
}

/// One round through the relay: prepare, transmit, measure, announce.
///
/// Consumes a fixed number of draws (two per channel, five for the analyzer).
pub fn run_mdi_round<R: Rng + ?Sized>(
    alice: Preparation,
    bob: Preparation,
    cfg: &MdiSessionConfig,
    rng: &mut R,
) -> MdiRound {
    let a = apply_channel(&prepare_bb84(alice.bit, alice.basis), &cfg.channel_a, rng);
    let b = apply_channel(&prepare_bb84(bob.bit, bob.basis), &cfg.channel_b, rng);
    let joint = a.zip(b).map(|(a, b)| tensor(&a, &b));
    let announced = bell_measure_lossy(joint.as_ref(), &cfg.detector, rng);
    MdiRound { alice, bob, announced }
}

/// A kept round after sifting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SiftedBit {
    pub key_a: bool,
    pub key_b: bool,
    pub basis: Basis,
    pub announced: BellOutcome,
}

/// Keeps basis-matched Ψ± rounds and applies Bob's flip rule.
pub fn sift(rounds: &[MdiRound]) -> Vec<SiftedBit> {
    rounds
        .iter()
        .filter(|r| r.alice.basis == r.bob.basis)
        .filter(|r| matches!(r.announced, BellOutcome::PsiPlus | BellOutcome::PsiMinus))
        .map(|r| {
            let basis = r.alice.basis;
            let flip = basis == Basis::Z || r.announced == BellOutcome::PsiMinus;
            SiftedBit {
                key_a: r.alice.bit,
                key_b: r.bob.bit ^ flip,
                basis,
                announced: r.announced,
            }
        })
        .collect()
}

/// Per-basis disagreement rates. `None` marks a basis with no kept rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrorEstimate {
    pub qber_z: Option<f64>,
    pub qber_x: Option<f64>,
    pub kept_z: u64,
    pub kept_x: u64,
    pub errors_z: u64,
    pub errors_x: u64,
}

pub fn estimate_errors(sifted: &[SiftedBit]) -> ErrorEstimate {
    let mut kept = [0u64; 2];
    let mut errors = [0u64; 2];
    for bit in sifted {
        let slot = usize::from(bit.basis.bit());
        kept[slot] += 1;
        if bit.key_a != bit.key_b {
            errors[slot] += 1;
        }
    }
    let rate = |e: u64, k: u64| (k > 0).then(|| e as f64 / k as f64);
    ErrorEstimate {
        qber_z: rate(errors[0], kept[0]),
        qber_x: rate(errors[1], kept[1]),
        kept_z: kept[0],
        kept_x: kept[1],
        errors_z: errors[0],
        errors_x: errors[1],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MdiSessionResult {
    pub rounds: u64,
    pub detections: u64,
    /// Fraction of rounds with a Ψ±/Φ± announcement.
    pub gain: f64,
    pub sifted_key_a: Vec<bool>,
    pub sifted_key_b: Vec<bool>,
    pub qber_z: Option<f64>,
    pub qber_x: Option<f64>,
    pub errors: ErrorEstimate,
}

/// Runs a full session on a fresh stream seeded from `cfg.seed`.
pub fn run_mdi_session(cfg: &MdiSessionConfig) -> Result<MdiSessionResult, MdiError> {
    cfg.validate()?;
    let mut rng = seeded(cfg.seed);
    Ok(run_mdi_session_with(cfg, &mut rng))
}

pub(crate) fn run_mdi_session_with(cfg: &MdiSessionConfig, rng: &mut SimRng) -> MdiSessionResult {
    let mut detected = Vec::new();
    for _ in 0..cfg.rounds {
        let alice = Preparation::random(rng);
        let bob = Preparation::random(rng);
        let round = run_mdi_round(alice, bob, cfg, rng);
        if round.announced.is_detection() {
            detected.push(round);
        }
    }
    let sifted = sift(&detected);
    let errors = estimate_errors(&sifted);
    let (sifted_key_a, sifted_key_b) = sifted.iter().map(|s| (s.key_a, s.key_b)).unzip();
    MdiSessionResult {
        rounds: cfg.rounds,
        detections: detected.len() as u64,
        gain: detected.len() as f64 / cfg.rounds as f64,
        sifted_key_a,
        sifted_key_b,
        qber_z: errors.qber_z,
        qber_x: errors.qber_x,
        errors,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScalingPoint {
    pub eta: f64,
    pub rate: f64,
}

/// Coincidence gain for each detector efficiency, every run on the same seed.
pub fn gain_scaling(cfg: &MdiSessionConfig, etas: &[f64]) -> Result<Vec<ScalingPoint>, MdiError> {
    etas.iter()
        .map(|&eta| {
            let mut run = cfg.clone();
            run.detector.efficiency = eta;
            let result = run_mdi_session(&run)?;
            Ok(ScalingPoint { eta, rate: result.gain })
        })
        .collect()
}
