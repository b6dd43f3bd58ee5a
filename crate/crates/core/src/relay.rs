//! The reconfigurable relay.
//!
//! In [`RelayMode::UntrustedMdi`] photons from both users meet at the Bell
//! analyzer and the relay only announces outcomes. In
//! [`RelayMode::TrustedBb84`] the relay delays one user's photons so they no
//! longer interfere and measures each photon on its own in a random basis,
//! running an independent BB84 link per user; it then forwards Alice's key to
//! Bob under a one-time pad made from the key it shares with Bob.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdi::{run_mdi_session, MdiError, MdiSessionConfig, MdiSessionResult, Preparation, ScalingPoint};
use crate::quantum::{apply_channel, prepare_bb84, Basis, ChannelModel, DetectorModel, QuantumError};
use crate::rng::{substream, SimRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelayError {
    #[error("BB84 links need the relay in TrustedBb84 mode, found {0:?}")]
    WrongMode(RelayMode),
    #[error("link with {0:?} kept no rounds")]
    EmptyKey(Party),
    #[error("a link needs at least one round")]
    ZeroRounds,
    #[error(transparent)]
    Mdi(#[from] MdiError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelayMode {
    UntrustedMdi,
    TrustedBb84,
}

impl RelayMode {
    pub fn other(self) -> Self {
        match self {
            RelayMode::UntrustedMdi => RelayMode::TrustedBb84,
            RelayMode::TrustedBb84 => RelayMode::UntrustedMdi,
        }
    }
}

/// When the two users' photons reach the beamsplitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Arrival {
    Coincident,
    /// One user's photons are delayed so they never overlap.
    Staggered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RelayMeasurement {
    BellAnalyzer,
    /// Each photon measured alone in a per-round random basis (waveplate rotated).
    SingleQubitRandomBasis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RelayConfiguration {
    pub arrival: Arrival,
    pub measurement: RelayMeasurement,
}

impl RelayConfiguration {
    fn for_mode(mode: RelayMode) -> Self {
        match mode {
            RelayMode::UntrustedMdi => Self {
                arrival: Arrival::Coincident,
                measurement: RelayMeasurement::BellAnalyzer,
            },
            RelayMode::TrustedBb84 => Self {
                arrival: Arrival::Staggered,
                measurement: RelayMeasurement::SingleQubitRandomBasis,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Relay {
    mode: RelayMode,
    configuration: RelayConfiguration,
}

impl Relay {
    pub fn new(mode: RelayMode) -> Self {
        Self {
            mode,
            configuration: RelayConfiguration::for_mode(mode),
        }
    }

    pub fn mode(&self) -> RelayMode {
        self.mode
    }

    pub fn configuration(&self) -> RelayConfiguration {
        self.configuration
    }

    pub fn switch_mode(&mut self, target: RelayMode) -> RelayConfiguration {
        self.mode = target;
        self.configuration = RelayConfiguration::for_mode(target);
        self.configuration
    }

    /// Flips to the other mode.
    pub fn toggle(&mut self) -> RelayConfiguration {
        self.switch_mode(self.mode.other())
    }

    /// Runs a session in whatever mode the relay is in.
    pub fn run(&self, cfg: &MdiSessionConfig) -> Result<RelayOutcome, RelayError> {
        match self.mode {
            RelayMode::UntrustedMdi => Ok(RelayOutcome::Mdi(run_mdi_session(cfg)?)),
            RelayMode::TrustedBb84 => Ok(RelayOutcome::Trusted(run_trusted_relay(self, cfg)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RelayOutcome {
    Mdi(MdiSessionResult),
    Trusted(RelayReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
    Relay,
}

/// Bits shared (ideally identically) by two parties.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KeyMaterial {
    pub bits: Vec<bool>,
    pub owners: (Party, Party),
}

/// Parameters of one user-to-relay BB84 link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LinkConfig {
    pub rounds: u64,
    #[serde(default)]
    pub channel: ChannelModel,
    /// Only `efficiency` and `darkCountRate` apply to single-photon detection.
    #[serde(default)]
    pub detector: DetectorModel,
}

impl LinkConfig {
    pub fn ideal(rounds: u64) -> Self {
        Self {
            rounds,
            channel: ChannelModel::ideal(),
            detector: DetectorModel::default(),
        }
    }

    pub fn validate(&self) -> Result<(), RelayError> {
        if self.rounds == 0 {
            return Err(RelayError::ZeroRounds);
        }
        self.channel.validate()?;
        self.detector.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LinkOutcome {
    pub user_key: KeyMaterial,
    pub relay_key: KeyMaterial,
    pub rounds: u64,
    pub kept: u64,
    pub kept_fraction: f64,
    pub qber: f64,
}

/// Sifts a BB84 link without rejecting empty keys.
fn simulate_link<R: Rng + ?Sized>(user: Party, cfg: &LinkConfig, rng: &mut R) -> LinkOutcome {
    let mut user_bits = Vec::new();
    let mut relay_bits = Vec::new();
    for _ in 0..cfg.rounds {
        let prep = Preparation::random(rng);
        let relay_basis = Basis::from_bit(rng.random::<bool>());
        let arrived = apply_channel(&prepare_bb84(prep.bit, prep.basis), &cfg.channel, rng);
        let u_meas: f64 = rng.random();
        let u_eta: f64 = rng.random();
        let u_dark: f64 = rng.random();
        let dark_bit: bool = rng.random();

        let clicked = match arrived {
            Some(q) if u_eta < cfg.detector.efficiency => Some(u_meas < q.measure_probability(relay_basis, true)),
            _ if u_dark < cfg.detector.dark_count_rate => Some(dark_bit),
            _ => None,
        };
        if let Some(measured) = clicked {
            if relay_basis == prep.basis {
                user_bits.push(prep.bit);
                relay_bits.push(measured);
            }
        }
    }
    let kept = user_bits.len() as u64;
    let errors = user_bits.iter().zip(&relay_bits).filter(|(a, b)| a != b).count();
    LinkOutcome {
        user_key: KeyMaterial {
            bits: user_bits,
            owners: (user, Party::Relay),
        },
        relay_key: KeyMaterial {
            bits: relay_bits,
            owners: (user, Party::Relay),
        },
        rounds: cfg.rounds,
        kept,
        kept_fraction: kept as f64 / cfg.rounds as f64,
        qber: if kept > 0 { errors as f64 / kept as f64 } else { 0.0 },
    }
}

/// One user's independent BB84 link with a trusted relay.
pub fn run_bb84_link<R: Rng + ?Sized>(
    user: Party,
    relay: &Relay,
    cfg: &LinkConfig,
    rng: &mut R,
) -> Result<LinkOutcome, RelayError> {
    if relay.mode() != RelayMode::TrustedBb84 {
        return Err(RelayError::WrongMode(relay.mode()));
    }
    cfg.validate()?;
    let outcome = simulate_link(user, cfg, rng);
    if outcome.kept == 0 {
        return Err(RelayError::EmptyKey(user));
    }
    Ok(outcome)
}

/// Set when the two pads had different lengths and the longer was cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LengthMismatch {
    pub message: usize,
    pub pad: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OtpForward {
    pub ciphertext: Vec<bool>,
    pub truncated: Option<LengthMismatch>,
}

fn xor_truncated(a: &[bool], b: &[bool]) -> (Vec<bool>, Option<LengthMismatch>) {
    let out = a.iter().zip(b).map(|(x, y)| x ^ y).collect();
    let mismatch = (a.len() != b.len()).then_some(LengthMismatch {
        message: a.len(),
        pad: b.len(),
    });
    (out, mismatch)
}

/// Encrypts the key shared with Alice under the key shared with Bob.
pub fn otp_forward(key_with_alice: &[bool], key_with_bob: &[bool]) -> OtpForward {
    let (ciphertext, truncated) = xor_truncated(key_with_alice, key_with_bob);
    OtpForward { ciphertext, truncated }
}

/// Bob's decryption with his own copy of the pad.
pub fn recover(ciphertext: &[bool], key_with_bob: &[bool]) -> Vec<bool> {
    xor_truncated(ciphertext, key_with_bob).0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PerLinkQber {
    pub alice: f64,
    pub bob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RelayReport {
    pub mode: RelayMode,
    pub per_link_qber: PerLinkQber,
    pub forwarded_ciphertext: Vec<bool>,
    /// What Bob decrypts.
    pub recovered_key: Vec<bool>,
    /// Alice's copy, cut to the forwarded length.
    pub alice_key: Vec<bool>,
    pub keys_match: bool,
    pub truncated: Option<LengthMismatch>,
}

/// Two BB84 links plus one-time-pad forwarding from relay to Bob.
///
/// The Alice and Bob links draw from independent sub-streams of `cfg.seed`.
pub fn run_trusted_relay(relay: &Relay, cfg: &MdiSessionConfig) -> Result<RelayReport, RelayError> {
    let link = |channel: ChannelModel| LinkConfig {
        rounds: cfg.rounds,
        channel,
        detector: cfg.detector,
    };
    let mut rng_a: SimRng = substream(cfg.seed, 0);
    let mut rng_b: SimRng = substream(cfg.seed, 1);
    let alice = run_bb84_link(Party::Alice, relay, &link(cfg.channel_a), &mut rng_a)?;
    let bob = run_bb84_link(Party::Bob, relay, &link(cfg.channel_b), &mut rng_b)?;

    let forward = otp_forward(&alice.relay_key.bits, &bob.relay_key.bits);
    let recovered_key = recover(&forward.ciphertext, &bob.user_key.bits);
    let alice_key: Vec<bool> = alice.user_key.bits[..recovered_key.len()].to_vec();
    Ok(RelayReport {
        mode: relay.mode(),
        per_link_qber: PerLinkQber {
            alice: alice.qber,
            bob: bob.qber,
        },
        keys_match: alice_key == recovered_key,
        forwarded_ciphertext: forward.ciphertext,
        recovered_key,
        alice_key,
        truncated: forward.truncated,
    })
}

/// BB84 kept fraction per detector efficiency, every run on the same seed.
pub fn rate_scaling_bb84(cfg: &LinkConfig, seed: u64, etas: &[f64]) -> Result<Vec<ScalingPoint>, RelayError> {
    cfg.validate()?;
    etas.iter()
        .map(|&eta| {
            let mut run = *cfg;
            run.detector.efficiency = eta;
            run.detector.validate()?;
            let mut rng = substream(seed, 0);
            let outcome = simulate_link(Party::Alice, &run, &mut rng);
            Ok(ScalingPoint {
                eta,
                rate: outcome.kept_fraction,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn otp_examples() {
        let f = otp_forward(&bits("1010"), &bits("0110"));
        assert_eq!(f.ciphertext, bits("1100"));
        assert_eq!(f.truncated, None);
        assert_eq!(recover(&f.ciphertext, &bits("0110")), bits("1010"));

        assert_eq!(otp_forward(&bits("1101"), &bits("1101")).ciphertext, bits("0000"));
        assert_eq!(otp_forward(&bits("1101"), &bits("0000")).ciphertext, bits("1101"));
    }

    #[test]
    fn otp_length_mismatch_flagged() {
        let f = otp_forward(&bits("10101"), &bits("011"));
        assert_eq!(f.ciphertext.len(), 3);
        assert_eq!(f.truncated, Some(LengthMismatch { message: 5, pad: 3 }));
    }

    #[test]
    fn mode_switching() {
        let mut relay = Relay::new(RelayMode::UntrustedMdi);
        let original = relay.configuration();
        assert_eq!(original.arrival, Arrival::Coincident);
        let trusted = relay.toggle();
        assert_eq!(trusted.measurement, RelayMeasurement::SingleQubitRandomBasis);
        assert_eq!(relay.toggle(), original);
        assert_eq!(relay.mode(), RelayMode::UntrustedMdi);
    }

    #[test]
    fn dispatch_by_mode() {
        let cfg = MdiSessionConfig::ideal(2_000, 4);
        let mut relay = Relay::new(RelayMode::UntrustedMdi);
        assert!(matches!(relay.run(&cfg).unwrap(), RelayOutcome::Mdi(_)));
        relay.switch_mode(RelayMode::TrustedBb84);
        assert!(matches!(relay.run(&cfg).unwrap(), RelayOutcome::Trusted(_)));
    }

    #[test]
    fn links_require_trusted_mode() {
        let relay = Relay::new(RelayMode::UntrustedMdi);
        let err = run_bb84_link(Party::Alice, &relay, &LinkConfig::ideal(10), &mut seeded(1));
        assert_eq!(err, Err(RelayError::WrongMode(RelayMode::UntrustedMdi)));
    }

    #[test]
    fn empty_link_flagged() {
        let relay = Relay::new(RelayMode::TrustedBb84);
        let mut cfg = LinkConfig::ideal(100);
        cfg.channel.transmittance = 0.0;
        let err = run_bb84_link(Party::Bob, &relay, &cfg, &mut seeded(1));
        assert_eq!(err, Err(RelayError::EmptyKey(Party::Bob)));
    }

    #[test]
    fn zero_efficiency_keeps_nothing() {
        let points = rate_scaling_bb84(&LinkConfig::ideal(10_000), 9, &[0.0]).unwrap();
        assert_eq!(points[0].rate, 0.0);
    }
}
