use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bell::check_probability;
use super::{QuantumError, QubitState};

/// Scalar free-space link: loss plus an occasional polarization rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct ChannelModel {
    pub transmittance: f64,
    /// Probability that the photon is rotated by `error_angle`.
    pub misalignment: f64,
    /// Rotation applied on a misalignment event, in radians.
    pub error_angle: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl ChannelModel {
    pub fn new(transmittance: f64, misalignment: f64) -> Result<Self, QuantumError> {
        let ch = Self {
            transmittance,
            misalignment,
            error_angle: FRAC_PI_2,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn ideal() -> Self {
        Self {
            transmittance: 1.0,
            misalignment: 0.0,
            error_angle: FRAC_PI_2,
        }
    }

    pub fn with_transmittance(mut self, transmittance: f64) -> Self {
        self.transmittance = transmittance;
        self
    }

    pub fn with_misalignment(mut self, misalignment: f64) -> Self {
        self.misalignment = misalignment;
        self
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        check_probability("transmittance", self.transmittance)?;
        check_probability("misalignment", self.misalignment)?;
        if !self.error_angle.is_finite() {
            return Err(QuantumError::OutOfRange {
                field: "errorAngle",
                value: self.error_angle,
            });
        }
        Ok(())
    }
}

/// Sends `q` through `ch`. `None` means the photon was lost.
///
/// Consumes exactly two uniforms regardless of the branch taken.
pub fn apply_channel<R: Rng + ?Sized>(q: &QubitState, ch: &ChannelModel, rng: &mut R) -> Option<QubitState> {
    let u_loss: f64 = rng.random();
    let u_flip: f64 = rng.random();
    if u_loss >= ch.transmittance {
        return None;
    }
    if u_flip < ch.misalignment {
        Some(q.rotate(ch.error_angle))
    } else {
        Some(*q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn identity_channel() {
        let mut rng = seeded(5);
        let q = QubitState::from_angles(0.3, 1.1);
        for _ in 0..100 {
            assert_eq!(apply_channel(&q, &ChannelModel::ideal(), &mut rng), Some(q));
        }
    }

    #[test]
    fn opaque_channel() {
        let mut rng = seeded(6);
        let ch = ChannelModel::ideal().with_transmittance(0.0);
        for _ in 0..100 {
            assert!(apply_channel(&QubitState::plus(), &ch, &mut rng).is_none());
        }
    }

    #[test]
    fn full_misalignment_flips() {
        let mut rng = seeded(7);
        let ch = ChannelModel::new(1.0, 1.0).unwrap();
        let out = apply_channel(&QubitState::zero(), &ch, &mut rng).unwrap();
        assert!(out.amp0().norm() < 1e-15);
        assert!((out.amp1().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn range_checks() {
        assert!(ChannelModel::new(1.5, 0.0).is_err());
        assert!(ChannelModel::new(0.5, -0.01).is_err());
    }
}
