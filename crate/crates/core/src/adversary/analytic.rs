//! Error rates of the post-selected product-state attack family.
//!
//! The adversaries leave the verifiers' kept photons in
//! `(α0|0> + β0|1>) ⊗ (α1|0> + β1|1>)` and announce Ψ⁻. An error is a
//! round where both verifiers read the same bit.

use num_complex::Complex64;
use serde::Serialize;

use crate::quantum::{Basis, BellOutcome, QuantumError, QubitState, NORM_TOLERANCE};
use crate::qpv::consistency_check;

/// The product state `|a0> ⊗ |a1>` the adversaries steer the verifiers into.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AttackState {
    #[serde(serialize_with = "ser_complex")]
    pub alpha0: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub beta0: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub alpha1: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub beta1: Complex64,
}

fn ser_complex<S: serde::Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    [c.re, c.im].serialize(s)
}

impl AttackState {
    pub fn new(alpha0: Complex64, beta0: Complex64, alpha1: Complex64, beta1: Complex64) -> Result<Self, QuantumError> {
        for (a, b) in [(alpha0, beta0), (alpha1, beta1)] {
            let norm = a.norm_sqr() + b.norm_sqr();
            if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(QuantumError::NotNormalized { norm });
            }
        }
        Ok(Self {
            alpha0,
            beta0,
            alpha1,
            beta1,
        })
    }

    /// Real amplitudes, convenient for tests and examples.
    pub fn real(alpha0: f64, beta0: f64, alpha1: f64, beta1: f64) -> Result<Self, QuantumError> {
        let c = |x: f64| Complex64::new(x, 0.0);
        Self::new(c(alpha0), c(beta0), c(alpha1), c(beta1))
    }

    /// `α_i = cos t_i`, `β_i = e^{iφ_i} sin t_i`; global phases fixed real-positive.
    pub fn from_angles(t0: f64, phi0: f64, t1: f64, phi1: f64) -> Self {
        let q0 = QubitState::from_angles(t0, phi0);
        let q1 = QubitState::from_angles(t1, phi1);
        Self::from_qubits(&q0, &q1)
    }

    pub fn from_qubits(q0: &QubitState, q1: &QubitState) -> Self {
        Self {
            alpha0: q0.amp0(),
            beta0: q0.amp1(),
            alpha1: q1.amp0(),
            beta1: q1.amp1(),
        }
    }

    pub fn qubits(&self) -> (QubitState, QubitState) {
        (
            QubitState::normalized(self.alpha0, self.beta0).expect("attack state normalized"),
            QubitState::normalized(self.alpha1, self.beta1).expect("attack state normalized"),
        )
    }

    /// The two quantities whose squared moduli raise the average error above 1/4:
    /// `α0α1 + β0β1` and `α0α1* + β0β1*`.
    pub fn cross_terms(&self) -> (Complex64, Complex64) {
        (
            self.alpha0 * self.alpha1 + self.beta0 * self.beta1,
            self.alpha0 * self.alpha1.conj() + self.beta0 * self.beta1.conj(),
        )
    }
}

/// Probability that both verifiers read the same bit in the computational basis.
pub fn error_rate_z(a: &AttackState) -> f64 {
    (a.alpha0 * a.alpha1).norm_sqr() + (a.beta0 * a.beta1).norm_sqr()
}

/// Probability that both verifiers read the same bit in the diagonal basis.
pub fn error_rate_x(a: &AttackState) -> f64 {
    let plus = (a.alpha0 + a.beta0) * (a.alpha1 + a.beta1);
    let minus = (a.alpha0 - a.beta0) * (a.alpha1 - a.beta1);
    0.25 * (plus.norm_sqr() + minus.norm_sqr())
}

/// Basis-averaged error rate in closed form, never below 1/4.
pub fn avg_error_rate(a: &AttackState) -> f64 {
    let (first, second) = a.cross_terms();
    (1.0 + first.norm_sqr() + second.norm_sqr()) / 4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalyticRates {
    pub er_z: f64,
    pub er_x: f64,
    pub er: f64,
}

impl AnalyticRates {
    pub fn of(a: &AttackState) -> Self {
        Self {
            er_z: error_rate_z(a),
            er_x: error_rate_x(a),
            er: avg_error_rate(a),
        }
    }
}

/// Expected error rates when the adversaries steer into `target` and announce
/// `reported`, by enumerating the verifiers' readings under the consistency rule.
pub fn predicted_rates(target: &AttackState, reported: BellOutcome) -> AnalyticRates {
    let (q0, q1) = target.qubits();
    let mut per_basis = [0.0; 2];
    for (slot, basis) in [Basis::Z, Basis::X].into_iter().enumerate() {
        for x0 in [false, true] {
            for x1 in [false, true] {
                if !consistency_check(reported, x0, x1, basis) {
                    per_basis[slot] += q0.measure_probability(basis, x0) * q1.measure_probability(basis, x1);
                }
            }
        }
    }
    AnalyticRates {
        er_z: per_basis[0],
        er_x: per_basis[1],
        er: 0.5 * (per_basis[0] + per_basis[1]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2 as R;

    #[test]
    fn computational_rate_examples() {
        assert_eq!(error_rate_z(&AttackState::real(1.0, 0.0, 0.0, 1.0).unwrap()), 0.0);
        assert_eq!(error_rate_z(&AttackState::real(1.0, 0.0, 1.0, 0.0).unwrap()), 1.0);
        let diag = AttackState::real(R, R, R, R).unwrap();
        assert!((error_rate_z(&diag) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn diagonal_rate_examples() {
        assert!((error_rate_x(&AttackState::real(1.0, 0.0, 0.0, 1.0).unwrap()) - 0.5).abs() < 1e-15);
        assert!(error_rate_x(&AttackState::real(R, R, R, -R).unwrap()).abs() < 1e-15);
        assert!((error_rate_x(&AttackState::real(1.0, 0.0, 1.0, 0.0).unwrap()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn average_rate_examples() {
        assert!((avg_error_rate(&AttackState::real(1.0, 0.0, 0.0, 1.0).unwrap()) - 0.25).abs() < 1e-15);
        assert!((avg_error_rate(&AttackState::real(1.0, 0.0, 1.0, 0.0).unwrap()) - 0.75).abs() < 1e-15);
        assert!((avg_error_rate(&AttackState::real(R, R, R, R).unwrap()) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn enumeration_matches_closed_forms_for_psi_minus() {
        let a = AttackState::from_angles(0.3, 1.2, 1.1, -0.4);
        let p = predicted_rates(&a, BellOutcome::PsiMinus);
        let c = AnalyticRates::of(&a);
        assert!((p.er_z - c.er_z).abs() < 1e-12);
        assert!((p.er_x - c.er_x).abs() < 1e-12);
        assert!((p.er - c.er).abs() < 1e-12);
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(AttackState::real(1.0, 1.0, 1.0, 0.0).is_err());
    }
}
