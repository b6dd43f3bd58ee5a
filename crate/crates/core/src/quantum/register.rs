//! Four-qubit pure states, used only for entanglement-swapping bookkeeping.
//!
//! Qubits are labelled `a, b, c, d` with amplitude index `8a + 4b + 2c + d`.

use num_complex::Complex64;

use super::{BellOutcome, QubitState, TwoQubitState};

#[derive(Debug, Clone, PartialEq)]
pub struct FourQubitState {
    amps: [Complex64; 16],
}

impl FourQubitState {
    /// `left(a,b) ⊗ right(c,d)`.
    pub fn from_pairs(left: &TwoQubitState, right: &TwoQubitState) -> Self {
        let mut amps = [Complex64::new(0.0, 0.0); 16];
        for (i, l) in left.amps().iter().enumerate() {
            for (j, r) in right.amps().iter().enumerate() {
                amps[4 * i + j] = l * r;
            }
        }
        Self { amps }
    }

    /// `outer_a ⊗ middle(b,c) ⊗ outer_d`.
    pub fn from_sandwich(outer_a: &QubitState, middle: &TwoQubitState, outer_d: &QubitState) -> Self {
        let mut amps = [Complex64::new(0.0, 0.0); 16];
        for (a, qa) in outer_a.amplitudes().iter().enumerate() {
            for (bc, m) in middle.amps().iter().enumerate() {
                for (d, qd) in outer_d.amplitudes().iter().enumerate() {
                    amps[8 * a + 2 * bc + d] = qa * m * qd;
                }
            }
        }
        Self { amps }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies the real polarization rotation of [`QubitState::rotate`] to one qubit (0..4).
    pub fn rotate(&mut self, qubit: usize, angle: f64) {
        assert!(qubit < 4, "qubit index out of range");
        let (s, c) = angle.sin_cos();
        let mask = 1 << (3 - qubit);
        for idx in 0..16 {
            if idx & mask != 0 {
                continue;
            }
            let lo = self.amps[idx];
            let hi = self.amps[idx | mask];
            self.amps[idx] = lo * c - hi * s;
            self.amps[idx | mask] = lo * s + hi * c;
        }
    }

    /// Bell measurement on the middle pair `(b, c)`.
    ///
    /// Returns the outcome probability and, when it is non-zero, the
    /// normalized post-measurement state of the outer pair `(a, d)`.
    pub fn measure_middle(&self, outcome: BellOutcome) -> (f64, Option<TwoQubitState>) {
        let Some(bell) = outcome.state() else {
            return (0.0, None);
        };
        let bell = bell.amps();
        let mut outer = [Complex64::new(0.0, 0.0); 4];
        for a in 0..2 {
            for d in 0..2 {
                outer[2 * a + d] = bell
                    .iter()
                    .enumerate()
                    .map(|(bc, b)| b.conj() * self.amps[8 * a + 2 * bc + d])
                    .sum();
            }
        }
        let p: f64 = outer.iter().map(|x| x.norm_sqr()).sum();
        let post = TwoQubitState::normalized(outer).ok();
        (p, post)
    }

    /// Joint probabilities of Bell measurements on `(a, b)` and `(c, d)`,
    /// indexed `[first][second]` in [`BellOutcome::BELL`] order.
    pub fn measure_pairs(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (i, first) in BellOutcome::BELL.iter().enumerate() {
            let f = first.state().unwrap();
            for (j, second) in BellOutcome::BELL.iter().enumerate() {
                let s = second.state().unwrap();
                let mut acc = Complex64::new(0.0, 0.0);
                for ab in 0..4 {
                    for cd in 0..4 {
                        acc += f.amps()[ab].conj() * s.amps()[cd].conj() * self.amps[4 * ab + cd];
                    }
                }
                out[i][j] = acc.norm_sqr();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::bell_outcome_probs;

    #[test]
    fn swapping_two_phi_plus_pairs() {
        let phi = BellOutcome::PhiPlus.state().unwrap();
        let state = FourQubitState::from_pairs(&phi, &phi);
        let mut total = 0.0;
        for outcome in BellOutcome::BELL {
            let (p, post) = state.measure_middle(outcome);
            assert!((p - 0.25).abs() < 1e-12);
            total += p;
            // The outer pair is left in the same Bell state that was announced.
            let post = bell_outcome_probs(&post.unwrap());
            assert!((post.get(outcome) - 1.0).abs() < 1e-12);
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_measurements_sum_to_one() {
        let psi = BellOutcome::PsiPlus.state().unwrap();
        let state = FourQubitState::from_sandwich(&QubitState::plus(), &psi, &QubitState::from_angles(0.4, 0.9));
        let total: f64 = state.measure_pairs().iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_preserves_norm() {
        let phi = BellOutcome::PhiMinus.state().unwrap();
        let mut state = FourQubitState::from_pairs(&phi, &phi);
        state.rotate(1, 0.7);
        state.rotate(3, -1.3);
        assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
    }
}
