//! Pure single- and two-qubit states.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::QuantumError;

/// Tolerance on the squared norm of a constructed state.
pub const NORM_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Encoding basis of a BB84 state: computational (`Z`) or diagonal (`X`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    /// Maps the basis bit θ to a basis; `false` is `Z`, `true` is `X`.
    pub fn from_bit(theta: bool) -> Self {
        if theta {
            Basis::X
        } else {
            Basis::Z
        }
    }

    pub fn bit(self) -> bool {
        self == Basis::X
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Z => f.write_str("Z"),
            Basis::X => f.write_str("X"),
        }
    }
}

/// A normalized pure qubit `amp0 |0> + amp1 |1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    amp0: Complex64,
    amp1: Complex64,
}

impl QubitState {
    /// Builds a state from raw amplitudes, rejecting anything off the unit sphere.
    pub fn new(amp0: Complex64, amp1: Complex64) -> Result<Self, QuantumError> {
        let norm = amp0.norm_sqr() + amp1.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QuantumError::NotNormalized { norm });
        }
        Ok(Self { amp0, amp1 })
    }

    /// Builds a state from arbitrary non-zero amplitudes by rescaling them.
    pub fn normalized(amp0: Complex64, amp1: Complex64) -> Result<Self, QuantumError> {
        let norm = (amp0.norm_sqr() + amp1.norm_sqr()).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(QuantumError::NotNormalized { norm: norm * norm });
        }
        Ok(Self {
            amp0: amp0 / norm,
            amp1: amp1 / norm,
        })
    }

    /// `cos t |0> + e^{i phi} sin t |1>`, the usual Bloch-sphere chart.
    pub fn from_angles(t: f64, phi: f64) -> Self {
        Self {
            amp0: Complex64::new(t.cos(), 0.0),
            amp1: Complex64::from_polar(t.sin(), phi),
        }
    }

    pub fn zero() -> Self {
        Self { amp0: ONE, amp1: ZERO }
    }

    pub fn one() -> Self {
        Self { amp0: ZERO, amp1: ONE }
    }

    pub fn plus() -> Self {
        let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self { amp0: a, amp1: a }
    }

    pub fn minus() -> Self {
        let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self { amp0: a, amp1: -a }
    }

    /// Computational basis state `|bit>`.
    pub fn basis_state(bit: bool) -> Self {
        if bit {
            Self::one()
        } else {
            Self::zero()
        }
    }

    pub fn amp0(&self) -> Complex64 {
        self.amp0
    }

    pub fn amp1(&self) -> Complex64 {
        self.amp1
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        [self.amp0, self.amp1]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp0.norm_sqr() + self.amp1.norm_sqr()
    }

    pub fn hadamard(&self) -> Self {
        let s = FRAC_1_SQRT_2;
        Self {
            amp0: (self.amp0 + self.amp1) * s,
            amp1: (self.amp0 - self.amp1) * s,
        }
    }

    /// Real rotation of the polarization by `angle` radians:
    /// `|0> -> cos|0> + sin|1>`, `|1> -> -sin|0> + cos|1>`.
    ///
    /// A quarter turn flips the bit in both BB84 bases (up to a global phase).
    pub fn rotate(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            amp0: self.amp0 * c - self.amp1 * s,
            amp1: self.amp0 * s + self.amp1 * c,
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QubitState) -> Complex64 {
        self.amp0.conj() * other.amp0 + self.amp1.conj() * other.amp1
    }

    /// Componentwise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            amp0: self.amp0.conj(),
            amp1: self.amp1.conj(),
        }
    }

    /// Probability of reading `bit` when measuring in `basis`.
    pub fn measure_probability(&self, basis: Basis, bit: bool) -> f64 {
        prepare_bb84(bit, basis).inner(self).norm_sqr()
    }
}

/// `H^θ |x>`: the BB84 state carrying bit `bit` in `basis`.
pub fn prepare_bb84(bit: bool, basis: Basis) -> QubitState {
    match (basis, bit) {
        (Basis::Z, false) => QubitState::zero(),
        (Basis::Z, true) => QubitState::one(),
        (Basis::X, false) => QubitState::plus(),
        (Basis::X, true) => QubitState::minus(),
    }
}

/// A normalized pure two-qubit state over `|00>, |01>, |10>, |11>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    amps: [Complex64; 4],
}

impl TwoQubitState {
    pub fn new(amps: [Complex64; 4]) -> Result<Self, QuantumError> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QuantumError::NotNormalized { norm });
        }
        Ok(Self { amps })
    }

    /// Rescales arbitrary amplitudes; fails only on the zero vector.
    pub fn normalized(amps: [Complex64; 4]) -> Result<Self, QuantumError> {
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sqr.is_finite() || norm_sqr == 0.0 {
            return Err(QuantumError::NotNormalized { norm: norm_sqr });
        }
        let norm = norm_sqr.sqrt();
        Ok(Self {
            amps: amps.map(|a| a / norm),
        })
    }

    pub(crate) fn from_raw(amps: [Complex64; 4]) -> Self {
        Self { amps }
    }

    pub fn amps(&self) -> &[Complex64; 4] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &TwoQubitState) -> Complex64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Joint probabilities of measuring both qubits in `basis`, indexed `2*b0 + b1`.
    pub fn measure_probabilities(&self, basis: Basis) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (idx, slot) in out.iter_mut().enumerate() {
            let b0 = idx & 0b10 != 0;
            let b1 = idx & 0b01 != 0;
            let product = tensor(&prepare_bb84(b0, basis), &prepare_bb84(b1, basis));
            *slot = product.inner(self).norm_sqr();
        }
        out
    }
}

/// `a ⊗ b` with amplitude index `2i + j`.
pub fn tensor(a: &QubitState, b: &QubitState) -> TwoQubitState {
    let [a0, a1] = a.amplitudes();
    let [b0, b1] = b.amplitudes();
    TwoQubitState {
        amps: [a0 * b0, a0 * b1, a1 * b0, a1 * b1],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: Complex64, re: f64, im: f64) -> bool {
        (a.re - re).abs() < 1e-15 && (a.im - im).abs() < 1e-15
    }

    #[test]
    fn bb84_preparations() {
        let s = FRAC_1_SQRT_2;
        let z0 = prepare_bb84(false, Basis::Z);
        assert!(close(z0.amp0(), 1.0, 0.0) && close(z0.amp1(), 0.0, 0.0));
        let x0 = prepare_bb84(false, Basis::X);
        assert!(close(x0.amp0(), s, 0.0) && close(x0.amp1(), s, 0.0));
        let x1 = prepare_bb84(true, Basis::X);
        assert!(close(x1.amp0(), s, 0.0) && close(x1.amp1(), -s, 0.0));
        // H^θ|x> built explicitly from the Hadamard agrees with the table.
        for bit in [false, true] {
            let h = QubitState::basis_state(bit).hadamard();
            let p = prepare_bb84(bit, Basis::X);
            assert!((h.inner(&p).norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn tensor_products() {
        let t = tensor(&QubitState::zero(), &QubitState::one());
        let expect = [0.0, 1.0, 0.0, 0.0];
        for (a, e) in t.amps().iter().zip(expect) {
            assert!(close(*a, e, 0.0));
        }
        let pp = tensor(&QubitState::plus(), &QubitState::plus());
        for a in pp.amps() {
            assert!((a.re - 0.5).abs() < 1e-15);
        }
        let pm = tensor(&QubitState::plus(), &QubitState::minus());
        let expect = [0.5, -0.5, 0.5, -0.5];
        for (a, e) in pm.amps().iter().zip(expect) {
            assert!((a.re - e).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(QubitState::new(ONE, ONE).is_err());
        assert!(QubitState::normalized(ZERO, ZERO).is_err());
        assert!(TwoQubitState::new([ONE; 4]).is_err());
        assert!(TwoQubitState::normalized([ONE; 4]).is_ok());
    }

    #[test]
    fn quarter_turn_flips_both_bases() {
        for basis in [Basis::Z, Basis::X] {
            for bit in [false, true] {
                let flipped = prepare_bb84(bit, basis).rotate(FRAC_PI_2);
                assert!(flipped.measure_probability(basis, !bit) > 1.0 - 1e-15);
            }
        }
    }
}
