//! Bell basis, projection probabilities and the sampled Bell-state analyzer.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{QuantumError, TwoQubitState};

/// Announced result of a Bell-state measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellOutcome {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
    NoDetection,
}

impl BellOutcome {
    /// The four Bell states, in the order used by [`BellProbs`].
    pub const BELL: [BellOutcome; 4] = [
        BellOutcome::PhiPlus,
        BellOutcome::PhiMinus,
        BellOutcome::PsiPlus,
        BellOutcome::PsiMinus,
    ];

    /// Every announcement including `NoDetection`.
    pub const ALL: [BellOutcome; 5] = [
        BellOutcome::PhiPlus,
        BellOutcome::PhiMinus,
        BellOutcome::PsiPlus,
        BellOutcome::PsiMinus,
        BellOutcome::NoDetection,
    ];

    /// Position in [`BellOutcome::ALL`].
    pub fn index(self) -> usize {
        match self {
            BellOutcome::PhiPlus => 0,
            BellOutcome::PhiMinus => 1,
            BellOutcome::PsiPlus => 2,
            BellOutcome::PsiMinus => 3,
            BellOutcome::NoDetection => 4,
        }
    }

    pub fn is_detection(self) -> bool {
        self != BellOutcome::NoDetection
    }

    /// State vector of a Bell outcome; `None` for `NoDetection`.
    pub fn state(self) -> Option<TwoQubitState> {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        let amps = match self {
            BellOutcome::PhiPlus => [s, z, z, s],
            BellOutcome::PhiMinus => [s, z, z, -s],
            BellOutcome::PsiPlus => [z, s, s, z],
            BellOutcome::PsiMinus => [z, s, -s, z],
            BellOutcome::NoDetection => return None,
        };
        Some(TwoQubitState::from_raw(amps))
    }
}

impl fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            BellOutcome::PhiPlus => "Phi+",
            BellOutcome::PhiMinus => "Phi-",
            BellOutcome::PsiPlus => "Psi+",
            BellOutcome::PsiMinus => "Psi-",
            BellOutcome::NoDetection => "none",
        };
        f.write_str(name)
    }
}

/// Projection probabilities onto the Bell basis, ordered Φ⁺, Φ⁻, Ψ⁺, Ψ⁻.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellProbs(pub [f64; 4]);

impl BellProbs {
    /// Probability of `outcome`; zero for `NoDetection`.
    pub fn get(&self, outcome: BellOutcome) -> f64 {
        match outcome {
            BellOutcome::NoDetection => 0.0,
            other => self.0[other.index()],
        }
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// `|<Bell_k|s>|^2` for each Bell state.
///
/// Uses the closed-form overlaps `<Φ±|s> = (a00 ± a11)/√2` and
/// `<Ψ±|s> = (a01 ± a10)/√2`.
pub fn bell_outcome_probs(s: &TwoQubitState) -> BellProbs {
    let [a00, a01, a10, a11] = *s.amps();
    let half = 0.5;
    BellProbs([
        (a00 + a11).norm_sqr() * half,
        (a00 - a11).norm_sqr() * half,
        (a01 + a10).norm_sqr() * half,
        (a01 - a10).norm_sqr() * half,
    ])
}

/// Subset of Bell outcomes an analyzer can resolve. Never contains `NoDetection`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<BellOutcome>", into = "Vec<BellOutcome>")]
pub struct OutcomeSet(u8);

impl OutcomeSet {
    /// The linear-optics partial analyzer: {Ψ⁺, Ψ⁻}.
    pub fn psi_only() -> Self {
        Self::from_outcomes(&[BellOutcome::PsiPlus, BellOutcome::PsiMinus]).unwrap()
    }

    /// The ideal four-outcome analyzer.
    pub fn all() -> Self {
        Self(0b1111)
    }

    pub fn empty() -> Self {
        Self(0)
    }

    pub fn from_outcomes(outcomes: &[BellOutcome]) -> Result<Self, QuantumError> {
        let mut bits = 0u8;
        for &o in outcomes {
            if o == BellOutcome::NoDetection {
                return Err(QuantumError::NoDetectionNotResolvable);
            }
            bits |= 1 << o.index();
        }
        Ok(Self(bits))
    }

    pub fn contains(&self, outcome: BellOutcome) -> bool {
        outcome != BellOutcome::NoDetection && self.0 & (1 << outcome.index()) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = BellOutcome> + '_ {
        BellOutcome::BELL.into_iter().filter(|o| self.contains(*o))
    }
}

impl Default for OutcomeSet {
    fn default() -> Self {
        Self::psi_only()
    }
}

impl TryFrom<Vec<BellOutcome>> for OutcomeSet {
    type Error = QuantumError;

    fn try_from(v: Vec<BellOutcome>) -> Result<Self, Self::Error> {
        Self::from_outcomes(&v)
    }
}

impl From<OutcomeSet> for Vec<BellOutcome> {
    fn from(s: OutcomeSet) -> Self {
        s.iter().collect()
    }
}

/// Detector and analyzer parameters at a measurement station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct DetectorModel {
    /// Per-photon detection efficiency η.
    pub efficiency: f64,
    /// Probability per gate of a dark event when nothing was detected.
    pub dark_count_rate: f64,
    pub detectable_outcomes: OutcomeSet,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            efficiency: 1.0,
            dark_count_rate: 0.0,
            detectable_outcomes: OutcomeSet::psi_only(),
        }
    }
}

impl DetectorModel {
    pub fn new(efficiency: f64, dark_count_rate: f64, detectable: OutcomeSet) -> Result<Self, QuantumError> {
        let det = Self {
            efficiency,
            dark_count_rate,
            detectable_outcomes: detectable,
        };
        det.validate()?;
        Ok(det)
    }

    /// Ideal detectors behind the full four-outcome analyzer.
    pub fn ideal_full() -> Self {
        Self {
            detectable_outcomes: OutcomeSet::all(),
            ..Self::default()
        }
    }

    pub fn with_efficiency(mut self, efficiency: f64) -> Self {
        self.efficiency = efficiency;
        self
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        check_probability("efficiency", self.efficiency)?;
        check_probability("darkCountRate", self.dark_count_rate)
    }
}

pub(crate) fn check_probability(field: &'static str, value: f64) -> Result<(), QuantumError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(QuantumError::OutOfRange { field, value })
    }
}

/// Index of the first cumulative bin exceeding `u`, skipping zero-weight bins.
pub(crate) fn sample_index(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// One Bell-state measurement with finite efficiency and a partial analyzer.
///
/// Always consumes exactly five uniforms from `rng` so that runs differing
/// only in detector settings stay aligned on the same seed. Each photon of
/// the pair survives independently with probability η, so a coincidence
/// survives with η².
pub fn bell_measure<R: Rng + ?Sized>(s: &TwoQubitState, det: &DetectorModel, rng: &mut R) -> BellOutcome {
    bell_measure_lossy(Some(s), det, rng)
}

/// [`bell_measure`] where `None` means at least one photon never arrived;
/// only a dark event can then produce a click.
pub(crate) fn bell_measure_lossy<R: Rng + ?Sized>(
    s: Option<&TwoQubitState>,
    det: &DetectorModel,
    rng: &mut R,
) -> BellOutcome {
    let u_outcome: f64 = rng.random();
    let u_first: f64 = rng.random();
    let u_second: f64 = rng.random();
    let u_dark: f64 = rng.random();
    let u_pick: f64 = rng.random();

    if let Some(s) = s {
        let probs = bell_outcome_probs(s);
        let outcome = BellOutcome::BELL[sample_index(&probs.0, u_outcome)];
        let survived = u_first < det.efficiency && u_second < det.efficiency;
        if survived && det.detectable_outcomes.contains(outcome) {
            return outcome;
        }
    }
    dark_event(det, u_dark, u_pick)
}

/// Substitutes a uniformly random resolvable outcome with the dark-count probability.
pub(crate) fn dark_event(det: &DetectorModel, u_dark: f64, u_pick: f64) -> BellOutcome {
    let n = det.detectable_outcomes.len();
    if n > 0 && u_dark < det.dark_count_rate {
        let k = ((u_pick * n as f64) as usize).min(n - 1);
        det.detectable_outcomes.iter().nth(k).unwrap_or(BellOutcome::NoDetection)
    } else {
        BellOutcome::NoDetection
    }
}
