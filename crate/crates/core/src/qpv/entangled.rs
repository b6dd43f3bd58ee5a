//! Entanglement-based form of the protocol.
//!
//! Each verifier holds a |Φ⁺> pair, sends one half to the prover and
//! measures the other in the jointly chosen basis. Measuring the kept half
//! before the prover acts reproduces the prepare-and-measure protocol
//! directly; measuring it afterwards goes through entanglement swapping.
//! Both orders give the same joint statistics.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    response_times, schedule_round, Geometry, ProverResponse, QpvConfig, QpvError, QpvReport, Tally,
};
use crate::quantum::{
    apply_channel, bell_measure_lossy, dark_event, prepare_bb84, sample_index, tensor, Basis, BellOutcome,
    FourQubitState,
};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasurementOrder {
    /// Verifiers measure their kept halves before sending.
    Before,
    /// Verifiers measure after the prover's Bell measurement.
    After,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifierRecord {
    pub basis: Basis,
    pub x0: bool,
    pub x1: bool,
    pub announced: BellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EntangledRun {
    pub order: MeasurementOrder,
    pub report: QpvReport,
    pub records: Vec<VerifierRecord>,
}

/// Runs the entanglement-based protocol with an honest prover at the claimed position.
pub fn run_entanglement_based_session(
    geom: &Geometry,
    cfg: &QpvConfig,
    order: MeasurementOrder,
    rng: &mut SimRng,
    n_rounds: u64,
) -> Result<EntangledRun, QpvError> {
    if n_rounds == 0 {
        return Err(QpvError::ZeroRounds);
    }
    cfg.validate()?;
    let schedule = schedule_round(geom, geom.default_arrival());
    let times = response_times(geom, &schedule, geom.claimed(), 0.0);
    let n_verifiers = geom.verifiers().len();
    let mut tally = Tally::new(geom, &schedule, cfg.threshold, cfg.record_transcript);
    let mut records = Vec::with_capacity(n_rounds as usize);
    let mut response = ProverResponse::default();

    for _ in 0..n_rounds {
        let basis = Basis::from_bit(rng.random());
        let (x0, x1, announced) = match order {
            MeasurementOrder::Before => measure_first(basis, cfg, rng),
            MeasurementOrder::After => measure_last(basis, cfg, rng),
        };
        records.push(VerifierRecord {
            basis,
            x0,
            x1,
            announced,
        });
        response.clear();
        response.reports.resize(n_verifiers, announced);
        response.response_times.extend_from_slice(&times);
        if tally.observe(x0, x1, basis, &response).is_break() {
            break;
        }
    }
    Ok(EntangledRun {
        order,
        report: tally.finish(),
        records,
    })
}

/// Kept halves measured first: each sent half collapses to `H^θ|x>`.
fn measure_first(basis: Basis, cfg: &QpvConfig, rng: &mut SimRng) -> (bool, bool, BellOutcome) {
    let x0: bool = rng.random();
    let x1: bool = rng.random();
    let a = apply_channel(&prepare_bb84(x0, basis), &cfg.channel_v0, rng);
    let b = apply_channel(&prepare_bb84(x1, basis), &cfg.channel_v1, rng);
    let joint = a.zip(b).map(|(a, b)| tensor(&a, &b));
    let announced = bell_measure_lossy(joint.as_ref(), &cfg.detector, rng);
    (x0, x1, announced)
}

/// Prover measures the sent halves of `|Φ⁺>(k0,s0) ⊗ |Φ⁺>(s1,k1)` first;
/// the verifiers then measure `(k0, k1)` in the post-measurement state.
fn measure_last(basis: Basis, cfg: &QpvConfig, rng: &mut SimRng) -> (bool, bool, BellOutcome) {
    let phi = BellOutcome::PhiPlus.state().expect("Bell state");
    let mut state = FourQubitState::from_pairs(&phi, &phi);

    let channels = [cfg.channel_v0, cfg.channel_v1];
    let mut arrived = true;
    for (ch, qubit) in channels.iter().zip([1usize, 2]) {
        let u_loss: f64 = rng.random();
        let u_flip: f64 = rng.random();
        if u_loss >= ch.transmittance {
            arrived = false;
        } else if u_flip < ch.misalignment {
            state.rotate(qubit, ch.error_angle);
        }
    }

    let u_outcome: f64 = rng.random();
    let u_first: f64 = rng.random();
    let u_second: f64 = rng.random();
    let u_dark: f64 = rng.random();
    let u_pick: f64 = rng.random();
    let u_kept: f64 = rng.random();

    if !arrived {
        // Lost halves leave the kept photons maximally mixed.
        let x0 = u_kept < 0.5;
        let x1 = rng.random::<bool>();
        return (x0, x1, dark_event(&cfg.detector, u_dark, u_pick));
    }

    let branches: Vec<_> = BellOutcome::BELL.iter().map(|o| state.measure_middle(*o)).collect();
    let weights: Vec<f64> = branches.iter().map(|(p, _)| *p).collect();
    let k = sample_index(&weights, u_outcome);
    let outcome = BellOutcome::BELL[k];
    let kept = branches[k].1.expect("sampled branch has non-zero weight");

    let joint = kept.measure_probabilities(basis);
    let idx = sample_index(&joint, u_kept);
    let (x0, x1) = (idx & 0b10 != 0, idx & 0b01 != 0);

    let det = &cfg.detector;
    let announced = if u_first < det.efficiency && u_second < det.efficiency && det.detectable_outcomes.contains(outcome)
    {
        outcome
    } else {
        dark_event(det, u_dark, u_pick)
    };
    (x0, x1, announced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn psi_minus_in_z_is_anticorrelated() {
        let geom = Geometry::line(2.0, 1.0, 1e-9).unwrap();
        for order in [MeasurementOrder::Before, MeasurementOrder::After] {
            let run = run_entanglement_based_session(&geom, &QpvConfig::default(), order, &mut seeded(8), 20_000).unwrap();
            let mut seen = 0;
            for r in run.records.iter().filter(|r| r.basis == Basis::Z && r.announced == BellOutcome::PsiMinus) {
                assert_ne!(r.x0, r.x1);
                seen += 1;
            }
            assert!(seen > 1000);
            assert_eq!(run.report.error_rate, Some(0.0));
        }
    }

    #[test]
    fn lossy_after_order_is_silent() {
        let geom = Geometry::line(2.0, 1.0, 1e-9).unwrap();
        let mut cfg = QpvConfig::default();
        cfg.channel_v1.transmittance = 0.0;
        let run = run_entanglement_based_session(&geom, &cfg, MeasurementOrder::After, &mut seeded(9), 1000).unwrap();
        assert_eq!(run.report.detections, 0);
        assert_eq!(run.report.error_rate, None);
        assert!(!run.report.accepted);
    }
}
