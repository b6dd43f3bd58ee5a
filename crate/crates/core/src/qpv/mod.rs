//! Position verification with a Bell-state measurement.
//!
//! Two verifiers secretly agree on bits `x0`, `x1` and a shared basis θ,
//! send `H^θ|x0>` and `H^θ|x1>` so that both reach the claimed position at
//! the same instant, and listen for the prover's broadcast Bell outcome.
//! A round aborts the session when a verifier hears the answer at the wrong
//! time or when verifiers heard different answers. Over the detected rounds
//! the error rate E_R counts reports that the transmitted product state
//! could not have produced.

mod entangled;
mod geometry;

use std::ops::ControlFlow;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantum::{
    apply_channel, bell_measure_lossy, bell_outcome_probs, prepare_bb84, tensor, Basis, BellOutcome, ChannelModel,
    DetectorModel, QuantumError, QubitState,
};
use crate::rng::SimRng;
use crate::stats::binomial_sigma;

pub use entangled::{run_entanglement_based_session, EntangledRun, MeasurementOrder, VerifierRecord};
pub use geometry::{
    lateness, response_times, schedule_round, timing_ok, worst_lateness, Geometry, Point, Schedule,
};

/// Reports whose analytic probability is at or below this count as impossible.
pub const CONSISTENCY_EPSILON: f64 = 1e-12;

/// Acceptance threshold on E_R: just under the LOCC attack floor of 1/4.
pub const DEFAULT_THRESHOLD: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpvError {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("a session needs at least one round")]
    ZeroRounds,
    #[error("threshold must lie in [0, 1], got {0}")]
    Threshold(f64),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

/// Step 6 rule: could `H^θ|x0> ⊗ H^θ|x1>` have produced `outcome`?
///
/// `NoDetection` carries no information and is always consistent.
pub fn consistency_check(outcome: BellOutcome, x0: bool, x1: bool, basis: Basis) -> bool {
    if !outcome.is_detection() {
        return true;
    }
    let state = tensor(&prepare_bb84(x0, basis), &prepare_bb84(x1, basis));
    bell_outcome_probs(&state).get(outcome) > CONSISTENCY_EPSILON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct QpvConfig {
    #[serde(default)]
    pub channel_v0: ChannelModel,
    #[serde(default)]
    pub channel_v1: ChannelModel,
    /// The prover's analyzer; also the default apparatus of simulated adversaries.
    #[serde(default)]
    pub detector: DetectorModel,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Keep every round in the report.
    #[serde(default)]
    pub record_transcript: bool,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl Default for QpvConfig {
    fn default() -> Self {
        Self {
            channel_v0: ChannelModel::ideal(),
            channel_v1: ChannelModel::ideal(),
            detector: DetectorModel::default(),
            threshold: DEFAULT_THRESHOLD,
            record_transcript: false,
        }
    }
}

impl QpvConfig {
    pub fn with_channels(mut self, channel: ChannelModel) -> Self {
        self.channel_v0 = channel;
        self.channel_v1 = channel;
        self
    }

    pub fn validate(&self) -> Result<(), QpvError> {
        self.channel_v0.validate()?;
        self.channel_v1.validate()?;
        self.detector.validate()?;
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(QpvError::Threshold(self.threshold));
        }
        Ok(())
    }

    pub fn channels(&self) -> [ChannelModel; 2] {
        [self.channel_v0, self.channel_v1]
    }
}

/// What the prover (or whoever stands in for it) sees in one round.
pub struct RoundContext<'a> {
    pub geometry: &'a Geometry,
    pub schedule: &'a Schedule,
    /// Qubits as they left `V0` and `V1`.
    pub photons: [QubitState; 2],
    pub channels: [ChannelModel; 2],
    pub detector: &'a DetectorModel,
}

/// Per-verifier reports and the instants they reach each verifier.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProverResponse {
    pub reports: Vec<BellOutcome>,
    pub response_times: Vec<f64>,
}

impl ProverResponse {
    pub fn clear(&mut self) {
        self.reports.clear();
        self.response_times.clear();
    }
}

/// Anything that answers the verifiers in place of the prover.
pub trait Prover {
    /// Fills `response` with one report and one arrival time per verifier.
    fn respond(&mut self, ctx: &RoundContext<'_>, rng: &mut SimRng, response: &mut ProverResponse);
}

/// Honest prover: Bell measurement on whatever arrives, immediate broadcast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HonestProver {
    pub position: Point,
    pub processing_delay: f64,
}

impl HonestProver {
    pub fn at_claim(geom: &Geometry) -> Self {
        Self {
            position: geom.claimed(),
            processing_delay: 0.0,
        }
    }
}

impl Prover for HonestProver {
    fn respond(&mut self, ctx: &RoundContext<'_>, rng: &mut SimRng, response: &mut ProverResponse) {
        let a = apply_channel(&ctx.photons[0], &ctx.channels[0], rng);
        let b = apply_channel(&ctx.photons[1], &ctx.channels[1], rng);
        let joint = a.zip(b).map(|(a, b)| tensor(&a, &b));
        let outcome = bell_measure_lossy(joint.as_ref(), ctx.detector, rng);
        let n = ctx.geometry.verifiers().len();
        response.reports.resize(n, outcome);
        response
            .response_times
            .extend(response_times(ctx.geometry, ctx.schedule, self.position, self.processing_delay));
    }
}

/// Ignores the qubits and announces a uniformly random resolvable outcome on time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomProver {
    pub position: Point,
}

impl Prover for RandomProver {
    fn respond(&mut self, ctx: &RoundContext<'_>, rng: &mut SimRng, response: &mut ProverResponse) {
        let options: Vec<BellOutcome> = ctx.detector.detectable_outcomes.iter().collect();
        let outcome = if options.is_empty() {
            BellOutcome::NoDetection
        } else {
            options[rng.random_range(0..options.len())]
        };
        response.reports.resize(ctx.geometry.verifiers().len(), outcome);
        response
            .response_times
            .extend(response_times(ctx.geometry, ctx.schedule, self.position, 0.0));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProtocolStep {
    /// Step 4: a response arrived at a time inconsistent with the claimed position.
    Timing,
    /// Step 5: verifiers received different results.
    CrossVerifier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Abort {
    pub step: ProtocolStep,
    /// Zero-based index of the offending round.
    pub round: u64,
}

/// Counts over `(θ, x0, x1, first verifier's report)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JointCounts(Vec<u64>);

impl Default for JointCounts {
    fn default() -> Self {
        Self(vec![0; Self::BINS])
    }
}

impl JointCounts {
    pub const BINS: usize = 2 * 2 * 2 * 5;

    pub fn index(basis: Basis, x0: bool, x1: bool, outcome: BellOutcome) -> usize {
        ((usize::from(basis.bit()) * 2 + usize::from(x0)) * 2 + usize::from(x1)) * 5 + outcome.index()
    }

    pub fn add(&mut self, basis: Basis, x0: bool, x1: bool, outcome: BellOutcome) {
        self.0[Self::index(basis, x0, x1, outcome)] += 1;
    }

    pub fn get(&self, basis: Basis, x0: bool, x1: bool, outcome: BellOutcome) -> u64 {
        self.0[Self::index(basis, x0, x1, outcome)]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct QpvRoundRecord {
    pub x0: bool,
    pub x1: bool,
    pub basis: Basis,
    pub send_times: Vec<f64>,
    pub arrival_deadline: f64,
    pub response_times: Vec<f64>,
    /// One entry per verifier, `V0` first.
    pub reports: Vec<BellOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct QpvReport {
    /// Rounds actually executed (fewer than requested after an abort).
    pub rounds: u64,
    pub detections: u64,
    pub errors: u64,
    /// E_R over detected rounds; `None` when nothing was detected.
    pub error_rate: Option<f64>,
    /// One standard error of `error_rate`.
    pub error_rate_sigma: Option<f64>,
    pub timing_ok: bool,
    pub consistency_ok: bool,
    pub accepted: bool,
    pub threshold: f64,
    pub abort: Option<Abort>,
    pub joint_counts: JointCounts,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub transcript: Vec<QpvRoundRecord>,
}

impl QpvReport {
    pub fn detection_rate(&self) -> f64 {
        if self.rounds == 0 {
            0.0
        } else {
            self.detections as f64 / self.rounds as f64
        }
    }
}

/// Steps 4 to 6 applied round by round.
pub(crate) struct Tally<'a> {
    geometry: &'a Geometry,
    schedule: &'a Schedule,
    threshold: f64,
    record: bool,
    rounds: u64,
    detections: u64,
    errors: u64,
    counts: JointCounts,
    abort: Option<Abort>,
    transcript: Vec<QpvRoundRecord>,
}

impl<'a> Tally<'a> {
    pub(crate) fn new(geometry: &'a Geometry, schedule: &'a Schedule, threshold: f64, record: bool) -> Self {
        Self {
            geometry,
            schedule,
            threshold,
            record,
            rounds: 0,
            detections: 0,
            errors: 0,
            counts: JointCounts::default(),
            abort: None,
            transcript: Vec::new(),
        }
    }

    pub(crate) fn observe(&mut self, x0: bool, x1: bool, basis: Basis, response: &ProverResponse) -> ControlFlow<()> {
        let round = self.rounds;
        self.rounds += 1;
        if self.record {
            self.transcript.push(QpvRoundRecord {
                x0,
                x1,
                basis,
                send_times: self.schedule.send_times.clone(),
                arrival_deadline: self.schedule.arrival,
                response_times: response.response_times.clone(),
                reports: response.reports.clone(),
            });
        }
        if !timing_ok(self.geometry, self.schedule.arrival, &response.response_times) {
            self.abort = Some(Abort {
                step: ProtocolStep::Timing,
                round,
            });
            return ControlFlow::Break(());
        }
        let first = response.reports.first().copied().unwrap_or(BellOutcome::NoDetection);
        if response.reports.len() != self.geometry.verifiers().len() || response.reports.iter().any(|r| *r != first) {
            self.abort = Some(Abort {
                step: ProtocolStep::CrossVerifier,
                round,
            });
            return ControlFlow::Break(());
        }
        self.counts.add(basis, x0, x1, first);
        if first.is_detection() {
            self.detections += 1;
            if !consistency_check(first, x0, x1, basis) {
                self.errors += 1;
            }
        }
        ControlFlow::Continue(())
    }

    pub(crate) fn finish(self) -> QpvReport {
        let error_rate = (self.detections > 0).then(|| self.errors as f64 / self.detections as f64);
        let error_rate_sigma = error_rate.map(|p| binomial_sigma(p, self.detections));
        let timing_ok = !matches!(self.abort, Some(Abort { step: ProtocolStep::Timing, .. }));
        let consistency_ok = !matches!(
            self.abort,
            Some(Abort {
                step: ProtocolStep::CrossVerifier,
                ..
            })
        );
        let accepted = self.abort.is_none() && error_rate.is_some_and(|e| e < self.threshold);
        QpvReport {
            rounds: self.rounds,
            detections: self.detections,
            errors: self.errors,
            error_rate,
            error_rate_sigma,
            timing_ok,
            consistency_ok,
            accepted,
            threshold: self.threshold,
            abort: self.abort,
            joint_counts: self.counts,
            transcript: self.transcript,
        }
    }
}

/// Runs `n_rounds` of the prepare-and-measure protocol against `prover`.
pub fn run_qpv_session<P: Prover + ?Sized>(
    geom: &Geometry,
    prover: &mut P,
    cfg: &QpvConfig,
    rng: &mut SimRng,
    n_rounds: u64,
) -> Result<QpvReport, QpvError> {
    if n_rounds == 0 {
        return Err(QpvError::ZeroRounds);
    }
    cfg.validate()?;
    let schedule = schedule_round(geom, geom.default_arrival());
    let channels = cfg.channels();
    let mut tally = Tally::new(geom, &schedule, cfg.threshold, cfg.record_transcript);
    let mut response = ProverResponse::default();
    for _ in 0..n_rounds {
        // Step 1: private agreement on x0, x1 and θ.
        let x0: bool = rng.random();
        let x1: bool = rng.random();
        let basis = Basis::from_bit(rng.random());
        let ctx = RoundContext {
            geometry: geom,
            schedule: &schedule,
            photons: [prepare_bb84(x0, basis), prepare_bb84(x1, basis)],
            channels,
            detector: &cfg.detector,
        };
        response.clear();
        prover.respond(&ctx, rng, &mut response);
        if tally.observe(x0, x1, basis, &response).is_break() {
            break;
        }
    }
    Ok(tally.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn consistency_examples() {
        assert!(!consistency_check(BellOutcome::PsiMinus, false, false, Basis::Z));
        assert!(consistency_check(BellOutcome::PsiMinus, false, true, Basis::Z));
        assert!(!consistency_check(BellOutcome::PsiPlus, false, true, Basis::X));
        assert!(consistency_check(BellOutcome::NoDetection, false, false, Basis::Z));
    }

    #[test]
    fn exactly_two_outcomes_consistent_per_input() {
        for basis in [Basis::Z, Basis::X] {
            for x0 in [false, true] {
                for x1 in [false, true] {
                    let n = BellOutcome::BELL
                        .iter()
                        .filter(|o| consistency_check(**o, x0, x1, basis))
                        .count();
                    assert_eq!(n, 2);
                }
            }
        }
    }

    #[test]
    fn honest_noiseless_is_error_free() {
        let geom = Geometry::line(2.0, 1.0, 1e-9).unwrap();
        let mut prover = HonestProver::at_claim(&geom);
        let report = run_qpv_session(&geom, &mut prover, &QpvConfig::default(), &mut seeded(1), 10_000).unwrap();
        assert_eq!(report.error_rate, Some(0.0));
        assert!(report.accepted);
        assert!(report.detections > 0);
    }

    struct Splitter;

    impl Prover for Splitter {
        fn respond(&mut self, ctx: &RoundContext<'_>, _rng: &mut SimRng, response: &mut ProverResponse) {
            response.reports.extend([BellOutcome::PsiPlus, BellOutcome::PsiMinus]);
            response
                .response_times
                .extend(response_times(ctx.geometry, ctx.schedule, ctx.geometry.claimed(), 0.0));
        }
    }

    #[test]
    fn split_reports_abort_at_cross_check() {
        let geom = Geometry::line(2.0, 1.0, 1e-9).unwrap();
        let report = run_qpv_session(&geom, &mut Splitter, &QpvConfig::default(), &mut seeded(2), 100).unwrap();
        assert_eq!(
            report.abort,
            Some(Abort {
                step: ProtocolStep::CrossVerifier,
                round: 0
            })
        );
        assert!(!report.consistency_ok && report.timing_ok && !report.accepted);
    }

    #[test]
    fn late_prover_aborts_at_timing() {
        let geom = Geometry::line(2.0, 1.0, 0.1).unwrap();
        let mut prover = HonestProver {
            position: geom.claimed(),
            processing_delay: 0.2,
        };
        let report = run_qpv_session(&geom, &mut prover, &QpvConfig::default(), &mut seeded(3), 100).unwrap();
        assert_eq!(report.abort.map(|a| a.step), Some(ProtocolStep::Timing));
        assert!(!report.timing_ok && !report.accepted);
    }

    #[test]
    fn zero_rounds_rejected() {
        let geom = Geometry::line(2.0, 1.0, 0.0).unwrap();
        let mut prover = HonestProver::at_claim(&geom);
        let err = run_qpv_session(&geom, &mut prover, &QpvConfig::default(), &mut seeded(4), 0);
        assert_eq!(err, Err(QpvError::ZeroRounds));
    }

    #[test]
    fn transcript_recorded_on_request() {
        let geom = Geometry::line(2.0, 1.0, 0.0).unwrap();
        let cfg = QpvConfig {
            record_transcript: true,
            ..QpvConfig::default()
        };
        let mut prover = HonestProver::at_claim(&geom);
        let report = run_qpv_session(&geom, &mut prover, &cfg, &mut seeded(5), 50).unwrap();
        assert_eq!(report.transcript.len(), 50);
        assert!(report.transcript.iter().all(|r| r.reports[0] == r.reports[1]));
    }
}
