//! Coalitions of two adversaries standing in for the prover.
//!
//! `E0` sits between `V0` and the claimed position, `E1` between `V1` and
//! the claimed position. Each intercepts the qubit from its verifier, acts on
//! it locally, sends a classical message to its partner and answers the
//! verifiers once it holds both results. Photons are taken before any channel
//! loss, which only helps the adversaries.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::analytic::{predicted_rates, AnalyticRates, AttackState};
use crate::quantum::{sample_index, Basis, BellOutcome, FourQubitState, OutcomeSet, QubitState};
use crate::qpv::{
    consistency_check, lateness, run_qpv_session, timing_ok, Geometry, Point, Prover, ProverResponse, QpvConfig,
    QpvError, QpvReport, RoundContext, Schedule,
};
use crate::rng::SimRng;

/// Confidence multiplier for the reported half-width.
const SIGMAS: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("adversaries cannot answer in time: lateness {lateness:?} exceeds tolerance {tolerance}")]
    TimingInfeasible { lateness: Vec<f64>, tolerance: f64 },
    #[error("strategy reports {0} which the prover's analyzer cannot produce")]
    UnresolvableReport(BellOutcome),
    #[error(transparent)]
    Qpv(#[from] QpvError),
}

/// Where the two adversaries stand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub positions: [Point; 2],
}

impl Placement {
    /// Each adversary halfway between its verifier and the claimed position.
    pub fn midpoints(geom: &Geometry) -> Self {
        let c = geom.claimed();
        let mid = |v: Point| Point::new(0.5 * (v.x + c.x), 0.5 * (v.y + c.y));
        let [v0, v1] = geom.senders();
        Self {
            positions: [mid(v0), mid(v1)],
        }
    }

    /// Arrival time of the coalition's answer at every verifier.
    ///
    /// An adversary can answer once it has its own intercept and its
    /// partner's message; each verifier hears whichever adversary is faster.
    pub fn response_times(&self, geom: &Geometry, schedule: &Schedule) -> Vec<f64> {
        let senders = geom.senders();
        let intercept: Vec<f64> = (0..2)
            .map(|i| schedule.send_times[i] + senders[i].distance(&self.positions[i]))
            .collect();
        let gap = self.positions[0].distance(&self.positions[1]);
        let ready = [intercept[0].max(intercept[1] + gap), intercept[1].max(intercept[0] + gap)];
        geom.verifiers()
            .iter()
            .map(|v| {
                (0..2)
                    .map(|i| ready[i] + self.positions[i].distance(v))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// Checks the coalition beats every deadline before anything is simulated.
    pub fn check_feasible(&self, geom: &Geometry) -> Result<Vec<f64>, AttackError> {
        let arrival = geom.default_arrival();
        let schedule = crate::qpv::schedule_round(geom, arrival);
        let times = self.response_times(geom, &schedule);
        if timing_ok(geom, arrival, &times) {
            Ok(times)
        } else {
            Err(AttackError::TimingInfeasible {
                lateness: lateness(geom, arrival, &times),
                tolerance: geom.tolerance(),
            })
        }
    }
}

/// LOCC strategies: local measurements, one classical exchange, identical reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum LoccStrategy {
    /// Each adversary performs the two-outcome measurement
    /// `{|a_i*><a_i*|, 1 - |a_i*><a_i*|}` on its intercept, which steers the
    /// matching verifier's photon (in the entanglement-based picture) into
    /// `|a_i>`. Both report `reported` only when both succeed.
    PostSelected { target: AttackState, reported: BellOutcome },
    /// Announce a uniformly random resolvable outcome every round.
    RandomGuess,
    /// Measure both intercepts in a shared random basis and announce a
    /// resolvable outcome consistent with the two readings.
    BasisGuess,
}

impl LoccStrategy {
    /// The optimal orthogonal pair `|0> ⊗ |1>` announced as Ψ⁻.
    pub fn orthogonal() -> Self {
        LoccStrategy::PostSelected {
            target: AttackState::from_qubits(&QubitState::zero(), &QubitState::one()),
            reported: BellOutcome::PsiMinus,
        }
    }

    fn check(&self, resolvable: OutcomeSet) -> Result<(), AttackError> {
        match self {
            LoccStrategy::PostSelected { reported, .. } if !resolvable.contains(*reported) => {
                Err(AttackError::UnresolvableReport(*reported))
            }
            _ => Ok(()),
        }
    }

    /// Analytic prediction, available for the post-selected family.
    pub fn analytic(&self) -> Option<AnalyticRates> {
        match self {
            LoccStrategy::PostSelected { target, reported } if *reported == BellOutcome::PsiMinus => {
                Some(AnalyticRates::of(target))
            }
            LoccStrategy::PostSelected { target, reported } => Some(predicted_rates(target, *reported)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AttackReport {
    pub analytic: Option<AnalyticRates>,
    pub empirical_error_rate: Option<f64>,
    /// Three standard errors of the empirical rate.
    pub half_width: Option<f64>,
    pub detection_rate: f64,
    pub detections: u64,
    pub rounds: u64,
    pub session: QpvReport,
}

impl AttackReport {
    fn from_session(analytic: Option<AnalyticRates>, session: QpvReport) -> Self {
        Self {
            analytic,
            empirical_error_rate: session.error_rate,
            half_width: session.error_rate_sigma.map(|s| SIGMAS * s),
            detection_rate: session.detection_rate(),
            detections: session.detections,
            rounds: session.rounds,
            session,
        }
    }
}

fn uniform_pick(set: &[BellOutcome], u: f64) -> BellOutcome {
    if set.is_empty() {
        BellOutcome::NoDetection
    } else {
        set[((u * set.len() as f64) as usize).min(set.len() - 1)]
    }
}

struct LoccCoalition {
    strategy: LoccStrategy,
    times: Vec<f64>,
    resolvable: Vec<BellOutcome>,
}

impl Prover for LoccCoalition {
    fn respond(&mut self, ctx: &RoundContext<'_>, rng: &mut SimRng, response: &mut ProverResponse) {
        let [s0, s1] = ctx.photons;
        let report = match self.strategy {
            LoccStrategy::PostSelected { target, reported } => {
                let (a0, a1) = target.qubits();
                let p0 = a0.conj().inner(&s0).norm_sqr();
                let p1 = a1.conj().inner(&s1).norm_sqr();
                let hit0 = rng.random::<f64>() < p0;
                let hit1 = rng.random::<f64>() < p1;
                if hit0 && hit1 {
                    reported
                } else {
                    BellOutcome::NoDetection
                }
            }
            LoccStrategy::RandomGuess => uniform_pick(&self.resolvable, rng.random()),
            LoccStrategy::BasisGuess => {
                let basis = Basis::from_bit(rng.random());
                let y0 = rng.random::<f64>() < s0.measure_probability(basis, true);
                let y1 = rng.random::<f64>() < s1.measure_probability(basis, true);
                let options: Vec<BellOutcome> = self
                    .resolvable
                    .iter()
                    .copied()
                    .filter(|o| consistency_check(*o, y0, y1, basis))
                    .collect();
                uniform_pick(&options, rng.random())
            }
        };
        response.reports.resize(ctx.geometry.verifiers().len(), report);
        response.response_times.extend_from_slice(&self.times);
    }
}

/// Runs full sessions with the LOCC coalition answering for the prover.
pub fn simulate_locc_attack(
    strategy: &LoccStrategy,
    geom: &Geometry,
    placement: &Placement,
    cfg: &QpvConfig,
    n_rounds: u64,
    rng: &mut SimRng,
) -> Result<AttackReport, AttackError> {
    strategy.check(cfg.detector.detectable_outcomes)?;
    let times = placement.check_feasible(geom)?;
    let mut coalition = LoccCoalition {
        strategy: *strategy,
        times,
        resolvable: cfg.detector.detectable_outcomes.iter().collect(),
    };
    let session = run_qpv_session(geom, &mut coalition, cfg, rng, n_rounds)?;
    Ok(AttackReport::from_session(strategy.analytic(), session))
}

struct EprCoalition {
    shared: BellOutcome,
    times: Vec<f64>,
}

impl Prover for EprCoalition {
    fn respond(&mut self, ctx: &RoundContext<'_>, rng: &mut SimRng, response: &mut ProverResponse) {
        let pair = self.shared.state().expect("shared pair is a Bell state");
        let state = FourQubitState::from_sandwich(&ctx.photons[0], &pair, &ctx.photons[1]);
        let joint = state.measure_pairs();
        let flat: Vec<f64> = joint.iter().flatten().copied().collect();
        let k = sample_index(&flat, rng.random());
        let (first, second) = (BellOutcome::BELL[k / 4], BellOutcome::BELL[k % 4]);
        let report = if first == self.shared && second == self.shared {
            self.shared
        } else {
            BellOutcome::NoDetection
        };
        response.reports.resize(ctx.geometry.verifiers().len(), report);
        response.response_times.extend_from_slice(&self.times);
    }
}

/// Entanglement-swapping attack with a pre-shared pair in state `shared`.
///
/// `E0` Bell-measures (intercept from `V0`, her half of the pair) and `E1`
/// (his half, intercept from `V1`); they swap results and both announce
/// `shared` only when both saw `shared`.
pub fn simulate_epr_attack(
    geom: &Geometry,
    placement: &Placement,
    shared: BellOutcome,
    cfg: &QpvConfig,
    n_rounds: u64,
    rng: &mut SimRng,
) -> Result<AttackReport, AttackError> {
    if !cfg.detector.detectable_outcomes.contains(shared) {
        return Err(AttackError::UnresolvableReport(shared));
    }
    let times = placement.check_feasible(geom)?;
    let mut coalition = EprCoalition { shared, times };
    let session = run_qpv_session(geom, &mut coalition, cfg, rng, n_rounds)?;
    Ok(AttackReport::from_session(None, session))
}
