//! Dispatches a resolved scenario to the protocol engines.

use std::time::Instant;

use qkdsim_core::adversary::{
    grid_minimum, minimize_avg_error_seeded, simulate_epr_attack, simulate_locc_attack, AttackError, AttackReport,
    GridMinimum, Minimum, Placement,
};
use qkdsim_core::mdi::{gain_scaling, run_mdi_session, MdiSessionConfig, MdiSessionResult, ScalingPoint};
use qkdsim_core::qpv::{
    run_entanglement_based_session, run_qpv_session, HonestProver, MeasurementOrder, Point, QpvError, QpvReport,
};
use qkdsim_core::relay::{rate_scaling_bb84, run_trusted_relay, LinkConfig, Relay, RelayError, RelayMode, RelayReport};
use qkdsim_core::rng::{seeded, substream};
use qkdsim_core::stats::chi_square_homogeneity;
use serde::Serialize;

use crate::error::CliError;
use crate::scenario::{
    BoundParams, EquivalenceParams, LinkParams, Parameters, QpvEprParams, QpvHonestParams, QpvLoccParams,
    RateCompareParams, Scenario,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub schema_version: u32,
    pub generator: String,
    pub scenario: Scenario,
    pub result: RunResult,
    /// Only field that differs between two runs of the same scenario.
    pub wall_clock_seconds: f64,
}

impl Report {
    /// The protocol step that aborted the session, if any.
    pub fn abort_reason(&self) -> Option<String> {
        let session = match &self.result {
            RunResult::Qpv(r) => r,
            RunResult::Attack(a) => &a.session,
            _ => return None,
        };
        session
            .abort
            .map(|a| format!("{:?} check failed in round {}", a.step, a.round))
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum RunResult {
    Mdi(MdiSessionResult),
    Relay(RelayReport),
    RateCompare(RateComparison),
    Qpv(QpvReport),
    Attack(AttackReport),
    Bound(BoundResult),
    Equivalence(EquivalenceResult),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RatePoint {
    pub protocol: &'static str,
    pub eta: f64,
    pub rate: f64,
}

/// `rate(to) / rate(from)` for consecutive efficiencies in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RateRatio {
    pub from: f64,
    pub to: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RateComparison {
    pub points: Vec<RatePoint>,
    pub mdi_ratios: Vec<RateRatio>,
    pub bb84_ratios: Vec<RateRatio>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundResult {
    pub minimum: Minimum,
    pub grid: Option<GridMinimum>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OrderComparison {
    pub order: MeasurementOrder,
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub consistent: bool,
    pub report: QpvReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EquivalenceResult {
    pub significance: f64,
    pub prepare_and_measure: QpvReport,
    pub entanglement_based: Vec<OrderComparison>,
    pub equivalent: bool,
}

/// Runs the scenario. Deterministic in everything but `wallClockSeconds`.
pub fn run_scenario(scenario: &Scenario) -> Result<Report, CliError> {
    let start = Instant::now();
    let seed = scenario.rng_seed;
    let result = match &scenario.parameters {
        Parameters::Link(p) => match scenario.kind {
            crate::scenario::ScenarioKind::Bb84Relay => RunResult::Relay(relay(p, seed)?),
            _ => RunResult::Mdi(run_mdi_session(&mdi_config(p, seed)).map_err(|e| CliError::validation("parameters", e))?),
        },
        Parameters::RateCompare(p) => RunResult::RateCompare(rate_compare(p, seed)?),
        Parameters::QpvHonest(p) => RunResult::Qpv(qpv_honest(p, seed)?),
        Parameters::QpvLocc(p) => RunResult::Attack(qpv_locc(p, seed)?),
        Parameters::QpvEpr(p) => RunResult::Attack(qpv_epr(p, seed)?),
        Parameters::Bound(p) => RunResult::Bound(bound(p, seed)?),
        Parameters::Equivalence(p) => RunResult::Equivalence(equivalence(p, seed)?),
    };
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        generator: concat!("qkdsim ", env!("CARGO_PKG_VERSION")).to_string(),
        scenario: scenario.clone(),
        result,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

fn mdi_config(p: &LinkParams, seed: u64) -> MdiSessionConfig {
    MdiSessionConfig {
        rounds: p.rounds,
        channel_a: p.channel_a,
        channel_b: p.channel_b,
        detector: p.detector,
        seed,
    }
}

fn relay(p: &LinkParams, seed: u64) -> Result<RelayReport, CliError> {
    run_trusted_relay(&Relay::new(RelayMode::TrustedBb84), &mdi_config(p, seed)).map_err(|e| match e {
        RelayError::EmptyKey(_) => CliError::Abort(e.to_string()),
        other => CliError::validation("parameters", other),
    })
}

fn ratios(points: &[ScalingPoint]) -> Vec<RateRatio> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    sorted
        .windows(2)
        .map(|w| RateRatio {
            from: w[0].eta,
            to: w[1].eta,
            ratio: w[1].rate / w[0].rate,
        })
        .collect()
}

fn rate_compare(p: &RateCompareParams, seed: u64) -> Result<RateComparison, CliError> {
    let mdi_cfg = MdiSessionConfig {
        rounds: p.rounds,
        channel_a: p.channel,
        channel_b: p.channel,
        detector: p.detector,
        seed,
    };
    let mdi = gain_scaling(&mdi_cfg, &p.etas).map_err(|e| CliError::validation("parameters", e))?;
    let link = LinkConfig {
        rounds: p.rounds,
        channel: p.channel,
        detector: p.detector,
    };
    let bb84 = rate_scaling_bb84(&link, seed, &p.etas).map_err(|e| CliError::validation("parameters", e))?;
    let mut points = Vec::with_capacity(2 * p.etas.len());
    for (m, b) in mdi.iter().zip(&bb84) {
        points.push(RatePoint {
            protocol: "mdi",
            eta: m.eta,
            rate: m.rate,
        });
        points.push(RatePoint {
            protocol: "bb84",
            eta: b.eta,
            rate: b.rate,
        });
    }
    Ok(RateComparison {
        points,
        mdi_ratios: ratios(&mdi),
        bb84_ratios: ratios(&bb84),
    })
}

fn qpv_err(e: QpvError) -> CliError {
    CliError::validation("parameters", e)
}

fn qpv_honest(p: &QpvHonestParams, seed: u64) -> Result<QpvReport, CliError> {
    let geom = p.geometry.build()?;
    let position = p.prover.position.map(|[x, y]| Point::new(x, y)).unwrap_or(geom.claimed());
    let mut prover = HonestProver {
        position,
        processing_delay: p.prover.processing_delay,
    };
    run_qpv_session(&geom, &mut prover, &p.protocol, &mut seeded(seed), p.rounds).map_err(qpv_err)
}

fn placement(geom: &qkdsim_core::qpv::Geometry, spec: Option<[[f64; 2]; 2]>) -> Placement {
    match spec {
        Some([a, b]) => Placement {
            positions: [Point::new(a[0], a[1]), Point::new(b[0], b[1])],
        },
        None => Placement::midpoints(geom),
    }
}

fn attack_err(e: AttackError) -> CliError {
    match e {
        AttackError::TimingInfeasible { .. } => CliError::Abort(format!("Timing: {e}")),
        other => CliError::validation("parameters", other),
    }
}

fn qpv_locc(p: &QpvLoccParams, seed: u64) -> Result<AttackReport, CliError> {
    let geom = p.geometry.build()?;
    simulate_locc_attack(
        &p.strategy.strategy(),
        &geom,
        &placement(&geom, p.placement),
        &p.protocol,
        p.rounds,
        &mut seeded(seed),
    )
    .map_err(attack_err)
}

fn qpv_epr(p: &QpvEprParams, seed: u64) -> Result<AttackReport, CliError> {
    let geom = p.geometry.build()?;
    simulate_epr_attack(&geom, &placement(&geom, p.placement), p.shared, &p.protocol, p.rounds, &mut seeded(seed))
        .map_err(attack_err)
}

fn bound(p: &BoundParams, seed: u64) -> Result<BoundResult, CliError> {
    let minimum = minimize_avg_error_seeded(p.budget, seed).map_err(|e| CliError::validation("parameters.budget", e))?;
    let grid = (p.grid_divisions >= 2).then(|| grid_minimum(p.grid_divisions));
    Ok(BoundResult { minimum, grid })
}

fn equivalence(p: &EquivalenceParams, seed: u64) -> Result<EquivalenceResult, CliError> {
    let geom = p.geometry.build()?;
    let pm = run_qpv_session(
        &geom,
        &mut HonestProver::at_claim(&geom),
        &p.protocol,
        &mut substream(seed, 0),
        p.rounds,
    )
    .map_err(qpv_err)?;
    let mut entanglement_based = Vec::new();
    for (k, order) in [MeasurementOrder::Before, MeasurementOrder::After].into_iter().enumerate() {
        let run = run_entanglement_based_session(&geom, &p.protocol, order, &mut substream(seed, 1 + k as u64), p.rounds)
            .map_err(qpv_err)?;
        let test = chi_square_homogeneity(pm.joint_counts.as_slice(), run.report.joint_counts.as_slice());
        entanglement_based.push(OrderComparison {
            order,
            statistic: test.statistic,
            degrees_of_freedom: test.degrees_of_freedom,
            p_value: test.p_value,
            consistent: test.passes(p.significance),
            report: run.report,
        });
    }
    Ok(EquivalenceResult {
        significance: p.significance,
        equivalent: entanglement_based.iter().all(|c| c.consistent),
        prepare_and_measure: pm,
        entanglement_based,
    })
}
