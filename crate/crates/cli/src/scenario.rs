//! Scenario files: parsing, defaulting and validation.
//!
//! A scenario is a JSON object `{"kind", "rngSeed", "parameters"}`. The
//! shape of `parameters` depends on `kind`; every nested record rejects
//! unknown fields. After [`parse_scenario`] every optional value has been
//! filled in, so the serialized scenario fully describes the run.

use std::path::Path;

use qkdsim_core::adversary::{AttackState, LoccStrategy, Placement, DEFAULT_START_SEED};
use qkdsim_core::qpv::{Geometry, Point, QpvConfig};
use qkdsim_core::quantum::{BellOutcome, ChannelModel, DetectorModel, QuantumError};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SEED_ENV: &str = "QKDSIM_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Mdi,
    Bb84Relay,
    RateCompare,
    QpvHonest,
    QpvLocc,
    QpvEpr,
    QpvBound,
    QpvEquivalence,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub rng_seed: u64,
    pub parameters: Parameters,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Parameters {
    Link(LinkParams),
    RateCompare(RateCompareParams),
    QpvHonest(QpvHonestParams),
    QpvLocc(QpvLoccParams),
    QpvEpr(QpvEprParams),
    Bound(BoundParams),
    Equivalence(EquivalenceParams),
}

/// Used by both `mdi` and `bb84-relay`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LinkParams {
    pub rounds: u64,
    #[serde(default)]
    pub channel_a: ChannelModel,
    #[serde(default)]
    pub channel_b: ChannelModel,
    #[serde(default)]
    pub detector: DetectorModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RateCompareParams {
    pub rounds: u64,
    #[serde(default)]
    pub etas: Vec<f64>,
    /// Applied to every arm; detector efficiency is overridden per point.
    #[serde(default)]
    pub channel: ChannelModel,
    #[serde(default)]
    pub detector: DetectorModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub enum GeometrySpec {
    /// Two verifiers at 0 and `length`, claim at `claimed` on the segment.
    #[serde(rename_all = "camelCase")]
    Line {
        length: f64,
        claimed: f64,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    /// Two or three verifiers in the plane; the first two send photons.
    #[serde(rename_all = "camelCase")]
    Planar {
        verifiers: Vec<[f64; 2]>,
        claimed: [f64; 2],
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
}

fn default_tolerance() -> f64 {
    1e-9
}

impl Default for GeometrySpec {
    fn default() -> Self {
        GeometrySpec::Line {
            length: 2.0,
            claimed: 1.0,
            tolerance: default_tolerance(),
        }
    }
}

impl GeometrySpec {
    pub fn build(&self) -> Result<Geometry, CliError> {
        let pt = |p: &[f64; 2]| Point::new(p[0], p[1]);
        let built = match self {
            GeometrySpec::Line {
                length,
                claimed,
                tolerance,
            } => Geometry::line(*length, *claimed, *tolerance),
            GeometrySpec::Planar {
                verifiers,
                claimed,
                tolerance,
            } => Geometry::planar(verifiers.iter().map(pt).collect(), pt(claimed), *tolerance),
        };
        built.map_err(|e| CliError::validation("parameters.geometry", e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProverSpec {
    /// Defaults to the claimed position.
    #[serde(default)]
    pub position: Option<[f64; 2]>,
    #[serde(default)]
    pub processing_delay: f64,
}

impl Default for ProverSpec {
    fn default() -> Self {
        Self {
            position: None,
            processing_delay: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct QpvHonestParams {
    pub rounds: u64,
    #[serde(default)]
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub protocol: QpvConfig,
    #[serde(default)]
    pub prover: ProverSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub enum StrategySpec {
    /// `|0> ⊗ |1>` announced as Ψ⁻.
    #[default]
    Orthogonal,
    RandomGuess,
    BasisGuess,
    /// Target `(cos t0, e^{iφ0} sin t0) ⊗ (cos t1, e^{iφ1} sin t1)`.
    #[serde(rename_all = "camelCase")]
    PostSelected {
        angles: [f64; 4],
        #[serde(default = "default_reported")]
        reported: BellOutcome,
    },
}

fn default_reported() -> BellOutcome {
    BellOutcome::PsiMinus
}

fn default_shared() -> BellOutcome {
    BellOutcome::PsiPlus
}

impl StrategySpec {
    pub fn strategy(&self) -> LoccStrategy {
        match *self {
            StrategySpec::Orthogonal => LoccStrategy::orthogonal(),
            StrategySpec::RandomGuess => LoccStrategy::RandomGuess,
            StrategySpec::BasisGuess => LoccStrategy::BasisGuess,
            StrategySpec::PostSelected { angles, reported } => LoccStrategy::PostSelected {
                target: AttackState::from_angles(angles[0], angles[1], angles[2], angles[3]),
                reported,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct QpvLoccParams {
    pub rounds: u64,
    #[serde(default)]
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub protocol: QpvConfig,
    #[serde(default)]
    pub strategy: StrategySpec,
    /// Adversary positions; defaults to the verifier-to-claim midpoints.
    #[serde(default)]
    pub placement: Option<[[f64; 2]; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct QpvEprParams {
    pub rounds: u64,
    #[serde(default)]
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub protocol: QpvConfig,
    #[serde(default = "default_shared")]
    pub shared: BellOutcome,
    #[serde(default)]
    pub placement: Option<[[f64; 2]; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BoundParams {
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Grid cross-check with spacing π / divisions; omitted or 0 skips it.
    #[serde(default)]
    pub grid_divisions: usize,
}

pub fn default_budget() -> usize {
    10_000
}

impl Default for BoundParams {
    fn default() -> Self {
        Self {
            budget: default_budget(),
            grid_divisions: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct EquivalenceParams {
    pub rounds: u64,
    #[serde(default)]
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub protocol: QpvConfig,
    #[serde(default = "default_significance")]
    pub significance: f64,
}

fn default_significance() -> f64 {
    0.001
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RawScenario {
    kind: ScenarioKind,
    #[serde(default)]
    rng_seed: Option<u64>,
    #[serde(default)]
    parameters: Option<serde_json::Value>,
}

/// Reads and validates a scenario file.
///
/// The seed is taken from `seed_override`, then the file's `rngSeed`, then
/// the `QKDSIM_SEED` environment variable.
pub fn parse_scenario(path: &Path, seed_override: Option<u64>) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario_str(&text, path, seed_override)
}

pub fn parse_scenario_str(text: &str, path: &Path, seed_override: Option<u64>) -> Result<Scenario, CliError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| syntax_error(text, path, &e))?;
    scenario_from_value(value, seed_override)
}

/// Builds a scenario from an already-parsed JSON value.
pub fn scenario_from_value(value: serde_json::Value, seed_override: Option<u64>) -> Result<Scenario, CliError> {
    let raw: RawScenario = from_value(value, "")?;
    let rng_seed = match seed_override.or(raw.rng_seed) {
        Some(seed) => seed,
        None => env_seed()?.ok_or_else(|| {
            CliError::validation("rngSeed", format!("missing; set it in the file, pass --seed, or set {SEED_ENV}"))
        })?,
    };
    let params = raw.parameters.unwrap_or(serde_json::Value::Object(Default::default()));
    let parameters = match raw.kind {
        ScenarioKind::Mdi | ScenarioKind::Bb84Relay => Parameters::Link(from_value(params, "parameters")?),
        ScenarioKind::RateCompare => Parameters::RateCompare(from_value(params, "parameters")?),
        ScenarioKind::QpvHonest => Parameters::QpvHonest(from_value(params, "parameters")?),
        ScenarioKind::QpvLocc => Parameters::QpvLocc(from_value(params, "parameters")?),
        ScenarioKind::QpvEpr => Parameters::QpvEpr(from_value(params, "parameters")?),
        ScenarioKind::QpvBound => Parameters::Bound(from_value(params, "parameters")?),
        ScenarioKind::QpvEquivalence => Parameters::Equivalence(from_value(params, "parameters")?),
    };
    let mut scenario = Scenario {
        kind: raw.kind,
        rng_seed,
        parameters,
    };
    scenario.resolve()?;
    Ok(scenario)
}

/// Reads the fallback seed from the environment, if set.
pub fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::validation(SEED_ENV, format!("not an unsigned integer: {s:?}"))),
        Err(_) => Ok(None),
    }
}

pub fn default_bound_seed() -> u64 {
    DEFAULT_START_SEED
}

fn from_value<T: DeserializeOwned>(value: serde_json::Value, prefix: &str) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let field = match (prefix.is_empty(), inner == ".") {
            (true, _) => inner,
            (false, true) => prefix.to_string(),
            (false, false) => format!("{prefix}.{inner}"),
        };
        CliError::validation(field, e.into_inner())
    })
}

fn syntax_error(text: &str, path: &Path, e: &serde_json::Error) -> CliError {
    let context = text.lines().nth(e.line().saturating_sub(1)).unwrap_or("").to_string();
    CliError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
        context,
    }
}

fn quantum_field(prefix: &str, err: QuantumError) -> CliError {
    match err {
        QuantumError::OutOfRange { field, .. } => CliError::validation(format!("{prefix}.{field}"), err),
        QuantumError::NoDetectionNotResolvable => {
            CliError::validation(format!("{prefix}.detectableOutcomes"), err)
        }
        other => CliError::validation(prefix, other),
    }
}

fn check_rounds(rounds: u64) -> Result<(), CliError> {
    if rounds == 0 {
        return Err(CliError::validation("parameters.rounds", "must be at least 1"));
    }
    Ok(())
}

fn check_channel(prefix: &str, ch: &ChannelModel) -> Result<(), CliError> {
    ch.validate().map_err(|e| quantum_field(prefix, e))
}

fn check_detector(prefix: &str, det: &DetectorModel) -> Result<(), CliError> {
    det.validate().map_err(|e| quantum_field(prefix, e))
}

fn check_protocol(cfg: &QpvConfig) -> Result<(), CliError> {
    check_channel("parameters.protocol.channelV0", &cfg.channel_v0)?;
    check_channel("parameters.protocol.channelV1", &cfg.channel_v1)?;
    check_detector("parameters.protocol.detector", &cfg.detector)?;
    if !(0.0..=1.0).contains(&cfg.threshold) {
        return Err(CliError::validation(
            "parameters.protocol.threshold",
            format!("must lie in [0, 1], got {}", cfg.threshold),
        ));
    }
    Ok(())
}

fn resolve_placement(geom: &Geometry, placement: &mut Option<[[f64; 2]; 2]>) {
    if placement.is_none() {
        let p = Placement::midpoints(geom).positions;
        *placement = Some([[p[0].x, p[0].y], [p[1].x, p[1].y]]);
    }
}

fn check_reported(field: &str, outcome: BellOutcome, cfg: &QpvConfig) -> Result<(), CliError> {
    if !cfg.detector.detectable_outcomes.contains(outcome) {
        return Err(CliError::validation(
            field,
            format!("{outcome} is not among the detector's detectableOutcomes"),
        ));
    }
    Ok(())
}

impl Scenario {
    /// Validates every field and fills in position-dependent defaults.
    fn resolve(&mut self) -> Result<(), CliError> {
        match &mut self.parameters {
            Parameters::Link(p) => {
                check_rounds(p.rounds)?;
                check_channel("parameters.channelA", &p.channel_a)?;
                check_channel("parameters.channelB", &p.channel_b)?;
                check_detector("parameters.detector", &p.detector)?;
            }
            Parameters::RateCompare(p) => {
                check_rounds(p.rounds)?;
                check_channel("parameters.channel", &p.channel)?;
                check_detector("parameters.detector", &p.detector)?;
                for (i, eta) in p.etas.iter().enumerate() {
                    if !(*eta > 0.0 && *eta <= 1.0) {
                        return Err(CliError::validation(
                            format!("parameters.etas[{i}]"),
                            format!("must lie in (0, 1], got {eta}"),
                        ));
                    }
                }
            }
            Parameters::QpvHonest(p) => {
                check_rounds(p.rounds)?;
                check_protocol(&p.protocol)?;
                let geom = p.geometry.build()?;
                if p.prover.position.is_none() {
                    let c = geom.claimed();
                    p.prover.position = Some([c.x, c.y]);
                }
                if !(p.prover.processing_delay >= 0.0 && p.prover.processing_delay.is_finite()) {
                    return Err(CliError::validation(
                        "parameters.prover.processingDelay",
                        format!("must be finite and non-negative, got {}", p.prover.processing_delay),
                    ));
                }
            }
            Parameters::QpvLocc(p) => {
                check_rounds(p.rounds)?;
                check_protocol(&p.protocol)?;
                let geom = p.geometry.build()?;
                resolve_placement(&geom, &mut p.placement);
                if let StrategySpec::PostSelected { reported, .. } = p.strategy {
                    check_reported("parameters.strategy.postSelected.reported", reported, &p.protocol)?;
                }
            }
            Parameters::QpvEpr(p) => {
                check_rounds(p.rounds)?;
                check_protocol(&p.protocol)?;
                let geom = p.geometry.build()?;
                resolve_placement(&geom, &mut p.placement);
                if !p.shared.is_detection() {
                    return Err(CliError::validation("parameters.shared", "must be a Bell state"));
                }
                check_reported("parameters.shared", p.shared, &p.protocol)?;
            }
            Parameters::Bound(p) => {
                let minimum = 8 * 6 * 4;
                if p.budget < minimum {
                    return Err(CliError::validation(
                        "parameters.budget",
                        format!("must be at least {minimum}, got {}", p.budget),
                    ));
                }
                if p.grid_divisions == 1 || p.grid_divisions > 400 {
                    return Err(CliError::validation(
                        "parameters.gridDivisions",
                        format!("must be 0 (skip) or in 2..=400, got {}", p.grid_divisions),
                    ));
                }
            }
            Parameters::Equivalence(p) => {
                check_rounds(p.rounds)?;
                check_protocol(&p.protocol)?;
                p.geometry.build()?;
                if !(p.significance > 0.0 && p.significance < 1.0) {
                    return Err(CliError::validation(
                        "parameters.significance",
                        format!("must lie in (0, 1), got {}", p.significance),
                    ));
                }
            }
        }
        Ok(())
    }
}
