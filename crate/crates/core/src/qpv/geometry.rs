//! Verifier layout and light-speed timing (c = 1).

use serde::{Deserialize, Serialize};

use super::QpvError;

/// Relative slack absorbing floating-point rounding in timing comparisons.
const TIMING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub const fn on_line(x: f64) -> Self {
        Self { x, y: 0.0 }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Verifier positions, the claimed prover position and the timing tolerance τ.
///
/// The first two verifiers send qubits; every verifier listens for the
/// prover's broadcast.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Geometry {
    verifiers: Vec<Point>,
    claimed: Point,
    tolerance: f64,
}

impl Geometry {
    /// `V0` at 0, `V1` at `length`, prover claiming `claimed` in between.
    pub fn line(length: f64, claimed: f64, tolerance: f64) -> Result<Self, QpvError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(QpvError::Geometry(format!("length must be positive, got {length}")));
        }
        if !(claimed > 0.0 && claimed < length) {
            return Err(QpvError::Geometry(format!(
                "claimed position {claimed} must lie strictly between 0 and {length}"
            )));
        }
        Self::checked(
            vec![Point::on_line(0.0), Point::on_line(length)],
            Point::on_line(claimed),
            tolerance,
        )
    }

    /// Two sending verifiers plus up to one extra listener in the plane.
    pub fn planar(verifiers: Vec<Point>, claimed: Point, tolerance: f64) -> Result<Self, QpvError> {
        if !(2..=3).contains(&verifiers.len()) {
            return Err(QpvError::Geometry(format!(
                "need two or three verifiers, got {}",
                verifiers.len()
            )));
        }
        Self::checked(verifiers, claimed, tolerance)
    }

    fn checked(verifiers: Vec<Point>, claimed: Point, tolerance: f64) -> Result<Self, QpvError> {
        if !(tolerance.is_finite() && tolerance >= 0.0) {
            return Err(QpvError::Geometry(format!("tolerance must be non-negative, got {tolerance}")));
        }
        if !claimed.is_finite() || verifiers.iter().any(|v| !v.is_finite()) {
            return Err(QpvError::Geometry("positions must be finite".into()));
        }
        if verifiers.iter().any(|v| v.distance(&claimed) == 0.0) {
            return Err(QpvError::Geometry("claimed position coincides with a verifier".into()));
        }
        Ok(Self {
            verifiers,
            claimed,
            tolerance,
        })
    }

    pub fn verifiers(&self) -> &[Point] {
        &self.verifiers
    }

    /// The two verifiers that send qubits.
    pub fn senders(&self) -> [Point; 2] {
        [self.verifiers[0], self.verifiers[1]]
    }

    pub fn claimed(&self) -> Point {
        self.claimed
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self, QpvError> {
        if !(tolerance.is_finite() && tolerance >= 0.0) {
            return Err(QpvError::Geometry(format!("tolerance must be non-negative, got {tolerance}")));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    /// Earliest common arrival time at which no sender has to transmit before t = 0.
    pub fn default_arrival(&self) -> f64 {
        self.senders()
            .iter()
            .map(|v| v.distance(&self.claimed))
            .fold(0.0, f64::max)
    }

    /// When verifier `i` should hear an honest, instantaneous prover.
    pub fn expected_response(&self, i: usize, arrival: f64) -> f64 {
        arrival + self.verifiers[i].distance(&self.claimed)
    }
}

/// Transmission plan for one round.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Schedule {
    /// One entry per verifier; listeners get the time a qubit would have left them.
    pub send_times: Vec<f64>,
    /// When both qubits meet at the claimed position.
    pub arrival: f64,
}

/// Send times that make both qubits reach the claimed position at `arrival`.
pub fn schedule_round(geom: &Geometry, arrival: f64) -> Schedule {
    let send_times = geom
        .verifiers()
        .iter()
        .map(|v| arrival - v.distance(&geom.claimed()))
        .collect();
    Schedule { send_times, arrival }
}

/// Broadcast times at each verifier for a prover physically at `actual` who
/// answers `processing` after holding both qubits.
pub fn response_times(geom: &Geometry, schedule: &Schedule, actual: Point, processing: f64) -> Vec<f64> {
    let holds_both = geom
        .senders()
        .iter()
        .zip(&schedule.send_times)
        .map(|(v, t)| t + v.distance(&actual))
        .fold(f64::NEG_INFINITY, f64::max);
    geom.verifiers()
        .iter()
        .map(|v| holds_both + processing + actual.distance(v))
        .collect()
}

/// Signed lateness of each response relative to an honest prover at the claimed spot.
pub fn lateness(geom: &Geometry, arrival: f64, responses: &[f64]) -> Vec<f64> {
    responses
        .iter()
        .enumerate()
        .map(|(i, t)| t - geom.expected_response(i, arrival))
        .collect()
}

/// Step 4: every verifier heard the answer within τ of the expected time.
pub fn timing_ok(geom: &Geometry, arrival: f64, responses: &[f64]) -> bool {
    responses.len() == geom.verifiers().len()
        && responses.iter().enumerate().all(|(i, t)| {
            let expected = geom.expected_response(i, arrival);
            (t - expected).abs() <= geom.tolerance() + TIMING_SLACK * (1.0 + expected.abs())
        })
}

/// Largest lateness over all verifiers for a prover displaced to `actual`.
pub fn worst_lateness(geom: &Geometry, actual: Point, processing: f64) -> f64 {
    let arrival = geom.default_arrival();
    let schedule = schedule_round(geom, arrival);
    let times = response_times(geom, &schedule, actual, processing);
    lateness(geom, arrival, &times).into_iter().fold(f64::NEG_INFINITY, f64::max)
}
