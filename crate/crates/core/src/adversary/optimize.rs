//! Numerical minimum of the basis-averaged attack error rate.
//!
//! The search runs over the four real angles `(t0, φ0, t1, φ1)` of
//! [`AttackState::from_angles`]. Nelder-Mead is restarted from seeded random
//! points; [`grid_minimum`] is the brute-force cross-check.

use std::cell::Cell;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use super::analytic::{avg_error_rate, AttackState};
use crate::rng::seeded;

const DIM: usize = 4;
/// Simplex values this close together count as converged.
const VALUE_TOLERANCE: f64 = 1e-15;
/// ...provided the simplex has also shrunk below this many radians.
const SIZE_TOLERANCE: f64 = 1e-7;
const RESTARTS: usize = 8;
/// Seed for the restart points used by [`minimize_avg_error`].
pub const DEFAULT_START_SEED: u64 = 0x005e_ed0f_b00d;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("budget of {budget} evaluations is too small (need at least {minimum})")]
    BudgetTooSmall { budget: usize, minimum: usize },
    #[error("no restart converged within {evaluations} evaluations (best value {best})")]
    NotConverged { best: f64, evaluations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Minimum {
    pub state: AttackState,
    /// `(t0, φ0, t1, φ1)` of the minimizer.
    pub angles: [f64; DIM],
    pub value: f64,
    pub evaluations: usize,
    pub restarts: usize,
}

struct Simplex {
    vertices: Vec<([f64; DIM], f64)>,
}

impl Simplex {
    fn sort(&mut self) {
        self.vertices.sort_by(|a, b| a.1.total_cmp(&b.1));
    }

    fn spread(&self) -> f64 {
        self.vertices[DIM].1 - self.vertices[0].1
    }

    fn size(&self) -> f64 {
        let best = self.vertices[0].0;
        self.vertices[1..]
            .iter()
            .map(|(v, _)| v.iter().zip(&best).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

fn lerp(from: &[f64; DIM], to: &[f64; DIM], t: f64) -> [f64; DIM] {
    let mut out = [0.0; DIM];
    for i in 0..DIM {
        out[i] = from[i] + t * (to[i] - from[i]);
    }
    out
}

struct LocalRun {
    point: [f64; DIM],
    value: f64,
    evaluations: usize,
    converged: bool,
}

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
fn nelder_mead<F: Fn(&[f64; DIM]) -> f64>(f: &F, start: [f64; DIM], step: f64, max_evals: usize) -> LocalRun {
    let evals = Cell::new(0usize);
    let eval = |x: &[f64; DIM]| {
        evals.set(evals.get() + 1);
        f(x)
    };
    let mut simplex = Simplex {
        vertices: Vec::with_capacity(DIM + 1),
    };
    let v = eval(&start);
    simplex.vertices.push((start, v));
    for i in 0..DIM {
        let mut x = start;
        x[i] += step;
        let v = eval(&x);
        simplex.vertices.push((x, v));
    }

    let mut converged = false;
    while evals.get() + DIM + 2 <= max_evals {
        simplex.sort();
        if simplex.spread() <= VALUE_TOLERANCE && simplex.size() <= SIZE_TOLERANCE {
            converged = true;
            break;
        }
        let mut centroid = [0.0; DIM];
        for (x, _) in &simplex.vertices[..DIM] {
            for i in 0..DIM {
                centroid[i] += x[i] / DIM as f64;
            }
        }
        let (worst, worst_value) = simplex.vertices[DIM];
        let second_worst = simplex.vertices[DIM - 1].1;
        let best = simplex.vertices[0].1;

        let reflected = lerp(&centroid, &worst, -1.0);
        let fr = eval(&reflected);
        if fr < best {
            let expanded = lerp(&centroid, &worst, -2.0);
            let fe = eval(&expanded);
            simplex.vertices[DIM] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < second_worst {
            simplex.vertices[DIM] = (reflected, fr);
        } else {
            // Outside contraction when the reflection helped a little, inside otherwise.
            let target = if fr < worst_value {
                lerp(&centroid, &reflected, 0.5)
            } else {
                lerp(&centroid, &worst, 0.5)
            };
            let fc = eval(&target);
            if fc < fr.min(worst_value) {
                simplex.vertices[DIM] = (target, fc);
            } else {
                let anchor = simplex.vertices[0].0;
                for vertex in simplex.vertices[1..].iter_mut() {
                    let x = lerp(&anchor, &vertex.0, 0.5);
                    *vertex = (x, eval(&x));
                }
            }
        }
    }
    simplex.sort();
    if !converged && simplex.spread() <= VALUE_TOLERANCE && simplex.size() <= SIZE_TOLERANCE {
        converged = true;
    }
    let (point, value) = simplex.vertices[0];
    LocalRun {
        point,
        value,
        evaluations: evals.get(),
        converged,
    }
}

fn objective(x: &[f64; DIM]) -> f64 {
    avg_error_rate(&AttackState::from_angles(x[0], x[1], x[2], x[3]))
}

/// Minimizes the basis-averaged error rate within `budget` objective evaluations.
///
/// The budget is split evenly over the restarts. Fails when no restart converges.
pub fn minimize_avg_error(budget: usize) -> Result<Minimum, OptimizeError> {
    minimize_avg_error_seeded(budget, DEFAULT_START_SEED)
}

/// As [`minimize_avg_error`], with the restart points drawn from `seed`.
pub fn minimize_avg_error_seeded(budget: usize, seed: u64) -> Result<Minimum, OptimizeError> {
    let minimum = RESTARTS * (DIM + 2) * 4;
    if budget < minimum {
        return Err(OptimizeError::BudgetTooSmall { budget, minimum });
    }
    let per_run = budget / RESTARTS;
    let mut rng = seeded(seed);
    let mut best: Option<LocalRun> = None;
    let mut total = 0;
    for _ in 0..RESTARTS {
        let start = [
            rng.random_range(0.0..FRAC_PI_2),
            rng.random_range(0.0..TAU),
            rng.random_range(0.0..FRAC_PI_2),
            rng.random_range(0.0..TAU),
        ];
        let run = nelder_mead(&objective, start, 0.3, per_run);
        total += run.evaluations;
        let better = match &best {
            None => true,
            Some(b) => (run.converged && !b.converged) || (run.converged == b.converged && run.value < b.value),
        };
        if better {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    if !best.converged {
        return Err(OptimizeError::NotConverged {
            best: best.value,
            evaluations: total,
        });
    }
    let [t0, p0, t1, p1] = best.point;
    Ok(Minimum {
        state: AttackState::from_angles(t0, p0, t1, p1),
        angles: best.point,
        value: best.value,
        evaluations: total,
        restarts: RESTARTS,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GridMinimum {
    pub value: f64,
    pub angles: [f64; DIM],
    pub resolution: f64,
    pub points: u64,
}

/// Exhaustive grid with spacing `π / divisions`: `t_i ∈ [0, π/2]`, `φ_i ∈ [0, 2π)`.
///
/// Evaluates the computational- and diagonal-basis rates separately from the
/// per-qubit quantities `|α|², |β|², |α ± β|²` and averages them.
pub fn grid_minimum(divisions: usize) -> GridMinimum {
    assert!(divisions >= 2, "need at least two divisions");
    let step = PI / divisions as f64;
    let t_steps = divisions / 2 + 1;
    let phi_steps = 2 * divisions;

    // Per-qubit factors: (|α|², |β|², |α+β|², |α-β|², t, φ).
    let mut table = Vec::with_capacity(t_steps * phi_steps);
    for i in 0..t_steps {
        let t = (i as f64 * step).min(FRAC_PI_2);
        for j in 0..phi_steps {
            let phi = j as f64 * step;
            let q = crate::quantum::QubitState::from_angles(t, phi);
            let (a, b) = (q.amp0(), q.amp1());
            table.push([a.norm_sqr(), b.norm_sqr(), (a + b).norm_sqr(), (a - b).norm_sqr(), t, phi]);
        }
    }

    let mut best = f64::INFINITY;
    let mut best_pair = (0, 0);
    for (i, q0) in table.iter().enumerate() {
        let mut row_best = f64::INFINITY;
        let mut row_arg = 0;
        for (j, q1) in table.iter().enumerate() {
            let er_z = q0[0] * q1[0] + q0[1] * q1[1];
            let er_x = 0.25 * (q0[2] * q1[2] + q0[3] * q1[3]);
            let er = 0.5 * (er_z + er_x);
            if er < row_best {
                row_best = er;
                row_arg = j;
            }
        }
        if row_best < best {
            best = row_best;
            best_pair = (i, row_arg);
        }
    }
    let (q0, q1) = (table[best_pair.0], table[best_pair.1]);
    GridMinimum {
        value: best,
        angles: [q0[4], q0[5], q1[4], q1[5]],
        resolution: step,
        points: (table.len() as u64).pow(2),
    }
}
