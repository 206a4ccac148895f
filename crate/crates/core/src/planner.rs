//! RRT initial guesses.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::costs::GoalSpec;
use crate::dynamics::Trajectory;
use crate::geometry::{contains, DualCertificate, GeometryError, Polytope};

#[derive(Debug, Error, PartialEq)]
pub enum PlannerError {
    #[error("start lies inside obstacle {0}")]
    StartInObstacle(usize),
    #[error("invalid planner configuration: {0}")]
    Config(&'static str),
    #[error("position has dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("empty path")]
    EmptyPath,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    pub step: f64,
    pub goal_bias: f64,
    pub max_iterations: usize,
    pub goal_tolerance: f64,
    pub seed: u64,
}

impl PlannerConfig {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>, seed: u64) -> Self {
        Self {
            lower,
            upper,
            step: 0.2,
            goal_bias: 0.1,
            max_iterations: 5000,
            goal_tolerance: 0.1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        if !(self.step > 0.0) {
            return Err(PlannerError::Config("step must be positive"));
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return Err(PlannerError::Config("goal bias must lie in [0, 1]"));
        }
        if !(self.goal_tolerance >= 0.0) {
            return Err(PlannerError::Config("goal tolerance must be nonnegative"));
        }
        if self.lower.len() != self.upper.len()
            || self.lower.iter().zip(self.upper.iter()).any(|(l, u)| !(l <= u))
        {
            return Err(PlannerError::Config("workspace bounds"));
        }
        Ok(())
    }

    fn in_workspace(&self, p: &DVector<f64>) -> bool {
        p.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }
}

/// Seed for agent `agent` at MPC step `step`.
pub fn derive_seed(run_seed: u64, agent: usize, step: usize) -> u64 {
    let mut z = run_seed
        ^ (agent as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (step as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedPath {
    pub waypoints: Vec<DVector<f64>>,
}

fn blocked(p: &DVector<f64>, obstacles: &[Polytope]) -> Result<bool, PlannerError> {
    for o in obstacles {
        if contains(o, p)? {
            return Ok(true);
        }
    }
    Ok(false)
}

pub fn rrt_plan(
    start: &DVector<f64>,
    goal: &DVector<f64>,
    obstacles: &[Polytope],
    cfg: &PlannerConfig,
) -> Result<PlannedPath, PlannerError> {
    cfg.validate()?;
    let n = start.len();
    if goal.len() != n || cfg.lower.len() != n {
        return Err(PlannerError::Dimension {
            expected: n,
            got: if goal.len() != n { goal.len() } else { cfg.lower.len() },
        });
    }
    for (idx, o) in obstacles.iter().enumerate() {
        if contains(o, start)? {
            return Err(PlannerError::StartInObstacle(idx));
        }
    }
    if (start - goal).norm() <= cfg.goal_tolerance {
        return Ok(PlannedPath {
            waypoints: vec![start.clone()],
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut nodes: Vec<DVector<f64>> = vec![start.clone()];
    let mut parents: Vec<usize> = vec![0];
    let mut reached = None;

    for _ in 0..cfg.max_iterations {
        let sample = if rng.random::<f64>() < cfg.goal_bias {
            goal.clone()
        } else {
            DVector::from_iterator(
                n,
                (0..n).map(|d| {
                    let (lo, hi) = (cfg.lower[d], cfg.upper[d]);
                    if lo < hi {
                        rng.random_range(lo..hi)
                    } else {
                        lo
                    }
                }),
            )
        };
        let (nearest, dist) = nodes
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (p - &sample).norm()))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        if dist == 0.0 {
            continue;
        }
        let base = &nodes[nearest];
        let new = if dist > cfg.step {
            base + (&sample - base) * (cfg.step / dist)
        } else {
            sample
        };
        let mid = (base + &new) * 0.5;
        if !cfg.in_workspace(&new) || blocked(&new, obstacles)? || blocked(&mid, obstacles)? {
            continue;
        }
        let done = (&new - goal).norm() <= cfg.goal_tolerance;
        nodes.push(new);
        parents.push(nearest);
        if done {
            reached = Some(nodes.len() - 1);
            break;
        }
    }

    let last = reached.unwrap_or_else(|| {
        nodes
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (p - goal).norm()))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
            .0
    });
    let mut waypoints = vec![nodes[last].clone()];
    let mut idx = last;
    while idx != 0 {
        idx = parents[idx];
        waypoints.push(nodes[idx].clone());
    }
    waypoints.reverse();
    Ok(PlannedPath { waypoints })
}

/// First `horizon + 1` waypoints as a state/input guess.
///
/// Velocities are forward differences, the last one taken from `goal`;
/// inputs are forward differences of the velocities.
pub fn initial_guess_from_path(
    path: &PlannedPath,
    horizon: usize,
    dt: f64,
    goal: &GoalSpec,
) -> Result<Trajectory, PlannerError> {
    let last = path.waypoints.last().ok_or(PlannerError::EmptyPath)?;
    let n = last.len();
    let positions: Vec<DVector<f64>> = (0..=horizon)
        .map(|k| path.waypoints.get(k).unwrap_or(last).clone())
        .collect();
    let goal_velocity = goal.state.rows(n, n).into_owned();
    let velocities: Vec<DVector<f64>> = (0..=horizon)
        .map(|k| {
            if k < horizon {
                (&positions[k + 1] - &positions[k]) / dt
            } else if path.waypoints.len() > horizon {
                // path continues past the horizon
                (path.waypoints.get(horizon + 1).unwrap_or(last) - &positions[k]) / dt
            } else {
                goal_velocity.clone()
            }
        })
        .collect();
    let states = positions
        .iter()
        .zip(&velocities)
        .map(|(p, v)| {
            let mut s = DVector::zeros(2 * n);
            s.rows_mut(0, n).copy_from(p);
            s.rows_mut(n, n).copy_from(v);
            s
        })
        .collect();
    let inputs = (0..horizon)
        .map(|k| (&velocities[k + 1] - &velocities[k]) / dt)
        .collect();
    Ok(Trajectory { states, inputs })
}

/// Aligned-face certificates of `guesses[agent]` against every other guess,
/// neighbour-major over `k = 1..=N`.
pub fn guess_certificates(guesses: &[Trajectory], agent: usize, delta: f64) -> Vec<DualCertificate> {
    let own = &guesses[agent];
    let mut out = Vec::new();
    for (j, other) in guesses.iter().enumerate() {
        if j == agent {
            continue;
        }
        for k in 1..own.states.len() {
            let r = own.position(k) - other.position(k);
            out.push(DualCertificate::aligned_with(&r, delta));
        }
    }
    out
}
