//! Double-integrator agent models in 2D and 3D.
//!
//! State layout is `[position (n), velocity (n)]`, input is acceleration (n).
//! The discrete model is the first-order Euler discretization
//! `A_k = A dt + I`, `B_k = B dt`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Stacked `[position, velocity]` vector of length `2n`.
pub type State = DVector<f64>;
/// Acceleration vector of length `n`.
pub type Input = DVector<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("spatial dimension must be 2 or 3, got {0}")]
    UnsupportedDimension(usize),
    #[error("timestep must be positive and finite, got {0}")]
    InvalidTimestep(f64),
    #[error("{what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

/// Continuous-time double integrator `ṡ = A s + B u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousModel {
    pub dim: usize,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

/// Euler-discretized double integrator `s_{k+1} = A_k s_k + B_k u_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    pub dim: usize,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub dt: f64,
}

/// A horizon of `N + 1` states and `N` inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub inputs: Vec<Input>,
}

pub fn make_double_integrator(dim: usize) -> Result<ContinuousModel, DynamicsError> {
    if !(2..=3).contains(&dim) {
        return Err(DynamicsError::UnsupportedDimension(dim));
    }
    let mut a = DMatrix::zeros(2 * dim, 2 * dim);
    let mut b = DMatrix::zeros(2 * dim, dim);
    for d in 0..dim {
        a[(d, dim + d)] = 1.0;
        b[(dim + d, d)] = 1.0;
    }
    Ok(ContinuousModel { dim, a, b })
}

pub fn discretize(model: &ContinuousModel, dt: f64) -> Result<DiscreteModel, DynamicsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::InvalidTimestep(dt));
    }
    let nx = 2 * model.dim;
    Ok(DiscreteModel {
        dim: model.dim,
        a: &model.a * dt + DMatrix::identity(nx, nx),
        b: &model.b * dt,
        dt,
    })
}

impl DiscreteModel {
    /// Convenience constructor: double integrator of dimension `dim` at timestep `dt`.
    pub fn double_integrator(dim: usize, dt: f64) -> Result<Self, DynamicsError> {
        discretize(&make_double_integrator(dim)?, dt)
    }

    pub fn state_dim(&self) -> usize {
        2 * self.dim
    }

    pub fn input_dim(&self) -> usize {
        self.dim
    }

    pub fn check_state(&self, s: &State) -> Result<(), DynamicsError> {
        check_len("state", self.state_dim(), s.len())
    }

    pub fn check_input(&self, u: &Input) -> Result<(), DynamicsError> {
        check_len("input", self.input_dim(), u.len())
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), DynamicsError> {
    if expected == got {
        Ok(())
    } else {
        Err(DynamicsError::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}

pub fn step(model: &DiscreteModel, s: &State, u: &Input) -> Result<State, DynamicsError> {
    model.check_state(s)?;
    model.check_input(u)?;
    Ok(&model.a * s + &model.b * u)
}

pub fn rollout(
    model: &DiscreteModel,
    s0: &State,
    inputs: &[Input],
) -> Result<Trajectory, DynamicsError> {
    model.check_state(s0)?;
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(s0.clone());
    for u in inputs {
        let next = step(model, states.last().expect("non-empty"), u)?;
        states.push(next);
    }
    Ok(Trajectory {
        states,
        inputs: inputs.to_vec(),
    })
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.inputs.len()
    }

    /// Largest infinity-norm violation of `s_{k+1} = A_k s_k + B_k u_k` over the horizon.
    pub fn dynamics_residual(&self, model: &DiscreteModel) -> f64 {
        self.inputs
            .iter()
            .enumerate()
            .map(|(k, u)| {
                let pred = &model.a * &self.states[k] + &model.b * u;
                (&self.states[k + 1] - pred).amax()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_dynamically_consistent(&self, model: &DiscreteModel, tol: f64) -> bool {
        self.states.len() == self.inputs.len() + 1 && self.dynamics_residual(model) <= tol
    }

    /// Position block of state `k`.
    pub fn position(&self, k: usize) -> DVector<f64> {
        let n = self.states[k].len() / 2;
        self.states[k].rows(0, n).into_owned()
    }
}
