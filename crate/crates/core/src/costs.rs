//! Quadratic tracking objectives and the consensus augmented Lagrangian.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::consensus::{CopyVector, Multiplier, NetworkAverage};
use crate::dynamics::{Input, State, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("{what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("weight matrix {0} must be symmetric positive semidefinite")]
    NotPsd(&'static str),
    #[error("input weight R must be symmetric positive definite")]
    NotPd,
    #[error("slack penalty kappa must be nonnegative, got {0}")]
    NegativeKappa(f64),
    #[error("slack {index} is negative ({value})")]
    NegativeSlack { index: usize, value: f64 },
    #[error("{trajectories} trajectories but {goals} goals")]
    AgentCountMismatch { trajectories: usize, goals: usize },
    #[error("penalty rho must be nonnegative, got {0}")]
    NegativeRho(f64),
    #[error("copy vectors have different shapes")]
    ShapeMismatch,
}

/// Weights `Q`, `R`, `Q_f` and slack penalty `κ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub qf: DMatrix<f64>,
    pub kappa: f64,
}

impl CostWeights {
    pub fn new(
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        qf: DMatrix<f64>,
        kappa: f64,
    ) -> Result<Self, CostError> {
        let nx = q.nrows();
        let nu = r.nrows();
        for (what, m, size) in [("Q", &q, nx), ("Q_f", &qf, nx), ("R", &r, nu)] {
            if m.shape() != (size, size) {
                return Err(CostError::DimensionMismatch {
                    what,
                    expected: size,
                    got: m.ncols(),
                });
            }
        }
        if !is_psd(&q) {
            return Err(CostError::NotPsd("Q"));
        }
        if !is_psd(&qf) {
            return Err(CostError::NotPsd("Q_f"));
        }
        if !is_symmetric(&r) || r.clone().cholesky().is_none() {
            return Err(CostError::NotPd);
        }
        if !(kappa >= 0.0) {
            return Err(CostError::NegativeKappa(kappa));
        }
        Ok(Self { q, r, qf, kappa })
    }

    /// `Q = q·I_{2n}`, `R = r·I_n`, `Q_f = qf·I_{2n}`.
    pub fn scaled(dim: usize, q: f64, r: f64, qf: f64, kappa: f64) -> Result<Self, CostError> {
        Self::new(
            DMatrix::identity(2 * dim, 2 * dim) * q,
            DMatrix::identity(dim, dim) * r,
            DMatrix::identity(2 * dim, 2 * dim) * qf,
            kappa,
        )
    }

    pub fn state_dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.r.nrows()
    }
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = 1.0 + m.amax();
    (m - m.transpose()).amax() <= 1e-12 * scale
}

fn is_psd(m: &DMatrix<f64>) -> bool {
    if !is_symmetric(m) {
        return false;
    }
    let scale = 1.0 + m.amax();
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .all(|&e| e >= -1e-12 * scale)
}

/// Target state; point-to-point transitions end at rest by default.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalSpec {
    pub state: State,
}

impl GoalSpec {
    pub fn new(state: State) -> Self {
        Self { state }
    }

    pub fn at_rest(position: &DVector<f64>) -> Self {
        let n = position.len();
        let mut state = DVector::zeros(2 * n);
        state.rows_mut(0, n).copy_from(position);
        Self { state }
    }

    pub fn position(&self) -> DVector<f64> {
        let n = self.state.len() / 2;
        self.state.rows(0, n).into_owned()
    }
}

fn check(what: &'static str, expected: usize, got: usize) -> Result<(), CostError> {
    if expected == got {
        Ok(())
    } else {
        Err(CostError::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}

/// `(s − s_g)ᵀ Q (s − s_g) + uᵀ R u`
pub fn stage_cost(s: &State, u: &Input, goal: &GoalSpec, w: &CostWeights) -> Result<f64, CostError> {
    check("state", w.state_dim(), s.len())?;
    check("goal", w.state_dim(), goal.state.len())?;
    check("input", w.input_dim(), u.len())?;
    let e = s - &goal.state;
    Ok(e.dot(&(&w.q * &e)) + u.dot(&(&w.r * u)))
}

/// `(s − s_g)ᵀ Q_f (s − s_g)`
pub fn terminal_cost(s: &State, goal: &GoalSpec, w: &CostWeights) -> Result<f64, CostError> {
    check("state", w.state_dim(), s.len())?;
    check("goal", w.state_dim(), goal.state.len())?;
    let e = s - &goal.state;
    Ok(e.dot(&(&w.qf * &e)))
}

/// Stage costs over the horizon, terminal cost, plus `κ Σ α` when slacks are given.
pub fn trajectory_cost(
    traj: &Trajectory,
    goal: &GoalSpec,
    w: &CostWeights,
    slacks: Option<&[f64]>,
) -> Result<f64, CostError> {
    let n = traj.inputs.len();
    check("trajectory states", n + 1, traj.states.len())?;
    let mut total = 0.0;
    for k in 0..n {
        total += stage_cost(&traj.states[k], &traj.inputs[k], goal, w)?;
    }
    total += terminal_cost(&traj.states[n], goal, w)?;
    if let Some(alphas) = slacks {
        if let Some(index) = alphas.iter().position(|&a| a < 0.0) {
            return Err(CostError::NegativeSlack {
                index,
                value: alphas[index],
            });
        }
        total += w.kappa * alphas.iter().sum::<f64>();
    }
    Ok(total)
}

/// Sum of per-agent trajectory costs.
pub fn global_cost(
    trajs: &[Trajectory],
    goals: &[GoalSpec],
    w: &CostWeights,
) -> Result<f64, CostError> {
    if trajs.len() != goals.len() {
        return Err(CostError::AgentCountMismatch {
            trajectories: trajs.len(),
            goals: goals.len(),
        });
    }
    trajs
        .iter()
        .zip(goals)
        .map(|(t, g)| trajectory_cost(t, g, w, None))
        .sum()
}

/// Agent `agent`'s own-block trajectory cost plus `γᵀ(v − v̄) + (ρ/2)‖v − v̄‖²`.
///
/// Copies of other agents enter only through the consensus terms.
pub fn augmented_lagrangian(
    v: &CopyVector,
    v_bar: &NetworkAverage,
    gamma: &Multiplier,
    rho: f64,
    agent: usize,
    goal: &GoalSpec,
    w: &CostWeights,
) -> Result<f64, CostError> {
    if v.layout() != v_bar.layout() || v.layout() != gamma.layout() {
        return Err(CostError::ShapeMismatch);
    }
    if !(rho >= 0.0) {
        return Err(CostError::NegativeRho(rho));
    }
    let own = trajectory_cost(&v.trajectory(agent), goal, w, None)?;
    let diff = v.data() - v_bar.data();
    Ok(own + gamma.data().dot(&diff) + 0.5 * rho * diff.norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::CopyLayout;
    use crate::dynamics::{rollout, DiscreteModel};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn paper_weights() -> CostWeights {
        CostWeights::scaled(2, 0.1, 1.0, 1.0, 100.0).unwrap()
    }

    #[test]
    fn stage_and_terminal_values() {
        let w = paper_weights();
        let goal = GoalSpec::at_rest(&v(&[1.0, 2.0]));
        assert_eq!(stage_cost(&goal.state, &v(&[0.0, 0.0]), &goal, &w).unwrap(), 0.0);
        let s = v(&[2.0, 2.0, 0.0, 0.0]);
        assert_relative_eq!(stage_cost(&s, &v(&[0.0, 0.0]), &goal, &w).unwrap(), 0.1, epsilon = 1e-15);
        assert_relative_eq!(stage_cost(&goal.state, &v(&[1.0, 1.0]), &goal, &w).unwrap(), 2.0);

        assert_eq!(terminal_cost(&goal.state, &goal, &w).unwrap(), 0.0);
        assert_relative_eq!(terminal_cost(&v(&[1.0, 2.0, 1.0, 0.0]), &goal, &w).unwrap(), 1.0);
        assert_relative_eq!(terminal_cost(&v(&[2.0, 3.0, 0.0, 0.0]), &goal, &w).unwrap(), 2.0);
        assert!(stage_cost(&v(&[0.0; 3]), &v(&[0.0, 0.0]), &goal, &w).is_err());
    }

    #[test]
    fn trajectory_and_global_costs() {
        let w = paper_weights();
        let goal = GoalSpec::at_rest(&v(&[0.0, 0.0]));
        let resting = Trajectory {
            states: vec![goal.state.clone(); 4],
            inputs: vec![v(&[0.0, 0.0]); 3],
        };
        assert_eq!(trajectory_cost(&resting, &goal, &w, None).unwrap(), 0.0);

        let one = Trajectory {
            states: vec![v(&[1.0, 0.0, 0.0, 0.0]), v(&[0.0, 0.0, 1.0, 0.0])],
            inputs: vec![v(&[0.0, 0.0])],
        };
        assert_relative_eq!(trajectory_cost(&one, &goal, &w, None).unwrap(), 1.1, epsilon = 1e-15);
        assert_relative_eq!(
            trajectory_cost(&resting, &goal, &w, Some(&[0.01])).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert!(trajectory_cost(&resting, &goal, &w, Some(&[-0.01])).is_err());

        let single = trajectory_cost(&one, &goal, &w, None).unwrap();
        assert_eq!(global_cost(&[one.clone()], &[goal.clone()], &w).unwrap(), single);
        assert_relative_eq!(
            global_cost(&[one.clone(), one.clone()], &[goal.clone(), goal.clone()], &w).unwrap(),
            2.0 * single
        );
        assert_eq!(global_cost(&[], &[], &w).unwrap(), 0.0);
        assert!(global_cost(&[one], &[], &w).is_err());
    }

    #[test]
    fn lagrangian_terms() {
        let w = paper_weights();
        let layout = CopyLayout::new(2, 2, 3);
        let goal = GoalSpec::at_rest(&v(&[0.0, 0.0]));
        let zero = CopyVector::zeros(layout);
        let gamma0 = CopyVector::zeros(layout);

        let mut copy = CopyVector::zeros(layout);
        copy.data_mut()[0] = 0.5;
        let own = trajectory_cost(&copy.trajectory(0), &goal, &w, None).unwrap();
        assert_eq!(
            augmented_lagrangian(&copy, &copy, &gamma0, 1.0, 0, &goal, &w).unwrap(),
            own
        );

        // unit deviation on a neighbour block leaves the own cost at zero
        let mut far = CopyVector::zeros(layout);
        far.data_mut()[layout.block_offset(1)] = 1.0;
        assert_relative_eq!(
            augmented_lagrangian(&far, &zero, &gamma0, 2.0, 0, &goal, &w).unwrap(),
            1.0
        );

        // own block at rest on the goal, every entry offset by 0.1 from the average
        let d = layout.len();
        let ones = CopyVector::from_data(layout, DVector::from_element(d, 1.0)).unwrap();
        let at_goal = CopyVector::zeros(layout);
        let bar = CopyVector::from_data(layout, DVector::from_element(d, -0.1)).unwrap();
        let val = augmented_lagrangian(&at_goal, &bar, &ones, 0.0, 0, &goal, &w).unwrap();
        assert_relative_eq!(val, 0.1 * d as f64, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn costs_nonnegative_and_additive(raw in proptest::collection::vec(-3.0f64..3.0, 24)) {
            let w = paper_weights();
            let model = DiscreteModel::double_integrator(2, 0.1).unwrap();
            let goal = GoalSpec::at_rest(&v(&raw[0..2]));
            let s0 = v(&raw[2..6]);
            let inputs: Vec<_> = raw[6..].chunks(2).map(v).collect();
            let traj = rollout(&model, &s0, &inputs).unwrap();
            let c = trajectory_cost(&traj, &goal, &w, None).unwrap();
            prop_assert!(c >= 0.0);
            let both = global_cost(&[traj.clone(), traj.clone()], &[goal.clone(), goal.clone()], &w).unwrap();
            let split = global_cost(&[traj.clone()], &[goal.clone()], &w).unwrap() * 2.0;
            prop_assert!((both - split).abs() <= 1e-9 * (1.0 + both));
        }
    }

    #[test]
    fn resting_at_goal_is_global_minimum() {
        let w = paper_weights();
        let model = DiscreteModel::double_integrator(2, 0.1).unwrap();
        let goal = GoalSpec::at_rest(&v(&[0.4, -0.2]));
        let traj = rollout(&model, &goal.state, &vec![v(&[0.0, 0.0]); 10]).unwrap();
        assert_eq!(trajectory_cost(&traj, &goal, &w, None).unwrap(), 0.0);
    }

    #[test]
    fn weights_validation() {
        assert!(CostWeights::scaled(2, -0.1, 1.0, 1.0, 1.0).is_err());
        assert!(CostWeights::scaled(2, 0.1, 0.0, 1.0, 1.0).is_err());
        assert!(CostWeights::scaled(2, 0.1, 1.0, 1.0, -1.0).is_err());
        assert!(CostWeights::scaled(3, 0.0, 1.0, 0.0, 0.0).is_ok());
    }
}
