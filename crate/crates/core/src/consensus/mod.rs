//! Consensus ADMM over per-agent copy vectors.

mod copy;

pub use copy::*;

use nalgebra::DVector;
use rayon::prelude::*;
use thiserror::Error;

use crate::local_solver::{
    solve_local, AgentSpec, ConsensusTerms, LocalProblem, LocalSolution, LocalWarmStart,
    SolveStatus, SolverError, SolverOptions,
};

#[derive(Debug, Error, PartialEq)]
pub enum ConsensusError {
    #[error("copy vector of length {got_len} does not match layout {expected:?}")]
    ShapeMismatch { expected: CopyLayout, got_len: usize },
    #[error("trajectory for agent {agent} does not match the copy layout")]
    TrajectoryShape { agent: usize },
    #[error("no agents")]
    NoAgents,
    #[error("agents disagree on horizon, timestep or dimension")]
    InconsistentAgents,
    #[error("{got} warm starts for {agents} agents")]
    WarmStartCount { agents: usize, got: usize },
    #[error("invalid ADMM configuration: {0}")]
    Config(&'static str),
    #[error("local solve of agent {agent} failed in round {round}: {source}")]
    Solver {
        agent: usize,
        round: usize,
        #[source]
        source: SolverError,
    },
    #[error("local problem of agent {agent} infeasible in round {round}")]
    Infeasible { agent: usize, round: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    pub rho: f64,
    pub max_rounds: usize,
    pub tolerance: f64,
    /// Also require `ρ‖v̄⁺ − v̄‖₂` below this before stopping.
    pub dual_tolerance: Option<f64>,
    /// Run the local solves of one round on the rayon pool.
    pub parallel: bool,
    /// Keep every agent's copy vector in the round records.
    pub record_iterates: bool,
    pub solver: SolverOptions,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            max_rounds: 20,
            tolerance: 1e-3,
            dual_tolerance: None,
            parallel: true,
            record_iterates: false,
            solver: SolverOptions::default(),
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<(), ConsensusError> {
        if !(self.rho > 0.0) {
            return Err(ConsensusError::Config("rho must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(ConsensusError::Config("tolerance must be positive"));
        }
        if self.dual_tolerance.is_some_and(|t| !(t > 0.0)) {
            return Err(ConsensusError::Config("dual tolerance must be positive"));
        }
        if self.max_rounds == 0 {
            return Err(ConsensusError::Config("max_rounds must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub primal: f64,
    /// `ρ‖v̄⁺ − v̄‖₂`.
    pub dual: f64,
    pub per_agent: Vec<f64>,
    pub objectives: Vec<f64>,
    pub statuses: Vec<SolveStatus>,
    pub iterates: Option<Vec<CopyVector>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmOutcome {
    pub consensus: NetworkAverage,
    pub solutions: Vec<LocalSolution>,
    pub multipliers: Vec<Multiplier>,
    pub rounds: usize,
    pub converged: bool,
    pub history: Vec<RoundRecord>,
}

impl AdmmOutcome {
    pub fn final_residual(&self) -> f64 {
        self.history.last().map_or(f64::INFINITY, |r| r.primal)
    }
}

pub fn average(copies: &[CopyVector]) -> Result<NetworkAverage, ConsensusError> {
    let first = copies.first().ok_or(ConsensusError::NoAgents)?;
    let mut sum = DVector::zeros(first.data().len());
    for c in copies {
        first.check_same_shape(c)?;
        sum += c.data();
    }
    sum /= copies.len() as f64;
    CopyVector::from_data(first.layout(), sum)
}

pub fn dual_update(
    gamma: &Multiplier,
    v_plus: &CopyVector,
    v_bar_plus: &NetworkAverage,
    rho: f64,
) -> Result<Multiplier, ConsensusError> {
    gamma.check_same_shape(v_plus)?;
    gamma.check_same_shape(v_bar_plus)?;
    let data = gamma.data() + (v_plus.data() - v_bar_plus.data()) * rho;
    CopyVector::from_data(gamma.layout(), data)
}

/// `(max_i ‖v^i − v̄‖₂, [‖v^i − v̄‖₂]_i)`.
pub fn consensus_residual(
    copies: &[CopyVector],
    v_bar: &NetworkAverage,
) -> Result<(f64, Vec<f64>), ConsensusError> {
    let mut per_agent = Vec::with_capacity(copies.len());
    for c in copies {
        v_bar.check_same_shape(c)?;
        per_agent.push((c.data() - v_bar.data()).norm());
    }
    let primal = per_agent.iter().copied().fold(0.0, f64::max);
    Ok((primal, per_agent))
}

/// Starting average and multipliers for one MPC step.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmInit {
    pub v_bar: NetworkAverage,
    pub multipliers: Vec<Multiplier>,
}

impl AdmmInit {
    pub fn zeros(layout: CopyLayout) -> Self {
        Self {
            v_bar: CopyVector::zeros(layout),
            multipliers: vec![CopyVector::zeros(layout); layout.agents],
        }
    }

    /// Receding-horizon shift of a previous outcome.
    pub fn shifted(outcome: &AdmmOutcome) -> Self {
        Self {
            v_bar: outcome.consensus.shifted(),
            multipliers: outcome.multipliers.iter().map(CopyVector::shifted).collect(),
        }
    }
}

/// Consensus ADMM with [`solve_local`] as the local step.
pub fn run_admm(
    specs: &[AgentSpec],
    warm: Vec<Option<LocalWarmStart>>,
    init: AdmmInit,
    cfg: &AdmmConfig,
) -> Result<AdmmOutcome, ConsensusError> {
    run_admm_with(specs, warm, init, cfg, |p, w, o| solve_local(p, w, o))
}

/// Consensus ADMM with a caller-supplied local step.
pub fn run_admm_with<F>(
    specs: &[AgentSpec],
    warm: Vec<Option<LocalWarmStart>>,
    init: AdmmInit,
    cfg: &AdmmConfig,
    solve: F,
) -> Result<AdmmOutcome, ConsensusError>
where
    F: Fn(&LocalProblem, Option<&LocalWarmStart>, &SolverOptions) -> Result<LocalSolution, SolverError>
        + Sync,
{
    cfg.validate()?;
    let first = specs.first().ok_or(ConsensusError::NoAgents)?;
    let layout = first.layout();
    let consistent = specs.iter().all(|s| {
        s.layout() == layout && s.model == first.model && s.current_states == first.current_states
    });
    if !consistent || layout.agents != specs.len() {
        return Err(ConsensusError::InconsistentAgents);
    }
    if warm.len() != specs.len() {
        return Err(ConsensusError::WarmStartCount {
            agents: specs.len(),
            got: warm.len(),
        });
    }
    if init.multipliers.len() != specs.len() {
        return Err(ConsensusError::WarmStartCount {
            agents: specs.len(),
            got: init.multipliers.len(),
        });
    }
    init.v_bar.check_same_shape(&CopyVector::zeros(layout))?;

    let mut warm = warm;
    let mut v_bar = init.v_bar;
    let mut gammas = init.multipliers;
    let mut history = Vec::new();
    let mut solutions = Vec::new();
    let mut converged = false;

    for round in 1..=cfg.max_rounds {
        let problems: Vec<LocalProblem> = specs
            .iter()
            .zip(&gammas)
            .map(|(s, g)| LocalProblem {
                spec: s.clone(),
                consensus: ConsensusTerms {
                    v_bar: v_bar.clone(),
                    gamma: g.clone(),
                    rho: cfg.rho,
                },
            })
            .collect();
        let run = |(p, w): (&LocalProblem, &Option<LocalWarmStart>)| solve(p, w.as_ref(), &cfg.solver);
        let results: Vec<Result<LocalSolution, SolverError>> = if cfg.parallel {
            problems.par_iter().zip(warm.par_iter()).map(run).collect()
        } else {
            problems.iter().zip(warm.iter()).map(run).collect()
        };
        let mut sols = Vec::with_capacity(results.len());
        for (agent, r) in results.into_iter().enumerate() {
            let sol = r.map_err(|source| ConsensusError::Solver {
                agent,
                round,
                source,
            })?;
            if sol.status != SolveStatus::Converged {
                log::debug!(
                    "round {round} agent {agent}: {:?} feas {:.3e} stat {:.3e} outer {} inner {}",
                    sol.status,
                    sol.max_violation,
                    sol.stationarity,
                    sol.outer_iterations,
                    sol.inner_iterations
                );
            }
            if sol.status == SolveStatus::Infeasible {
                return Err(ConsensusError::Infeasible { agent, round });
            }
            sols.push(sol);
        }

        let copies: Vec<CopyVector> = sols.iter().map(|s| s.v_plus.clone()).collect();
        let next = average(&copies)?;
        let dual = cfg.rho * (next.data() - v_bar.data()).norm();
        v_bar = next;
        for (g, c) in gammas.iter_mut().zip(&copies) {
            *g = dual_update(g, c, &v_bar, cfg.rho)?;
        }
        let (primal, per_agent) = consensus_residual(&copies, &v_bar)?;
        log::trace!(
            "round {round}: primal {primal:.3e} dual {dual:.3e} per agent {per_agent:.3?} objectives {:.4?}",
            sols.iter().map(|s| s.objective).collect::<Vec<_>>()
        );
        history.push(RoundRecord {
            round,
            primal,
            dual,
            per_agent,
            objectives: sols.iter().map(|s| s.objective).collect(),
            statuses: sols.iter().map(|s| s.status).collect(),
            iterates: cfg.record_iterates.then_some(copies),
        });
        warm = sols.iter().map(|s| Some(LocalWarmStart::from_solution(s))).collect();
        solutions = sols;
        if primal <= cfg.tolerance && cfg.dual_tolerance.is_none_or(|t| dual <= t) {
            converged = true;
            break;
        }
    }

    Ok(AdmmOutcome {
        consensus: v_bar,
        solutions,
        multipliers: gammas,
        rounds: history.len(),
        converged,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn filled(layout: CopyLayout, v: f64) -> CopyVector {
        CopyVector::from_data(layout, DVector::from_element(layout.len(), v)).unwrap()
    }

    #[test]
    fn average_examples() {
        let l = CopyLayout::new(2, 2, 3);
        let avg = average(&[filled(l, 1.0), filled(l, 3.0)]).unwrap();
        assert!(avg.data().iter().all(|&v| v == 2.0));

        let single = filled(l, 0.7);
        assert_eq!(average(&[single.clone()]).unwrap(), single);

        let l3 = CopyLayout::new(3, 2, 1);
        let avg = average(&[filled(l3, 0.0), filled(l3, 0.0), filled(l3, 3.0)]).unwrap();
        assert!(avg.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn average_rejects_mixed_shapes() {
        let a = filled(CopyLayout::new(2, 2, 3), 0.0);
        let b = filled(CopyLayout::new(2, 2, 4), 0.0);
        assert!(matches!(average(&[a, b]), Err(ConsensusError::ShapeMismatch { .. })));
        assert_eq!(average(&[]), Err(ConsensusError::NoAgents));
    }

    #[test]
    fn dual_update_examples() {
        let l = CopyLayout::new(1, 2, 2);
        let g = dual_update(&filled(l, 0.0), &filled(l, 0.5), &filled(l, 0.0), 1.0).unwrap();
        assert!(g.data().iter().all(|&v| v == 0.5));

        let same = filled(l, 0.3);
        let g0 = filled(l, 1.7);
        assert_eq!(dual_update(&g0, &same, &same, 5.0).unwrap(), g0);

        let g = dual_update(&filled(l, 1.0), &filled(l, -0.5), &filled(l, 0.0), 2.0).unwrap();
        assert!(g.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn residual_examples() {
        let l = CopyLayout::new(2, 2, 2);
        let c = filled(l, 0.4);
        let (primal, per) = consensus_residual(&[c.clone(), c.clone()], &c).unwrap();
        assert_eq!(primal, 0.0);
        assert_eq!(per, vec![0.0, 0.0]);

        let delta = 0.2;
        let mut moved = c.clone();
        moved.data_mut()[3] += delta;
        let copies = [moved, c];
        let avg = average(&copies).unwrap();
        let (primal, per) = consensus_residual(&copies, &avg).unwrap();
        assert_relative_eq!(per[0], delta / 2.0, epsilon = 1e-15);
        assert_relative_eq!(per[1], delta / 2.0, epsilon = 1e-15);
        assert_eq!(primal, per[0].max(per[1]));
    }
}

#[cfg(test)]
mod admm_tests {
    use super::*;
    use crate::costs::{CostWeights, GoalSpec};
    use crate::dynamics::DiscreteModel;
    use crate::geometry::DistanceThresholds;
    use crate::local_solver::SolveMode;

    fn spec(states: Vec<DVector<f64>>, agent: usize, goal: &[f64]) -> AgentSpec {
        AgentSpec {
            agent,
            model: DiscreteModel::double_integrator(2, 0.1).unwrap(),
            horizon: 10,
            current_states: states,
            goal: GoalSpec::at_rest(&DVector::from_column_slice(goal)),
            weights: CostWeights::scaled(2, 0.1, 1.0, 1.0, 100.0).unwrap(),
            delta: 0.1,
            mode: SolveMode::Hard,
            thresholds: DistanceThresholds::default(),
            workspace: None,
            input_bound: None,
        }
    }

    #[test]
    fn single_agent_converges_in_one_round() {
        let sp = spec(vec![DVector::from_vec(vec![0.0, 0.0, 0.0, 0.0])], 0, &[1.0, 0.0]);
        let out = run_admm(&[sp.clone()], vec![None], AdmmInit::zeros(sp.layout()), &AdmmConfig::default()).unwrap();
        assert_eq!(out.rounds, 1);
        assert!(out.converged);
        assert_eq!(out.final_residual(), 0.0);
        assert_eq!(out.consensus, out.solutions[0].v_plus);
    }

    #[test]
    fn decoupled_pair_matches_single_solves() {
        let starts = vec![
            DVector::from_vec(vec![0.0, 0.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 10.0, 0.0, 0.0]),
        ];
        let goals = [[1.0, 0.0], [1.0, 10.0]];
        let cfg = AdmmConfig::default();
        let specs: Vec<AgentSpec> = (0..2).map(|i| spec(starts.clone(), i, &goals[i])).collect();
        let pair = run_admm(&specs, vec![None, None], AdmmInit::zeros(specs[0].layout()), &cfg).unwrap();
        assert!(pair.converged);
        for i in 0..2 {
            let one = spec(vec![starts[i].clone()], 0, &goals[i]);
            let p = LocalProblem::new(one.clone(), ConsensusTerms::zeros(one.layout(), 0.0)).unwrap();
            let alone = solve_local(&p, None, &cfg.solver).unwrap().v_plus.trajectory(0);
            let joint = pair.consensus.trajectory(i);
            for (a, b) in alone.states.iter().zip(&joint.states).chain(alone.inputs.iter().zip(&joint.inputs)) {
                assert!((a - b).amax() <= 1e-3, "agent {i}: {a} vs {b}");
            }
        }
    }
}
