//! Closed-loop DMPC simulation.

use std::time::Instant;

use log::{debug, info, warn};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::{
    run_admm, AdmmConfig, AdmmInit, AdmmOutcome, ConsensusError, CopyLayout, CopyVector,
};
use crate::costs::{stage_cost, CostError, CostWeights, GoalSpec};
use crate::dynamics::{DiscreteModel, DynamicsError, State};
use crate::geometry::{AgentCube, DistanceThresholds, GeometryError};
use crate::local_solver::{AgentSpec, LocalWarmStart, SolveMode, SolveStatus, SolverOptions};
use crate::planner::{
    derive_seed, guess_certificates, initial_guess_from_path, rrt_plan, PlannerConfig, PlannerError,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("dynamics: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("costs: {0}")]
    Costs(#[from] CostError),
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("planner (agent {agent}, step {step}): {source}")]
    Planner {
        agent: usize,
        step: usize,
        #[source]
        source: PlannerError,
    },
    #[error("consensus at step {step}: {source}")]
    Consensus {
        step: usize,
        #[source]
        source: ConsensusError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WarmStartKind {
    #[default]
    Rrt,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReplanPolicy {
    EveryStep,
    OnFailure,
    #[default]
    FirstStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsSection {
    pub q_scale: f64,
    pub r_scale: f64,
    pub qf_scale: f64,
    pub kappa: f64,
}

impl Default for WeightsSection {
    fn default() -> Self {
        Self {
            q_scale: 0.1,
            r_scale: 1.0,
            qf_scale: 1.0,
            kappa: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmmSection {
    pub rho: f64,
    pub max_rounds: usize,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dual_tolerance: Option<f64>,
    pub parallel: bool,
    pub applied_input: AppliedInput,
}

/// Which copy of an agent's first input is sent to the plant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppliedInput {
    /// Network average of all copies.
    #[default]
    Consensus,
    /// The agent's own local solution.
    Own,
}

impl Default for AdmmSection {
    fn default() -> Self {
        Self {
            rho: 1.0,
            max_rounds: 20,
            tolerance: 1e-3,
            dual_tolerance: None,
            parallel: true,
            applied_input: AppliedInput::Consensus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub max_outer_iters: usize,
    pub max_inner_iters: usize,
    pub constraint_tolerance: f64,
    pub stationarity_tolerance: f64,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub max_penalty: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            max_outer_iters: o.max_outer_iters,
            max_inner_iters: o.max_inner_iters,
            constraint_tolerance: o.constraint_tolerance,
            stationarity_tolerance: o.stationarity_tolerance,
            initial_penalty: o.initial_penalty,
            penalty_growth: o.penalty_growth,
            max_penalty: o.max_penalty,
        }
    }
}

impl SolverSection {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            max_outer_iters: self.max_outer_iters,
            max_inner_iters: self.max_inner_iters,
            constraint_tolerance: self.constraint_tolerance,
            stationarity_tolerance: self.stationarity_tolerance,
            initial_penalty: self.initial_penalty,
            penalty_growth: self.penalty_growth,
            max_penalty: self.max_penalty,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSection {
    pub step: f64,
    pub goal_bias: f64,
    pub max_iterations: usize,
    pub goal_tolerance: f64,
    pub replan: ReplanPolicy,
    /// Margin added around starts and goals when no workspace is given.
    pub margin: f64,
}

impl Default for PlannerSection {
    fn default() -> Self {
        Self {
            step: 0.2,
            goal_bias: 0.1,
            max_iterations: 5000,
            goal_tolerance: 0.1,
            replan: ReplanPolicy::FirstStep,
            margin: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_velocity: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_velocity: Option<Vec<f64>>,
}

fn d_dt() -> f64 {
    0.1
}
fn d_horizon() -> usize {
    10
}
fn d_delta() -> f64 {
    0.1
}
fn d_d_min() -> f64 {
    DistanceThresholds::default().d_min
}
fn d_p_max() -> f64 {
    DistanceThresholds::default().p_max
}
fn d_max_steps() -> usize {
    300
}
fn d_tol() -> f64 {
    0.05
}
fn d_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub dimension: usize,
    #[serde(default = "d_dt")]
    pub dt: f64,
    #[serde(default = "d_horizon")]
    pub horizon: usize,
    #[serde(default = "d_delta")]
    pub delta: f64,
    #[serde(default)]
    pub mode: SolveMode,
    #[serde(default = "d_d_min")]
    pub d_min: f64,
    #[serde(default = "d_p_max")]
    pub p_max: f64,
    #[serde(default = "d_max_steps")]
    pub max_steps: usize,
    #[serde(default = "d_tol")]
    pub goal_tol_pos: f64,
    #[serde(default = "d_tol")]
    pub goal_tol_vel: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_true")]
    pub soft_fallback: bool,
    #[serde(default)]
    pub warm_start: WarmStartKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workspace: Option<WorkspaceBox>,
    #[serde(default)]
    pub weights: WeightsSection,
    #[serde(default)]
    pub admm: AdmmSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub planner: PlannerSection,
    pub agents: Vec<AgentEntry>,
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::Invalid(msg.into())
}

impl Scenario {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let n = self.dimension;
        if n != 2 && n != 3 {
            return Err(invalid(format!("dimension must be 2 or 3, got {n}")));
        }
        if !(self.dt > 0.0) {
            return Err(invalid("dt must be positive"));
        }
        if self.horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        if !(self.delta > 0.0) {
            return Err(invalid(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.d_min >= 0.0) || !(self.p_max >= 0.0) {
            return Err(invalid("d_min and p_max must be nonnegative"));
        }
        if !(self.goal_tol_pos > 0.0 && self.goal_tol_vel > 0.0) {
            return Err(invalid("goal tolerances must be positive"));
        }
        if let Some(b) = self.input_bound {
            if !(b > 0.0) {
                return Err(invalid("input_bound must be positive"));
            }
        }
        let w = &self.weights;
        if !(w.q_scale >= 0.0 && w.qf_scale >= 0.0 && w.r_scale > 0.0 && w.kappa >= 0.0) {
            return Err(invalid("weights: q_scale, qf_scale, kappa nonnegative and r_scale positive"));
        }
        self.admm_config()
            .validate()
            .map_err(|e| invalid(format!("admm: {e}")))?;
        self.solver
            .options()
            .validate()
            .map_err(|e| invalid(format!("solver: {e}")))?;
        if self.agents.is_empty() {
            return Err(invalid("at least one agent required"));
        }
        for (i, a) in self.agents.iter().enumerate() {
            let vecs = [Some(&a.start), Some(&a.goal), a.start_velocity.as_ref(), a.goal_velocity.as_ref()];
            for v in vecs.into_iter().flatten() {
                if v.len() != n {
                    return Err(invalid(format!("agent {i}: vectors must have {n} components")));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(invalid(format!("agent {i}: non-finite value")));
                }
            }
        }
        if let Some(ws) = &self.workspace {
            if ws.lower.len() != n || ws.upper.len() != n || ws.lower.iter().zip(&ws.upper).any(|(l, u)| !(l < u)) {
                return Err(invalid("workspace bounds"));
            }
        }
        for i in 0..self.agents.len() {
            for j in i + 1..self.agents.len() {
                let d = inf_dist(&self.agents[i].start, &self.agents[j].start);
                if !(d > self.delta) {
                    return Err(invalid(format!(
                        "starts of agents {i} and {j} are {d} apart, not more than delta = {}",
                        self.delta
                    )));
                }
            }
        }
        let p = &self.planner;
        if !(p.step > 0.0) || !(0.0..=1.0).contains(&p.goal_bias) || !(p.margin >= 0.0) {
            return Err(invalid("planner: step > 0, goal_bias in [0, 1], margin >= 0"));
        }
        Ok(())
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn model(&self) -> Result<DiscreteModel, HarnessError> {
        Ok(DiscreteModel::double_integrator(self.dimension, self.dt)?)
    }

    pub fn cost_weights(&self) -> Result<CostWeights, HarnessError> {
        let w = &self.weights;
        Ok(CostWeights::scaled(self.dimension, w.q_scale, w.r_scale, w.qf_scale, w.kappa)?)
    }

    pub fn admm_config(&self) -> AdmmConfig {
        AdmmConfig {
            rho: self.admm.rho,
            max_rounds: self.admm.max_rounds,
            tolerance: self.admm.tolerance,
            dual_tolerance: self.admm.dual_tolerance,
            parallel: self.admm.parallel,
            record_iterates: false,
            solver: self.solver.options(),
        }
    }

    pub fn thresholds(&self) -> DistanceThresholds {
        DistanceThresholds {
            d_min: self.d_min,
            p_max: self.p_max,
        }
    }

    fn join(p: &[f64], v: Option<&Vec<f64>>) -> State {
        let n = p.len();
        let mut s = DVector::zeros(2 * n);
        s.rows_mut(0, n).copy_from_slice(p);
        if let Some(v) = v {
            s.rows_mut(n, n).copy_from_slice(v);
        }
        s
    }

    pub fn start_states(&self) -> Vec<State> {
        self.agents
            .iter()
            .map(|a| Self::join(&a.start, a.start_velocity.as_ref()))
            .collect()
    }

    pub fn goals(&self) -> Vec<GoalSpec> {
        self.agents
            .iter()
            .map(|a| GoalSpec::new(Self::join(&a.goal, a.goal_velocity.as_ref())))
            .collect()
    }

    /// Planner box: the configured workspace, else starts and goals plus a margin.
    pub fn planner_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        if let Some(ws) = &self.workspace {
            return (DVector::from_vec(ws.lower.clone()), DVector::from_vec(ws.upper.clone()));
        }
        let n = self.dimension;
        let mut lo = DVector::from_element(n, f64::INFINITY);
        let mut hi = DVector::from_element(n, f64::NEG_INFINITY);
        for a in &self.agents {
            for p in [&a.start, &a.goal] {
                for d in 0..n {
                    lo[d] = lo[d].min(p[d]);
                    hi[d] = hi[d].max(p[d]);
                }
            }
        }
        lo.add_scalar_mut(-self.planner.margin);
        hi.add_scalar_mut(self.planner.margin);
        (lo, hi)
    }
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn position(s: &State) -> DVector<f64> {
    s.rows(0, s.len() / 2).into_owned()
}

/// `(min ‖p_i − p_j‖_∞, pairs closer than delta)` over unordered pairs.
pub fn collision_metrics(states: &[State], delta: f64) -> (f64, Vec<(usize, usize)>) {
    let mut min = f64::INFINITY;
    let mut pairs = Vec::new();
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            let d = (position(&states[i]) - position(&states[j])).amax();
            min = min.min(d);
            if d < delta {
                pairs.push((i, j));
            }
        }
    }
    (min, pairs)
}

pub fn goal_reached(states: &[State], goals: &[GoalSpec], tol_pos: f64, tol_vel: f64) -> bool {
    states.iter().zip(goals).all(|(s, g)| {
        let n = s.len() / 2;
        let pos_err = (s.rows(0, n) - g.state.rows(0, n)).norm();
        let speed = s.rows(n, n).norm();
        pos_err <= tol_pos && speed <= tol_vel
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub mode: SolveMode,
    pub inputs: Vec<Vec<f64>>,
    pub states: Vec<Vec<f64>>,
    pub admm_rounds: usize,
    pub residual: f64,
    pub converged: bool,
    pub min_distance: f64,
    pub statuses: Vec<SolveStatus>,
    pub infeasibility_event: bool,
    pub max_slack: f64,
    pub residual_history: Vec<f64>,
    pub solve_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub mode: SolveMode,
    pub delta: f64,
    pub success: bool,
    pub steps: usize,
    pub cost: f64,
    pub cost_without_slack: f64,
    pub min_distance: f64,
    pub max_slack: f64,
    pub max_penetration: f64,
    pub infeasibility_events: usize,
    pub mean_rounds: f64,
    pub final_goal_error: f64,
    pub total_solve_time_s: f64,
    pub mean_solve_time_s: f64,
    pub logs: Vec<StepLog>,
}

impl RunReport {
    /// Copy with every wall-clock field zeroed.
    pub fn without_timing(&self) -> RunReport {
        let mut r = self.clone();
        r.total_solve_time_s = 0.0;
        r.mean_solve_time_s = 0.0;
        for l in &mut r.logs {
            l.solve_time_s = 0.0;
        }
        r
    }

    pub fn log_min_distance(&self) -> f64 {
        self.logs.iter().map(|l| l.min_distance).fold(f64::INFINITY, f64::min)
    }
}

struct StepContext<'a> {
    sc: &'a Scenario,
    model: DiscreteModel,
    weights: CostWeights,
    goals: Vec<GoalSpec>,
    layout: CopyLayout,
}

impl StepContext<'_> {
    fn specs(&self, states: &[State], mode: SolveMode) -> Vec<AgentSpec> {
        let workspace = self
            .sc
            .workspace
            .as_ref()
            .map(|w| (DVector::from_vec(w.lower.clone()), DVector::from_vec(w.upper.clone())));
        (0..states.len())
            .map(|agent| AgentSpec {
                agent,
                model: self.model.clone(),
                horizon: self.sc.horizon,
                current_states: states.to_vec(),
                goal: self.goals[agent].clone(),
                weights: self.weights.clone(),
                delta: self.sc.delta,
                mode,
                thresholds: self.sc.thresholds(),
                workspace: workspace.clone(),
                input_bound: self.sc.input_bound,
            })
            .collect()
    }

    fn rrt_warm_starts(
        &self,
        states: &[State],
        step: usize,
    ) -> Result<Vec<Option<LocalWarmStart>>, HarnessError> {
        let sc = self.sc;
        let (lower, upper) = sc.planner_bounds();
        let plans: Vec<Result<_, HarnessError>> = (0..states.len())
            .into_par_iter()
            .map(|agent| {
                let start = position(&states[agent]);
                let mut obstacles = Vec::new();
                for (j, s) in states.iter().enumerate() {
                    if j == agent {
                        continue;
                    }
                    let cube = AgentCube::new(position(s), sc.delta)?.polytope();
                    if !crate::geometry::contains(&cube, &start)? {
                        obstacles.push(cube);
                    }
                }
                let mut cfg = PlannerConfig::new(lower.clone(), upper.clone(), derive_seed(sc.seed, agent, step));
                cfg.step = sc.planner.step;
                cfg.goal_bias = sc.planner.goal_bias;
                cfg.max_iterations = sc.planner.max_iterations;
                cfg.goal_tolerance = sc.planner.goal_tolerance;
                let goal = self.goals[agent].position();
                let path = rrt_plan(&start, &goal, &obstacles, &cfg)
                    .map_err(|source| HarnessError::Planner { agent, step, source })?;
                initial_guess_from_path(&path, sc.horizon, sc.dt, &self.goals[agent])
                    .map_err(|source| HarnessError::Planner { agent, step, source })
            })
            .collect();
        let guesses = plans.into_iter().collect::<Result<Vec<_>, _>>()?;
        let mut copies = CopyVector::zeros(self.layout);
        for (j, g) in guesses.iter().enumerate() {
            copies
                .set_trajectory(j, g)
                .map_err(|source| HarnessError::Consensus { step, source })?;
        }
        Ok((0..states.len())
            .map(|agent| {
                Some(LocalWarmStart {
                    copies: Some(copies.clone()),
                    certificates: Some(guess_certificates(&guesses, agent, sc.delta)),
                    penalty: None,
                })
            })
            .collect())
    }
}

fn goal_error(states: &[State], goals: &[GoalSpec]) -> f64 {
    states
        .iter()
        .zip(goals)
        .map(|(s, g)| (position(s) - g.position()).norm())
        .fold(0.0, f64::max)
}

fn max_penetration(states: &[State], delta: f64) -> f64 {
    let (min, _) = collision_metrics(states, delta);
    if min.is_finite() {
        (delta - min).max(0.0)
    } else {
        0.0
    }
}

pub fn run_dmpc(sc: &Scenario) -> Result<RunReport, HarnessError> {
    sc.validate()?;
    let ctx = StepContext {
        sc,
        model: sc.model()?,
        weights: sc.cost_weights()?,
        goals: sc.goals(),
        layout: CopyLayout::new(sc.num_agents(), sc.dimension, sc.horizon),
    };
    let cfg = sc.admm_config();
    let m = sc.num_agents();
    let mut states = sc.start_states();
    let mut prev: Option<AdmmOutcome> = None;
    let mut last_failed = true;
    let mut logs = Vec::new();
    let mut cost = 0.0;
    let mut slack_cost = 0.0;
    let mut max_slack = 0.0_f64;
    let mut max_pen = max_penetration(&states, sc.delta);
    let mut events = 0;
    let mut success = goal_reached(&states, &ctx.goals, sc.goal_tol_pos, sc.goal_tol_vel);

    info!("scenario {}: {} agents, mode {:?}", sc.name, m, sc.mode);
    for step in 0..sc.max_steps {
        if success {
            break;
        }
        let started = Instant::now();
        let plan_now = sc.warm_start == WarmStartKind::Rrt
            && match sc.planner.replan {
                ReplanPolicy::EveryStep => true,
                ReplanPolicy::OnFailure => last_failed,
                ReplanPolicy::FirstStep => step == 0,
            };
        let warm = if plan_now {
            ctx.rrt_warm_starts(&states, step)?
        } else {
            vec![None; m]
        };
        let init = prev.as_ref().map_or_else(|| AdmmInit::zeros(ctx.layout), AdmmInit::shifted);

        let mut mode = sc.mode;
        let mut event = false;
        let outcome = match run_admm(&ctx.specs(&states, mode), warm.clone(), init.clone(), &cfg) {
            Ok(o) => o,
            Err(ConsensusError::Infeasible { agent, round }) if mode == SolveMode::Hard => {
                events += 1;
                event = true;
                warn!("step {step}: agent {agent} infeasible in round {round}");
                if !sc.soft_fallback {
                    return Err(HarnessError::Consensus {
                        step,
                        source: ConsensusError::Infeasible { agent, round },
                    });
                }
                mode = SolveMode::Soft;
                run_admm(&ctx.specs(&states, mode), warm, init, &cfg)
                    .map_err(|source| HarnessError::Consensus { step, source })?
            }
            Err(source) => return Err(HarnessError::Consensus { step, source }),
        };

        let mut inputs = Vec::with_capacity(m);
        let mut next = Vec::with_capacity(m);
        for (i, s) in states.iter().enumerate() {
            let u = match sc.admm.applied_input {
                AppliedInput::Consensus => outcome.consensus.input(i, 0).into_owned(),
                AppliedInput::Own => outcome.solutions[i].v_plus.input(i, 0).into_owned(),
            };
            cost += stage_cost(s, &u, &ctx.goals[i], &ctx.weights)?;
            next.push(crate::dynamics::step(&ctx.model, s, &u)?);
            inputs.push(u);
        }
        let step_slack: f64 = outcome
            .solutions
            .iter()
            .flat_map(|s| s.certificates.iter().map(|c| c.alpha))
            .sum();
        let step_max_slack = outcome.solutions.iter().map(|s| s.max_slack()).fold(0.0, f64::max);
        slack_cost += ctx.weights.kappa * step_slack;
        max_slack = max_slack.max(step_max_slack);
        states = next;
        let (min_distance, _) = collision_metrics(&states, sc.delta);
        max_pen = max_pen.max(max_penetration(&states, sc.delta));
        let statuses: Vec<SolveStatus> = outcome.solutions.iter().map(|s| s.status).collect();
        last_failed = event || !outcome.converged;
        let elapsed = started.elapsed().as_secs_f64();
        debug!(
            "step {step}: rounds {} residual {:.3e} min distance {:.4}",
            outcome.rounds,
            outcome.final_residual(),
            min_distance
        );
        logs.push(StepLog {
            step,
            mode,
            inputs: inputs.iter().map(|u| u.iter().copied().collect()).collect(),
            states: states.iter().map(|s| s.iter().copied().collect()).collect(),
            admm_rounds: outcome.rounds,
            residual: outcome.final_residual(),
            converged: outcome.converged,
            min_distance,
            statuses,
            infeasibility_event: event,
            max_slack: step_max_slack,
            residual_history: outcome.history.iter().map(|r| r.primal).collect(),
            solve_time_s: elapsed,
        });
        prev = Some(outcome);
        success = goal_reached(&states, &ctx.goals, sc.goal_tol_pos, sc.goal_tol_vel);
    }

    let total: f64 = logs.iter().map(|l| l.solve_time_s).sum();
    let steps = logs.len();
    let report = RunReport {
        scenario: sc.name.clone(),
        mode: sc.mode,
        delta: sc.delta,
        success,
        steps,
        cost: cost + slack_cost,
        cost_without_slack: cost,
        min_distance: logs.iter().map(|l| l.min_distance).fold(f64::INFINITY, f64::min),
        max_slack,
        max_penetration: max_pen,
        infeasibility_events: events,
        mean_rounds: if steps > 0 {
            logs.iter().map(|l| l.admm_rounds as f64).sum::<f64>() / steps as f64
        } else {
            0.0
        },
        final_goal_error: goal_error(&states, &ctx.goals),
        total_solve_time_s: total,
        mean_solve_time_s: if steps > 0 { total / steps as f64 } else { 0.0 },
        logs,
    };
    info!(
        "scenario {}: success {} after {} steps, cost {:.4}",
        sc.name, report.success, report.steps, report.cost
    );
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<RunReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
}

pub fn sweep_delta(sc: &Scenario, deltas: &[f64]) -> SweepReport {
    let entries = deltas
        .iter()
        .map(|&delta| {
            let mut s = sc.clone();
            s.delta = delta;
            match run_dmpc(&s) {
                Ok(r) => SweepEntry {
                    delta,
                    report: Some(r),
                    error: None,
                },
                Err(e) => SweepEntry {
                    delta,
                    report: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    SweepReport { entries }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeComparison {
    pub hard: Option<RunReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hard_error: Option<String>,
    pub soft: Option<RunReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub soft_error: Option<String>,
}

/// Runs the scenario in both modes; the hard run never falls back to soft.
pub fn compare_modes(sc: &Scenario) -> ModeComparison {
    let mut hard = sc.clone();
    hard.mode = SolveMode::Hard;
    hard.soft_fallback = false;
    let mut soft = sc.clone();
    soft.mode = SolveMode::Soft;
    let (h, s) = (run_dmpc(&hard), run_dmpc(&soft));
    ModeComparison {
        hard_error: h.as_ref().err().map(|e| e.to_string()),
        hard: h.ok(),
        soft_error: s.as_ref().err().map(|e| e.to_string()),
        soft: s.ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(p: &[f64]) -> State {
        let n = p.len();
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from_slice(p);
        out
    }

    #[test]
    fn collision_metric_examples() {
        let (d, pairs) = collision_metrics(&[s(&[0.0, 0.0]), s(&[1.0, 0.0])], 0.1);
        assert_eq!(d, 1.0);
        assert!(pairs.is_empty());
        let (d, pairs) = collision_metrics(&[s(&[0.0, 0.0]), s(&[0.05, 0.0])], 0.1);
        assert_eq!(d, 0.05);
        assert_eq!(pairs, vec![(0, 1)]);
        let (d, pairs) = collision_metrics(&[s(&[0.0, 0.0])], 0.1);
        assert_eq!(d, f64::INFINITY);
        assert!(pairs.is_empty());
    }

    #[test]
    fn goal_reached_examples() {
        let goals = vec![GoalSpec::at_rest(&DVector::from_vec(vec![1.0, 1.0]))];
        assert!(goal_reached(&[s(&[1.0, 1.0])], &goals, 0.05, 0.05));
        assert!(!goal_reached(&[s(&[1.1, 1.0])], &goals, 0.05, 0.05));
        let mut moving = s(&[1.0, 1.0]);
        moving[2] = 0.1;
        assert!(!goal_reached(&[moving], &goals, 0.05, 0.05));
    }
}
