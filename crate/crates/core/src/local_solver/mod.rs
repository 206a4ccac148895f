//! Per-agent nonconvex finite-horizon solve.
//!
//! Augmented-Lagrangian outer loop with a projected Newton inner method.

mod newton;
mod objective;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::{CopyLayout, CopyVector, Multiplier, NetworkAverage};
use crate::costs::{augmented_lagrangian, CostWeights, GoalSpec};
use crate::dynamics::{DiscreteModel, State};
use crate::geometry::{DistanceThresholds, DualCertificate};

pub use objective::{LocalObjective, PenaltyState};

use newton::{minimize, projected_gradient_norm};
use objective::ConstraintKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    #[default]
    Hard,
    Soft,
}

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("agent {agent} out of range for {agents} agents")]
    AgentOutOfRange { agent: usize, agents: usize },
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("delta must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("rho must be nonnegative, got {0}")]
    NegativeRho(f64),
    #[error("non-finite initial state for agent {0}")]
    NonFiniteState(usize),
    #[error("{what} has the wrong shape")]
    Shape { what: &'static str },
    #[error("invalid solver options: {0}")]
    Options(&'static str),
}

/// Data fixed for one MPC step.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub agent: usize,
    pub model: DiscreteModel,
    pub horizon: usize,
    /// Measured states of every agent; `current_states[agent]` is `s0`.
    pub current_states: Vec<State>,
    pub goal: GoalSpec,
    pub weights: CostWeights,
    pub delta: f64,
    pub mode: SolveMode,
    pub thresholds: DistanceThresholds,
    /// Box `(lower, upper)` on own positions.
    pub workspace: Option<(DVector<f64>, DVector<f64>)>,
    /// Bound on `|u|` per component.
    pub input_bound: Option<f64>,
}

impl AgentSpec {
    pub fn num_agents(&self) -> usize {
        self.current_states.len()
    }

    pub fn s0(&self) -> &State {
        &self.current_states[self.agent]
    }

    pub fn layout(&self) -> CopyLayout {
        CopyLayout::new(self.num_agents(), self.model.dim, self.horizon)
    }
}

/// Consensus data for one ADMM round.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusTerms {
    pub v_bar: NetworkAverage,
    pub gamma: Multiplier,
    pub rho: f64,
}

impl ConsensusTerms {
    pub fn zeros(layout: CopyLayout, rho: f64) -> Self {
        Self {
            v_bar: CopyVector::zeros(layout),
            gamma: CopyVector::zeros(layout),
            rho,
        }
    }

    /// Minimizer of `γᵀ(v − v̄) + ρ/2 ‖v − v̄‖²` entrywise (`v̄` when `ρ = 0`).
    pub fn proximal_point(&self) -> CopyVector {
        let mut out = self.v_bar.clone();
        if self.rho > 0.0 {
            *out.data_mut() -= self.gamma.data() / self.rho;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalProblem {
    pub spec: AgentSpec,
    pub consensus: ConsensusTerms,
}

impl LocalProblem {
    pub fn new(spec: AgentSpec, consensus: ConsensusTerms) -> Result<Self, SolverError> {
        let p = Self { spec, consensus };
        p.validate()?;
        Ok(p)
    }

    pub fn neighbors(&self) -> impl Iterator<Item = usize> + '_ {
        let me = self.spec.agent;
        (0..self.spec.num_agents()).filter(move |&j| j != me)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let s = &self.spec;
        let agents = s.num_agents();
        if s.agent >= agents {
            return Err(SolverError::AgentOutOfRange {
                agent: s.agent,
                agents,
            });
        }
        if s.horizon == 0 {
            return Err(SolverError::EmptyHorizon);
        }
        if !(s.delta > 0.0) {
            return Err(SolverError::NonPositiveDelta(s.delta));
        }
        if !(self.consensus.rho >= 0.0) {
            return Err(SolverError::NegativeRho(self.consensus.rho));
        }
        let nx = s.model.state_dim();
        for (j, st) in s.current_states.iter().enumerate() {
            if st.len() != nx {
                return Err(SolverError::Shape { what: "current state" });
            }
            if st.iter().any(|v| !v.is_finite()) {
                return Err(SolverError::NonFiniteState(j));
            }
        }
        if s.goal.state.len() != nx {
            return Err(SolverError::Shape { what: "goal" });
        }
        if s.weights.state_dim() != nx || s.weights.input_dim() != s.model.dim {
            return Err(SolverError::Shape { what: "weights" });
        }
        if let Some((lo, hi)) = &s.workspace {
            if lo.len() != s.model.dim || hi.len() != s.model.dim {
                return Err(SolverError::Shape { what: "workspace" });
            }
        }
        let layout = s.layout();
        if self.consensus.v_bar.layout() != layout {
            return Err(SolverError::Shape { what: "network average" });
        }
        if self.consensus.gamma.layout() != layout {
            return Err(SolverError::Shape { what: "multiplier" });
        }
        Ok(())
    }

    /// Number of certificate blocks, `(M − 1)·N`.
    pub fn num_certificates(&self) -> usize {
        (self.spec.num_agents() - 1) * self.spec.horizon
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_outer_iters: usize,
    pub max_inner_iters: usize,
    pub constraint_tolerance: f64,
    pub stationarity_tolerance: f64,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub max_penalty: f64,
    pub fd_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_outer_iters: 30,
            max_inner_iters: 100,
            constraint_tolerance: 1e-6,
            stationarity_tolerance: 1e-6,
            initial_penalty: 10.0,
            penalty_growth: 10.0,
            max_penalty: 1e8,
            fd_step: 1e-6,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.constraint_tolerance > 0.0
            && self.stationarity_tolerance > 0.0
            && self.fd_step > 0.0)
        {
            return Err(SolverError::Options("tolerances must be positive"));
        }
        if !(self.penalty_growth > 1.0) {
            return Err(SolverError::Options("penalty growth must exceed 1"));
        }
        if !(self.initial_penalty > 0.0 && self.max_penalty >= self.initial_penalty) {
            return Err(SolverError::Options("penalty range"));
        }
        if self.max_outer_iters == 0 {
            return Err(SolverError::Options("max_outer_iters must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSolution {
    pub v_plus: CopyVector,
    /// One certificate per (neighbour, step), neighbour-major, `k = 1..=N`.
    pub certificates: Vec<DualCertificate>,
    pub status: SolveStatus,
    pub max_violation: f64,
    pub stationarity: f64,
    pub objective: f64,
    pub penalty: PenaltyState,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
}

impl LocalSolution {
    pub fn max_slack(&self) -> f64 {
        self.certificates.iter().fold(0.0, |m, c| m.max(c.alpha))
    }
}

/// Initial guess for [`solve_local`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LocalWarmStart {
    pub copies: Option<CopyVector>,
    pub certificates: Option<Vec<DualCertificate>>,
    pub penalty: Option<PenaltyState>,
}

impl LocalWarmStart {
    pub fn from_solution(sol: &LocalSolution) -> Self {
        Self {
            copies: Some(sol.v_plus.clone()),
            certificates: Some(sol.certificates.clone()),
            penalty: Some(sol.penalty.clone()),
        }
    }
}

fn initial_point(
    p: &LocalProblem,
    obj: &LocalObjective<'_>,
    warm: Option<&LocalWarmStart>,
) -> Result<DVector<f64>, SolverError> {
    let n = p.spec.model.dim;
    let nu = obj.num_inputs();
    let layout = p.spec.layout();
    let mut x = DVector::zeros(obj.num_vars());
    let prox = p.consensus.proximal_point();
    let copies = match warm.and_then(|w| w.copies.as_ref()) {
        Some(c) if c.layout() != layout => {
            return Err(SolverError::Shape { what: "warm-start copies" })
        }
        Some(c) => Some(c),
        None => None,
    };
    if let Some(c) = copies {
        for k in 0..p.spec.horizon {
            x.rows_mut(k * n, n).copy_from(&c.input(p.spec.agent, k));
        }
    }
    let source = copies.unwrap_or(&prox);
    for blk in &obj.blocks {
        if blk.has_pos {
            x.rows_mut(blk.offset, n)
                .copy_from(&source.position(blk.neighbor, blk.k));
        }
    }

    let certs = warm.and_then(|w| w.certificates.as_ref());
    if let Some(c) = certs {
        if c.len() != obj.blocks.len() || c.iter().any(|c| c.lambda.len() != 2 * n) {
            return Err(SolverError::Shape { what: "warm-start certificates" });
        }
    }
    let x_proj = obj.project(&x);
    let states = obj.own_states(&x_proj);
    for (b, blk) in obj.blocks.iter().enumerate() {
        let cert = match certs {
            Some(c) => c[b].clone(),
            None => {
                let r = obj.block_relative_position(blk, &x_proj, &states);
                DualCertificate::aligned_with(&r, p.spec.delta)
            }
        };
        x.rows_mut(blk.lambda_offset(n), 2 * n).copy_from(&cert.lambda);
        if p.spec.mode == SolveMode::Soft {
            x[blk.alpha_offset(n)] = 0.0;
        }
    }
    let mut x = obj.project(&x);
    if p.spec.mode == SolveMode::Soft {
        // slack covers any initial violation
        let c = obj.constraint_values(&x);
        for (b, blk) in obj.blocks.iter().enumerate() {
            let alpha = match certs {
                Some(cs) => cs[b].alpha.max(0.0),
                None => 0.0,
            };
            x[blk.alpha_offset(n)] = alpha.max(-c[2 * b]);
        }
    }
    debug_assert!(nu <= x.len());
    Ok(x)
}

/// Certificates with `‖Gᵀλ‖` far below one sit near the `λ = 0` saddle of the
/// norm condition, where its gradient vanishes. Restart them from the face
/// aligned with the current relative position.
/// Replaces a certificate by the face-aligned one when `‖Gᵀλ‖` has collapsed,
/// or, with `improve`, when it certifies less than `d_min` at the current
/// positions and the aligned one does better. Each face is a local optimum
/// of the certified value, so a warm-started certificate can otherwise stay
/// on the wrong face.
fn reseat_certificates(p: &LocalProblem, obj: &LocalObjective<'_>, x: &mut DVector<f64>, improve: bool) {
    let n = p.spec.model.dim;
    let delta = p.spec.delta;
    let d_min = p.spec.thresholds.d_min;
    let soft = p.spec.mode == SolveMode::Soft;
    let states = obj.own_states(x);
    for blk in &obj.blocks {
        let lam = x.rows(blk.lambda_offset(n), 2 * n).into_owned();
        let w = lam.rows(0, n) - lam.rows(n, n);
        let r = obj.block_relative_position(blk, x, &states);
        let current = r.dot(&w) - delta * lam.sum();
        let cert = DualCertificate::aligned_with(&r, delta);
        let aligned = r.dot(&(cert.lambda.rows(0, n) - cert.lambda.rows(n, n))) - delta;
        let stale = improve && current < d_min && aligned > current + 1e-12;
        if w.norm_squared() >= 0.25 && !stale {
            continue;
        }
        x.rows_mut(blk.lambda_offset(n), 2 * n).copy_from(&cert.lambda);
        if soft {
            x[blk.alpha_offset(n)] = (d_min - aligned).max(0.0);
        }
    }
}

fn assemble_copies(p: &LocalProblem, obj: &LocalObjective<'_>, x: &DVector<f64>) -> CopyVector {
    let n = p.spec.model.dim;
    let i = p.spec.agent;
    let mut v = p.consensus.proximal_point();
    for (k, s) in obj.own_states(x).iter().enumerate() {
        v.set_state(i, k, s);
    }
    for k in 0..p.spec.horizon {
        v.set_input(i, k, &x.rows(k * n, n).into_owned());
    }
    for j in p.neighbors() {
        v.set_state(j, 0, &p.spec.current_states[j]);
    }
    for blk in &obj.blocks {
        let off = v.layout().state_offset(blk.neighbor, blk.k);
        let pos = match &blk.pinned_pos {
            Some(pp) => pp.clone(),
            None => x.rows(blk.offset, n).into_owned(),
        };
        v.data_mut().rows_mut(off, n).copy_from(&pos);
    }
    v
}

fn extract_certificates(p: &LocalProblem, obj: &LocalObjective<'_>, x: &DVector<f64>) -> Vec<DualCertificate> {
    let n = p.spec.model.dim;
    obj.blocks
        .iter()
        .map(|blk| {
            let lambda = x.rows(blk.lambda_offset(n), 2 * n).into_owned();
            let alpha = match p.spec.mode {
                SolveMode::Soft => x[blk.alpha_offset(n)],
                SolveMode::Hard => 0.0,
            };
            DualCertificate::new(lambda, alpha)
        })
        .collect()
}

/// Feasibility of the constraint vector `c` and complementarity against `mult`.
fn violation(kinds: &[ConstraintKind], c: &DVector<f64>, mult: &DVector<f64>) -> (f64, f64) {
    let mut feas = 0.0_f64;
    let mut comp = 0.0_f64;
    for (idx, kind) in kinds.iter().enumerate() {
        match kind {
            ConstraintKind::Inequality => {
                feas = feas.max(-c[idx]);
                comp = comp.max(c[idx].min(mult[idx]).abs());
            }
            ConstraintKind::Equality => feas = feas.max(c[idx].abs()),
        }
    }
    (feas.max(0.0), comp)
}

pub fn solve_local(
    p: &LocalProblem,
    warm_start: Option<&LocalWarmStart>,
    opts: &SolverOptions,
) -> Result<LocalSolution, SolverError> {
    p.validate()?;
    opts.validate()?;
    let obj = LocalObjective::new(p);
    let mut x = initial_point(p, &obj, warm_start)?;
    let m = obj.num_constraints();
    let mut alm = PenaltyState {
        multipliers: DVector::zeros(m),
        penalty: opts.initial_penalty,
    };
    if let Some(w) = warm_start.and_then(|w| w.penalty.as_ref()) {
        if w.multipliers.len() == m {
            alm.multipliers = w.multipliers.clone();
        }
    }

    let eps_con = opts.constraint_tolerance;
    let eps_kkt = opts.stationarity_tolerance;
    let mut prev = f64::INFINITY;
    let mut stalls = 0;
    let mut inner_total = 0;
    let mut outer = 0;
    let mut feas = f64::INFINITY;
    let mut stat = f64::INFINITY;
    let mut converged = false;

    while outer < opts.max_outer_iters {
        outer += 1;
        reseat_certificates(p, &obj, &mut x, outer == 1);
        let inner = minimize(&obj, x, &alm, eps_kkt, opts.max_inner_iters);
        inner_total += inner.iterations;
        x = inner.x;
        let c = obj.constraint_values(&x);
        let pen = alm.penalty;
        let next = DVector::from_iterator(
            m,
            obj.kinds().iter().enumerate().map(|(idx, kind)| match kind {
                ConstraintKind::Inequality => (alm.multipliers[idx] - pen * c[idx]).max(0.0),
                ConstraintKind::Equality => alm.multipliers[idx] + pen * c[idx],
            }),
        );
        let (f, comp) = violation(obj.kinds(), &c, &next);
        alm.multipliers = next;
        feas = f;
        stat = inner.pg_norm;
        let measure = f.max(comp);
        log::trace!(
            "agent {} outer {outer}: inner {} feas {f:.3e} comp {comp:.3e} stat {stat:.3e} penalty {pen:.1e}",
            p.spec.agent,
            inner.iterations
        );
        if f <= eps_con && comp <= eps_con && stat <= eps_kkt {
            converged = true;
            break;
        }
        if measure > 0.25 * prev {
            if alm.penalty >= opts.max_penalty {
                stalls += 1;
                if stalls >= 3 {
                    break;
                }
            }
            alm.penalty = (alm.penalty * opts.penalty_growth).min(opts.max_penalty);
        }
        prev = measure;
    }

    if log::log_enabled!(log::Level::Trace) {
        let c = obj.constraint_values(&x);
        let states = obj.own_states(&x);
        let n = p.spec.model.dim;
        for (b, blk) in obj.blocks.iter().enumerate() {
            let alpha = if p.spec.mode == SolveMode::Soft { x[blk.alpha_offset(n)] } else { 0.0 };
            if c[2 * b] < -eps_con || c[2 * b + 1].abs() > eps_con || alpha > 1e-2 {
                log::trace!(
                    "agent {} block j={} k={}: r {:?} lambda {:?} alpha {alpha:.3e} c {:.3e} norm {:.3e}",
                    p.spec.agent,
                    blk.neighbor,
                    blk.k,
                    obj.block_relative_position(blk, &x, &states).as_slice(),
                    x.rows(blk.lambda_offset(n), 2 * n).as_slice(),
                    c[2 * b],
                    c[2 * b + 1]
                );
            }
        }
    }
    let status = if converged {
        SolveStatus::Converged
    } else if p.spec.mode == SolveMode::Hard && feas > eps_con {
        SolveStatus::Infeasible
    } else {
        SolveStatus::MaxIters
    };
    let v_plus = assemble_copies(p, &obj, &x);
    let certificates = extract_certificates(p, &obj, &x);
    let slack: f64 = certificates.iter().map(|c| c.alpha).sum();
    let objective = augmented_lagrangian(
        &v_plus,
        &p.consensus.v_bar,
        &p.consensus.gamma,
        p.consensus.rho,
        p.spec.agent,
        &p.spec.goal,
        &p.spec.weights,
    )
    .map_err(|_| SolverError::Shape { what: "copies" })?
        + p.spec.weights.kappa * slack;

    Ok(LocalSolution {
        v_plus,
        certificates,
        status,
        max_violation: feas,
        stationarity: stat,
        objective,
        penalty: alm,
        outer_iterations: outer,
        inner_iterations: inner_total,
    })
}

/// Decision vector of `candidate` in the solver's reduced coordinates.
pub fn decision_vector(p: &LocalProblem, candidate: &LocalSolution) -> Result<DVector<f64>, SolverError> {
    let obj = LocalObjective::new(p);
    to_decision_vector(p, &obj, candidate)
}

fn to_decision_vector(
    p: &LocalProblem,
    obj: &LocalObjective<'_>,
    candidate: &LocalSolution,
) -> Result<DVector<f64>, SolverError> {
    let n = p.spec.model.dim;
    if candidate.v_plus.layout() != p.spec.layout() {
        return Err(SolverError::Shape { what: "candidate copies" });
    }
    if candidate.certificates.len() != obj.blocks.len() {
        return Err(SolverError::Shape { what: "candidate certificates" });
    }
    let v = &candidate.v_plus;
    let mut x = DVector::zeros(obj.num_vars());
    for k in 0..p.spec.horizon {
        x.rows_mut(k * n, n).copy_from(&v.input(p.spec.agent, k));
    }
    for (blk, cert) in obj.blocks.iter().zip(&candidate.certificates) {
        if blk.has_pos {
            x.rows_mut(blk.offset, n).copy_from(&v.position(blk.neighbor, blk.k));
        }
        if cert.lambda.len() != 2 * n {
            return Err(SolverError::Shape { what: "candidate certificates" });
        }
        x.rows_mut(blk.lambda_offset(n), 2 * n).copy_from(&cert.lambda);
        if p.spec.mode == SolveMode::Soft {
            x[blk.alpha_offset(n)] = cert.alpha;
        }
    }
    Ok(x)
}

/// `(feasibility, stationarity)` of a candidate solution.
///
/// Feasibility covers own dynamics and initial state, pinned neighbour
/// entries, certificate constraints, sign and input bounds. Stationarity is
/// the projected Lagrangian gradient in reduced coordinates (using the
/// candidate's multipliers) together with the proximal residual of every
/// copy entry that is not a decision variable.
pub fn kkt_residual(p: &LocalProblem, candidate: &LocalSolution) -> Result<(f64, f64), SolverError> {
    p.validate()?;
    let obj = LocalObjective::new(p);
    let x = to_decision_vector(p, &obj, candidate)?;
    let v = &candidate.v_plus;
    let i = p.spec.agent;
    let n = p.spec.model.dim;
    let model = &p.spec.model;

    // own dynamics and initial state
    let own = v.trajectory(i);
    let mut feas = own.dynamics_residual(model);
    feas = feas.max((&own.states[0] - p.spec.s0()).amax());
    for j in p.neighbors() {
        feas = feas.max((v.state(j, 0) - &p.spec.current_states[j]).amax());
    }
    for blk in &obj.blocks {
        if let Some(pp) = &blk.pinned_pos {
            feas = feas.max((v.position(blk.neighbor, blk.k) - pp).amax());
        }
    }

    // certificate constraints are evaluated on the candidate's own positions
    let mut shifted = x.clone();
    let condensed = obj.own_states(&x);
    let c = obj.constraint_values(&shifted);
    let mut c = c;
    for (b, blk) in obj.blocks.iter().enumerate() {
        let drift = v.position(i, blk.k) - condensed[blk.k].rows(0, n);
        let lam = x.rows(blk.lambda_offset(n), 2 * n);
        let w = lam.rows(0, n) - lam.rows(n, n);
        c[2 * b] += drift.dot(&w);
    }
    let zero = DVector::zeros(c.len());
    let (cf, _) = violation(obj.kinds(), &c, &zero);
    feas = feas.max(cf);
    let lower = obj.lower();
    let upper = obj.upper();
    for idx in 0..x.len() {
        feas = feas.max(lower[idx] - x[idx]).max(x[idx] - upper[idx]);
    }
    if p.spec.mode == SolveMode::Hard {
        for cert in &candidate.certificates {
            feas = feas.max(cert.alpha.abs());
        }
    }

    shifted = obj.project(&x);
    let mult = if candidate.penalty.multipliers.len() == obj.num_constraints() {
        candidate.penalty.multipliers.clone()
    } else {
        DVector::zeros(obj.num_constraints())
    };
    let g = obj.lagrangian_gradient(&shifted, &mult);
    let mut stat = projected_gradient_norm(&shifted, &g, lower, upper);

    let cons = &p.consensus;
    let layout = p.spec.layout();
    let mut variable = vec![false; layout.len()];
    let own_off = layout.block_offset(i);
    variable[own_off..own_off + layout.block_len()].fill(true);
    for j in p.neighbors() {
        let off = layout.state_offset(j, 0);
        variable[off..off + layout.state_len()].fill(true);
    }
    for blk in &obj.blocks {
        let off = layout.state_offset(blk.neighbor, blk.k);
        variable[off..off + n].fill(true);
    }
    for (idx, is_var) in variable.iter().enumerate() {
        if !is_var {
            let r = cons.gamma.data()[idx] + cons.rho * (v.data()[idx] - cons.v_bar.data()[idx]);
            stat = stat.max(r.abs());
        }
    }
    Ok((feas.max(0.0), stat))
}

/// Gradient of the augmented-Lagrangian merit function in reduced coordinates.
pub fn objective_gradient(
    p: &LocalProblem,
    point: &DVector<f64>,
    alm: &PenaltyState,
) -> Result<DVector<f64>, SolverError> {
    let obj = LocalObjective::new(p);
    check_point(&obj, point, alm)?;
    Ok(obj.merit_gradient(point, alm))
}

/// Value of the augmented-Lagrangian merit function in reduced coordinates.
pub fn objective_value(
    p: &LocalProblem,
    point: &DVector<f64>,
    alm: &PenaltyState,
) -> Result<f64, SolverError> {
    let obj = LocalObjective::new(p);
    check_point(&obj, point, alm)?;
    Ok(obj.merit(point, alm))
}

fn check_point(obj: &LocalObjective<'_>, point: &DVector<f64>, alm: &PenaltyState) -> Result<(), SolverError> {
    if point.len() != obj.num_vars() {
        return Err(SolverError::Shape { what: "point" });
    }
    if alm.multipliers.len() != obj.num_constraints() {
        return Err(SolverError::Shape { what: "multipliers" });
    }
    Ok(())
}
