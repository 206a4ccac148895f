//! Reduced-space objective for one agent's local problem.
//!
//! The own trajectory is condensed (`s_k = Φ_k s_0 + Γ_k u`), so the own
//! dynamics hold exactly. The remaining decision vector is
//!
//! ```text
//! x = [ u (N·n) | block_1 | … | block_B ]
//! block (j, k) = [ p_j(k) (n, only for k ≥ 2) | λ (2n) | α (soft mode only) ]
//! ```
//!
//! Copies that appear in no constraint (neighbour velocities and inputs,
//! and the pinned entries at `k = 0` and the neighbour positions at `k = 1`)
//! are not decision variables.
//!
//! Constraints handled by the augmented Lagrangian, in index order:
//! per block a collision inequality and a certificate-norm condition
//! `‖Gᵀλ‖² = 1` (equality in both modes), followed by optional
//! workspace inequalities on own positions.

use nalgebra::{DMatrix, DVector};

use super::{LocalProblem, SolveMode};

#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub neighbor: usize,
    pub k: usize,
    pub offset: usize,
    pub has_pos: bool,
    pub len: usize,
    /// Neighbour position when it is pinned (k = 1).
    pub pinned_pos: Option<DVector<f64>>,
}

impl Block {
    pub fn lambda_offset(&self, n: usize) -> usize {
        self.offset + if self.has_pos { n } else { 0 }
    }

    pub fn alpha_offset(&self, n: usize) -> usize {
        self.lambda_offset(n) + 2 * n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ConstraintKind {
    Inequality,
    Equality,
}

/// Multipliers and penalty parameter of the augmented-Lagrangian scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyState {
    pub multipliers: DVector<f64>,
    pub penalty: f64,
}

/// Dense `u`–`u` block plus one small block per certificate, each coupled only to `u`.
pub(crate) struct ArrowHessian {
    pub uu: DMatrix<f64>,
    /// `(H_bb, H_bu)` per block.
    pub blocks: Vec<(DMatrix<f64>, DMatrix<f64>)>,
}

/// Local derivative data of one collision block in `ξ = (r, λ⁺, λ⁻, α)` space.
struct BlockEval {
    r: DVector<f64>,
    c: f64,
    dc: DVector<f64>,
    m: f64,
    dm: DVector<f64>,
}

pub struct LocalObjective<'a> {
    problem: &'a LocalProblem,
    n: usize,
    horizon: usize,
    soft: bool,
    s0: DVector<f64>,
    /// Own position Jacobians `∂p_i(k)/∂u`, k = 0..=N.
    pos_jac: Vec<DMatrix<f64>>,
    own_hess: DMatrix<f64>,
    pub(crate) blocks: Vec<Block>,
    num_vars: usize,
    lower: DVector<f64>,
    upper: DVector<f64>,
    kinds: Vec<ConstraintKind>,
    workspace: Option<(DVector<f64>, DVector<f64>)>,
}

impl<'a> LocalObjective<'a> {
    pub fn new(problem: &'a LocalProblem) -> Self {
        let spec = &problem.spec;
        let n = spec.model.dim;
        let nx = 2 * n;
        let horizon = spec.horizon;
        let nu = horizon * n;
        let soft = spec.mode == SolveMode::Soft;
        let a = &spec.model.a;
        let b = &spec.model.b;
        let rho = problem.consensus.rho;

        // Γ_k maps the stacked input to s_k
        let mut gammas = vec![DMatrix::zeros(nx, nu)];
        for k in 0..horizon {
            let mut next = a * &gammas[k];
            next.view_mut((0, k * n), (nx, n)).copy_from(b);
            gammas.push(next);
        }
        let pos_jac: Vec<DMatrix<f64>> =
            gammas.iter().map(|g| g.rows(0, n).into_owned()).collect();

        let mut own_hess = DMatrix::zeros(nu, nu);
        for (k, g) in gammas.iter().enumerate().skip(1) {
            let w = if k < horizon { &spec.weights.q } else { &spec.weights.qf };
            let weight = w * 2.0 + DMatrix::identity(nx, nx) * rho;
            own_hess += g.transpose() * weight * g;
        }
        let r_block = &spec.weights.r * 2.0 + DMatrix::identity(n, n) * rho;
        for k in 0..horizon {
            let mut view = own_hess.view_mut((k * n, k * n), (n, n));
            view += &r_block;
        }

        let mut blocks = Vec::new();
        let mut offset = nu;
        for j in problem.neighbors() {
            let sj = &spec.current_states[j];
            let pinned = (a * sj).rows(0, n).into_owned();
            for k in 1..=horizon {
                let has_pos = k >= 2;
                let len = if has_pos { n } else { 0 } + 2 * n + usize::from(soft);
                blocks.push(Block {
                    neighbor: j,
                    k,
                    offset,
                    has_pos,
                    len,
                    pinned_pos: (!has_pos).then(|| pinned.clone()),
                });
                offset += len;
            }
        }
        let num_vars = offset;

        let mut lower = DVector::from_element(num_vars, f64::NEG_INFINITY);
        let mut upper = DVector::from_element(num_vars, f64::INFINITY);
        if let Some(bound) = spec.input_bound {
            lower.rows_mut(0, nu).fill(-bound);
            upper.rows_mut(0, nu).fill(bound);
        }
        for blk in &blocks {
            lower.rows_mut(blk.lambda_offset(n), 2 * n).fill(0.0);
            if soft {
                lower[blk.alpha_offset(n)] = 0.0;
            }
        }

        let mut kinds = Vec::new();
        for _ in &blocks {
            kinds.push(ConstraintKind::Inequality);
            kinds.push(ConstraintKind::Equality);
        }
        let workspace = spec.workspace.clone();
        if workspace.is_some() {
            kinds.extend(std::iter::repeat(ConstraintKind::Inequality).take(2 * n * horizon));
        }

        Self {
            problem,
            n,
            horizon,
            soft,
            s0: spec.current_states[spec.agent].clone(),
            pos_jac,
            own_hess,
            blocks,
            num_vars,
            lower,
            upper,
            kinds,
            workspace,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.kinds.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub(crate) fn kinds(&self) -> &[ConstraintKind] {
        &self.kinds
    }

    pub(crate) fn num_inputs(&self) -> usize {
        self.horizon * self.n
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            x.len(),
            x.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .map(|(&v, (&lo, &hi))| v.clamp(lo, hi)),
        )
    }

    /// Own states `s_0..s_N` from the stacked input.
    pub fn own_states(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        let model = &self.problem.spec.model;
        let n = self.n;
        let mut states = Vec::with_capacity(self.horizon + 1);
        states.push(self.s0.clone());
        for k in 0..self.horizon {
            let u = x.rows(k * n, n);
            let next = &model.a * &states[k] + &model.b * u;
            states.push(next);
        }
        states
    }

    fn neighbor_position(&self, blk: &Block, x: &DVector<f64>) -> DVector<f64> {
        match &blk.pinned_pos {
            Some(p) => p.clone(),
            None => x.rows(blk.offset, self.n).into_owned(),
        }
    }

    fn eval_block(&self, blk: &Block, x: &DVector<f64>, states: &[DVector<f64>]) -> BlockEval {
        let n = self.n;
        let delta = self.problem.spec.delta;
        let d_min = if self.soft {
            0.0
        } else {
            self.problem.spec.thresholds.d_min
        };
        let own = states[blk.k].rows(0, n);
        let r = own - self.neighbor_position(blk, x);
        let lam = x.rows(blk.lambda_offset(n), 2 * n);
        let lp = lam.rows(0, n);
        let lm = lam.rows(n, n);
        let w = lp - lm;
        let alpha = if self.soft { x[blk.alpha_offset(n)] } else { 0.0 };

        let c = r.dot(&w) - delta * lam.sum() + alpha - d_min;
        let xi = 3 * n + usize::from(self.soft);
        let mut dc = DVector::zeros(xi);
        dc.rows_mut(0, n).copy_from(&w);
        for d in 0..n {
            dc[n + d] = r[d] - delta;
            dc[2 * n + d] = -r[d] - delta;
        }
        if self.soft {
            dc[3 * n] = 1.0;
        }
        let m = w.norm_squared();
        let mut dm = DVector::zeros(xi);
        dm.rows_mut(n, n).copy_from(&(&w * 2.0));
        dm.rows_mut(2 * n, n).copy_from(&(&w * -2.0));
        BlockEval { r, c, dc, m, dm }
    }

    /// Collision and norm constraint values, then workspace constraints.
    pub fn constraint_values(&self, x: &DVector<f64>) -> DVector<f64> {
        let states = self.own_states(x);
        self.constraint_values_with(x, &states)
    }

    fn constraint_values_with(&self, x: &DVector<f64>, states: &[DVector<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.num_constraints());
        for (b, blk) in self.blocks.iter().enumerate() {
            let e = self.eval_block(blk, x, states);
            out[2 * b] = e.c;
            out[2 * b + 1] = e.m - 1.0;
        }
        if let Some((lo, hi)) = &self.workspace {
            let base = 2 * self.blocks.len();
            for k in 1..=self.horizon {
                for d in 0..self.n {
                    let idx = base + 2 * ((k - 1) * self.n + d);
                    out[idx] = states[k][d] - lo[d];
                    out[idx + 1] = hi[d] - states[k][d];
                }
            }
        }
        out
    }

    /// Own cost, consensus terms of every decision variable, and `κ Σ α`.
    pub fn base_value(&self, x: &DVector<f64>) -> f64 {
        let states = self.own_states(x);
        self.base_value_with(x, &states)
    }

    fn base_value_with(&self, x: &DVector<f64>, states: &[DVector<f64>]) -> f64 {
        let spec = &self.problem.spec;
        let cons = &self.problem.consensus;
        let (rho, v_bar, gamma) = (cons.rho, &cons.v_bar, &cons.gamma);
        let i = spec.agent;
        let n = self.n;
        let goal = &spec.goal.state;
        let w = &spec.weights;
        let mut total = 0.0;
        for (k, s) in states.iter().enumerate() {
            let e = s - goal;
            let weight = if k < self.horizon { &w.q } else { &w.qf };
            total += e.dot(&(weight * &e));
            let dev = s - v_bar.state(i, k);
            total += gamma.state(i, k).dot(&dev) + 0.5 * rho * dev.norm_squared();
        }
        for k in 0..self.horizon {
            let u = x.rows(k * n, n);
            total += u.dot(&(&w.r * u));
            let dev = u - v_bar.input(i, k);
            total += gamma.input(i, k).dot(&dev) + 0.5 * rho * dev.norm_squared();
        }
        for blk in &self.blocks {
            if blk.has_pos {
                let p = x.rows(blk.offset, n);
                let dev = p - v_bar.position(blk.neighbor, blk.k);
                total += gamma.position(blk.neighbor, blk.k).dot(&dev)
                    + 0.5 * rho * dev.norm_squared();
            }
            if self.soft {
                total += w.kappa * x[blk.alpha_offset(n)];
            }
        }
        total
    }

    pub fn base_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let states = self.own_states(x);
        self.base_gradient_with(x, &states)
    }

    fn base_gradient_with(&self, x: &DVector<f64>, states: &[DVector<f64>]) -> DVector<f64> {
        let spec = &self.problem.spec;
        let cons = &self.problem.consensus;
        let (rho, v_bar, gamma) = (cons.rho, &cons.v_bar, &cons.gamma);
        let i = spec.agent;
        let n = self.n;
        let horizon = self.horizon;
        let goal = &spec.goal.state;
        let w = &spec.weights;
        let model = &spec.model;
        let mut grad = DVector::zeros(self.num_vars);

        // adjoint sweep over the condensed own trajectory
        let mut adj = DVector::zeros(2 * n);
        for k in (1..=horizon).rev() {
            let weight = if k < horizon { &w.q } else { &w.qf };
            let s = &states[k];
            let local = weight * (s - goal) * 2.0
                + gamma.state(i, k)
                + (s - v_bar.state(i, k)) * rho;
            adj = local + model.a.transpose() * &adj;
            let u = x.rows((k - 1) * n, n);
            let gu = model.b.transpose() * &adj
                + &w.r * u * 2.0
                + gamma.input(i, k - 1)
                + (u - v_bar.input(i, k - 1)) * rho;
            grad.rows_mut((k - 1) * n, n).copy_from(&gu);
        }
        for blk in &self.blocks {
            if blk.has_pos {
                let p = x.rows(blk.offset, n);
                let g = gamma.position(blk.neighbor, blk.k)
                    + (p - v_bar.position(blk.neighbor, blk.k)) * rho;
                grad.rows_mut(blk.offset, n).copy_from(&g);
            }
            if self.soft {
                grad[blk.alpha_offset(n)] += w.kappa;
            }
        }
        grad
    }

    /// Adds `coef · ∇(constraint)` in `ξ` space for one block to the x-gradient.
    fn scatter_block_grad(&self, blk: &Block, g_xi: &DVector<f64>, grad: &mut DVector<f64>) {
        let n = self.n;
        let g_r = g_xi.rows(0, n);
        let gu = self.pos_jac[blk.k].transpose() * g_r;
        let mut u_part = grad.rows_mut(0, self.num_inputs());
        u_part += gu;
        if blk.has_pos {
            let mut p = grad.rows_mut(blk.offset, n);
            p -= g_r;
        }
        let lam_len = 2 * n + usize::from(self.soft);
        let mut tail = grad.rows_mut(blk.lambda_offset(n), lam_len);
        tail += g_xi.rows(n, lam_len);
    }

    fn scatter_workspace_grad(&self, k: usize, d: usize, coef: f64, grad: &mut DVector<f64>) {
        let row = self.pos_jac[k].row(d).transpose() * coef;
        let mut u_part = grad.rows_mut(0, self.num_inputs());
        u_part += row;
    }

    /// PHR augmented-Lagrangian merit value.
    pub fn merit(&self, x: &DVector<f64>, alm: &PenaltyState) -> f64 {
        let states = self.own_states(x);
        let cvals = self.constraint_values_with(x, &states);
        let mut total = self.base_value_with(x, &states);
        let pen = alm.penalty;
        for (idx, kind) in self.kinds.iter().enumerate() {
            let c = cvals[idx];
            let mu = alm.multipliers[idx];
            total += match kind {
                ConstraintKind::Inequality => {
                    let a = (mu - pen * c).max(0.0);
                    (a * a - mu * mu) / (2.0 * pen)
                }
                ConstraintKind::Equality => mu * c + 0.5 * pen * c * c,
            };
        }
        total
    }

    /// Coefficient `κ_c` such that the merit gradient is `∇f + Σ κ_c ∇c`.
    fn merit_coefficient(kind: ConstraintKind, c: f64, mu: f64, pen: f64) -> f64 {
        match kind {
            ConstraintKind::Inequality => -(mu - pen * c).max(0.0),
            ConstraintKind::Equality => mu + pen * c,
        }
    }

    pub fn merit_gradient(&self, x: &DVector<f64>, alm: &PenaltyState) -> DVector<f64> {
        let states = self.own_states(x);
        let cvals = self.constraint_values_with(x, &states);
        let coefs = DVector::from_iterator(
            cvals.len(),
            self.kinds.iter().enumerate().map(|(idx, &kind)| {
                Self::merit_coefficient(kind, cvals[idx], alm.multipliers[idx], alm.penalty)
            }),
        );
        self.combined_gradient(x, &states, &coefs)
    }

    /// `∇f − Σ μ_c ∇c` (inequalities) `+ Σ ν_e ∇e` (equalities) at fixed multipliers.
    pub fn lagrangian_gradient(&self, x: &DVector<f64>, multipliers: &DVector<f64>) -> DVector<f64> {
        let states = self.own_states(x);
        let coefs = DVector::from_iterator(
            multipliers.len(),
            self.kinds
                .iter()
                .zip(multipliers.iter())
                .map(|(kind, &mu)| match kind {
                    ConstraintKind::Inequality => -mu,
                    ConstraintKind::Equality => mu,
                }),
        );
        self.combined_gradient(x, &states, &coefs)
    }

    fn combined_gradient(
        &self,
        x: &DVector<f64>,
        states: &[DVector<f64>],
        coefs: &DVector<f64>,
    ) -> DVector<f64> {
        let mut grad = self.base_gradient_with(x, states);
        for (b, blk) in self.blocks.iter().enumerate() {
            let (kc, km) = (coefs[2 * b], coefs[2 * b + 1]);
            if kc == 0.0 && km == 0.0 {
                continue;
            }
            let e = self.eval_block(blk, x, states);
            let g_xi = &e.dc * kc + &e.dm * km;
            self.scatter_block_grad(blk, &g_xi, &mut grad);
        }
        if self.workspace.is_some() {
            let base = 2 * self.blocks.len();
            for k in 1..=self.horizon {
                for d in 0..self.n {
                    let idx = base + 2 * ((k - 1) * self.n + d);
                    let coef = coefs[idx] - coefs[idx + 1];
                    if coef != 0.0 {
                        self.scatter_workspace_grad(k, d, coef, &mut grad);
                    }
                }
            }
        }
        grad
    }

    /// Hessian of the merit function in arrowhead form.
    pub(crate) fn merit_hessian(&self, x: &DVector<f64>, alm: &PenaltyState) -> ArrowHessian {
        let n = self.n;
        let nu = self.num_inputs();
        let states = self.own_states(x);
        let pen = alm.penalty;
        let rho = self.problem.consensus.rho;
        let mut uu = self.own_hess.clone();
        let xi_len = 3 * n + usize::from(self.soft);
        let mut blocks = Vec::with_capacity(self.blocks.len());

        for (b, blk) in self.blocks.iter().enumerate() {
            let e = self.eval_block(blk, x, &states);
            let mut h_xi = DMatrix::<f64>::zeros(xi_len, xi_len);

            let a_c = (alm.multipliers[2 * b] - pen * e.c).max(0.0);
            if a_c > 0.0 {
                h_xi += &e.dc * e.dc.transpose() * pen;
                // −a ∇²c, where ∇²c couples r with λ⁺ (+I) and λ⁻ (−I)
                for d in 0..n {
                    h_xi[(d, n + d)] -= a_c;
                    h_xi[(n + d, d)] -= a_c;
                    h_xi[(d, 2 * n + d)] += a_c;
                    h_xi[(2 * n + d, d)] += a_c;
                }
            }
            let norm_curv = alm.multipliers[2 * b + 1] + pen * (e.m - 1.0);
            h_xi += &e.dm * e.dm.transpose() * pen;
            if norm_curv != 0.0 {
                for d in 0..n {
                    let (p, m) = (n + d, 2 * n + d);
                    h_xi[(p, p)] += 2.0 * norm_curv;
                    h_xi[(m, m)] += 2.0 * norm_curv;
                    h_xi[(p, m)] -= 2.0 * norm_curv;
                    h_xi[(m, p)] -= 2.0 * norm_curv;
                }
            }
            let _ = &e.r;

            // ξ = T_u u + T_y y
            let mut t_y = DMatrix::<f64>::zeros(xi_len, blk.len);
            let shift = if blk.has_pos { n } else { 0 };
            if blk.has_pos {
                for d in 0..n {
                    t_y[(d, d)] = -1.0;
                }
            }
            for c in 0..(xi_len - n) {
                t_y[(n + c, shift + c)] = 1.0;
            }
            let jac = &self.pos_jac[blk.k];
            let h_rr = h_xi.view((0, 0), (n, n));
            uu += jac.transpose() * h_rr * jac;
            let h_bb = t_y.transpose() * &h_xi * &t_y;
            let h_bu = t_y.transpose() * h_xi.columns(0, n) * jac;
            let mut h_bb = h_bb;
            if blk.has_pos && rho > 0.0 {
                for d in 0..n {
                    h_bb[(d, d)] += rho;
                }
            }
            blocks.push((h_bb, h_bu));
        }

        if self.workspace.is_some() {
            let base = 2 * self.blocks.len();
            let cvals = self.constraint_values_with(x, &states);
            for k in 1..=self.horizon {
                for d in 0..n {
                    let idx = base + 2 * ((k - 1) * n + d);
                    for off in 0..2 {
                        let a = (alm.multipliers[idx + off] - pen * cvals[idx + off]).max(0.0);
                        if a > 0.0 {
                            let row = self.pos_jac[k].row(d);
                            uu += row.transpose() * row * pen;
                        }
                    }
                }
            }
        }
        debug_assert_eq!(uu.nrows(), nu);
        ArrowHessian { uu, blocks }
    }

    /// Initial certificate and slack values for block `blk` given relative position `r`.
    pub(crate) fn block_relative_position(
        &self,
        blk: &Block,
        x: &DVector<f64>,
        states: &[DVector<f64>],
    ) -> DVector<f64> {
        self.eval_block(blk, x, states).r
    }
}
