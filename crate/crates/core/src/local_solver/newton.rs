//! Projected Newton iterations on the arrowhead Hessian of the merit function.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::objective::{ArrowHessian, LocalObjective, PenaltyState};

pub(crate) struct InnerResult {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub pg_norm: f64,
}

pub(crate) fn projected_gradient_norm(
    x: &DVector<f64>,
    g: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..x.len() {
        let step = (x[i] - g[i]).clamp(lower[i], upper[i]);
        worst = worst.max((x[i] - step).abs());
    }
    worst
}

fn regularized_cholesky(h: &DMatrix<f64>) -> Cholesky<f64, Dyn> {
    let dim = h.nrows();
    let scale = h.diagonal().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut tau = 1e-10 * scale;
    loop {
        let mut shifted = h.clone();
        for i in 0..dim {
            shifted[(i, i)] += tau;
        }
        if let Some(ch) = Cholesky::new(shifted) {
            return ch;
        }
        tau = (tau * 10.0).max(1e-6 * scale);
    }
}

/// Solves `H d = rhs` with rows and columns of `active` variables pinned to `d = 0`.
fn solve_arrow(
    h: &ArrowHessian,
    rhs: &DVector<f64>,
    active: &[bool],
    offsets: &[usize],
) -> DVector<f64> {
    let nu = h.uu.nrows();
    let mut schur = h.uu.clone();
    for i in 0..nu {
        if active[i] {
            schur.row_mut(i).fill(0.0);
            schur.column_mut(i).fill(0.0);
            schur[(i, i)] = 1.0;
        }
    }
    let mut s_rhs = DVector::from_iterator(nu, (0..nu).map(|i| if active[i] { 0.0 } else { rhs[i] }));

    let mut solved = Vec::with_capacity(h.blocks.len());
    for ((h_bb, h_bu), &off) in h.blocks.iter().zip(offsets) {
        let m = h_bb.nrows();
        let mut bb = h_bb.clone();
        let mut bu = h_bu.clone();
        let mut rb = rhs.rows(off, m).into_owned();
        for r in 0..m {
            if active[off + r] {
                bb.row_mut(r).fill(0.0);
                bb.column_mut(r).fill(0.0);
                bb[(r, r)] = 1.0;
                bu.row_mut(r).fill(0.0);
                rb[r] = 0.0;
            }
        }
        for c in 0..nu {
            if active[c] {
                bu.column_mut(c).fill(0.0);
            }
        }
        let ch = regularized_cholesky(&bb);
        let z = ch.solve(&bu);
        let zb = ch.solve(&rb);
        schur -= bu.transpose() * &z;
        s_rhs -= bu.transpose() * &zb;
        solved.push((z, zb));
    }

    let ch = regularized_cholesky(&schur);
    let du = ch.solve(&s_rhs);
    let mut d = DVector::zeros(rhs.len());
    d.rows_mut(0, nu).copy_from(&du);
    for ((z, zb), &off) in solved.iter().zip(offsets) {
        let db = zb - z * &du;
        d.rows_mut(off, db.len()).copy_from(&db);
    }
    d
}

pub(crate) fn minimize(
    obj: &LocalObjective<'_>,
    x0: DVector<f64>,
    alm: &PenaltyState,
    tol: f64,
    max_iter: usize,
) -> InnerResult {
    let lower = obj.lower();
    let upper = obj.upper();
    let offsets: Vec<usize> = obj.blocks.iter().map(|b| b.offset).collect();
    let mut x = obj.project(&x0);
    let mut f = obj.merit(&x, alm);
    let mut g = obj.merit_gradient(&x, alm);
    let mut pg = projected_gradient_norm(&x, &g, lower, upper);
    let mut iterations = 0;

    while pg > tol && iterations < max_iter {
        iterations += 1;
        let eps = pg.min(1e-8);
        let active: Vec<bool> = (0..x.len())
            .map(|i| (x[i] <= lower[i] + eps && g[i] > 0.0) || (x[i] >= upper[i] - eps && g[i] < 0.0))
            .collect();
        let h = obj.merit_hessian(&x, alm);
        let mut d = solve_arrow(&h, &(-&g), &active, &offsets);
        if g.dot(&d) >= 0.0 {
            d = -&g;
            for (i, &a) in active.iter().enumerate() {
                if a {
                    d[i] = 0.0;
                }
            }
        }

        let mut accepted = None;
        let mut t = 1.0;
        while t > 1e-12 {
            let trial = obj.project(&(&x + &d * t));
            let f_trial = obj.merit(&trial, alm);
            let decrease = g.dot(&(&trial - &x));
            if f_trial <= f + 1e-4 * decrease && decrease <= 0.0 {
                accepted = Some((trial, f_trial));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            break;
        };
        if x_new == x {
            break;
        }
        x = x_new;
        f = f_new;
        g = obj.merit_gradient(&x, alm);
        pg = projected_gradient_norm(&x, &g, lower, upper);
    }

    InnerResult {
        x,
        iterations,
        pg_norm: pg,
    }
}
