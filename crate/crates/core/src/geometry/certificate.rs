//! Dual certificates for point–polytope separation.
//!
//! For `P = {s : G s ≤ g}` and a point `s`, any `λ ≥ 0` with `‖Gᵀλ‖₂ ≤ 1`
//! gives the lower bound `(G s − g)ᵀλ ≤ dist(s, P)`, with equality at the
//! maximizing `λ`.

use nalgebra::{DMatrix, DVector};

use super::{agent_cube_polytope, nnls, GeometryError, Polytope};

/// Norm tolerance accepted by [`hard_certificate_value`].
pub const HARD_NORM_TOL: f64 = 1e-9;
/// Norm tolerance for the unit-norm condition in [`soft_certificate_check`].
pub const SOFT_NORM_TOL: f64 = 1e-6;

/// Multipliers `λ ≥ 0` and slack `α ≥ 0` certifying separation (or bounded
/// penetration) for one agent/obstacle pair at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub lambda: DVector<f64>,
    pub alpha: f64,
}

impl DualCertificate {
    pub fn new(lambda: DVector<f64>, alpha: f64) -> Self {
        Self { lambda, alpha }
    }

    pub fn zeros(faces: usize) -> Self {
        Self {
            lambda: DVector::zeros(faces),
            alpha: 0.0,
        }
    }

    /// Indicator of the cube face most aligned with the relative position `r`.
    ///
    /// Rows follow [`agent_cube_polytope`]: `+e_d` at `d`, `−e_d` at `n + d`.
    /// The result has `‖Gᵀλ‖ = 1`; `alpha` is set to `max(0, −(G r − Δ)ᵀλ)`.
    pub fn aligned_with(r: &DVector<f64>, delta: f64) -> Self {
        let n = r.len();
        let axis = r.iamax();
        let mut lambda = DVector::zeros(2 * n);
        let row = if r[axis] >= 0.0 { axis } else { n + axis };
        lambda[row] = 1.0;
        let value = r[axis].abs() - delta;
        Self {
            lambda,
            alpha: (-value).max(0.0),
        }
    }
}

fn check_lambda(lambda: &DVector<f64>) -> Result<(), GeometryError> {
    match lambda.iter().position(|&l| l < 0.0) {
        Some(index) => Err(GeometryError::NegativeMultiplier {
            index,
            value: lambda[index],
        }),
        None => Ok(()),
    }
}

fn check_faces(p: &Polytope, lambda: &DVector<f64>) -> Result<(), GeometryError> {
    if lambda.len() == p.num_faces() {
        Ok(())
    } else {
        Err(GeometryError::DimensionMismatch {
            expected: p.num_faces(),
            got: lambda.len(),
        })
    }
}

/// `(G s − g)ᵀλ` for a feasible hard-mode certificate.
pub fn hard_certificate_value(
    p: &Polytope,
    s: &DVector<f64>,
    lambda: &DVector<f64>,
) -> Result<f64, GeometryError> {
    p.check_point(s)?;
    check_faces(p, lambda)?;
    check_lambda(lambda)?;
    let norm = (p.g_matrix().transpose() * lambda).norm();
    if norm > 1.0 + HARD_NORM_TOL {
        return Err(GeometryError::CertificateNorm(norm));
    }
    Ok((p.g_matrix() * s - p.g_vector()).dot(lambda))
}

/// Soft-mode test: `‖Gᵀλ‖ = 1` and `(G s − g)ᵀλ ≥ −α`.
pub fn soft_certificate_check(
    p: &Polytope,
    s: &DVector<f64>,
    lambda: &DVector<f64>,
    alpha: f64,
) -> bool {
    if p.check_point(s).is_err() || lambda.len() != p.num_faces() {
        return false;
    }
    if lambda.iter().any(|&l| l < 0.0) || alpha < 0.0 {
        return false;
    }
    let norm = (p.g_matrix().transpose() * lambda).norm();
    if (norm - 1.0).abs() > SOFT_NORM_TOL {
        return false;
    }
    (p.g_matrix() * s - p.g_vector()).dot(lambda) >= -alpha
}

/// Largest certified distance `max {(G s − g)ᵀλ : λ ≥ 0, ‖Gᵀλ‖ ≤ 1}` and its maximizer.
///
/// Solved through the least-distance/NNLS correspondence: with
/// `E = −G`, `f = G s − g`, the NNLS solution `u` of `[Eᵀ; fᵀ] u ≈ e_{n+1}`
/// rescaled to unit `‖Gᵀu‖` is an optimal certificate.
pub fn max_certified_distance(
    p: &Polytope,
    s: &DVector<f64>,
) -> Result<(f64, DualCertificate), GeometryError> {
    p.check_point(s)?;
    if p.is_strictly_inside(s) {
        return Err(GeometryError::StrictlyInside);
    }
    let n = p.dim();
    let l = p.num_faces();
    let f = p.g_matrix() * s - p.g_vector();
    let mut system = DMatrix::zeros(n + 1, l);
    system.rows_mut(0, n).copy_from(&(-p.g_matrix().transpose()));
    system.row_mut(n).copy_from(&f.transpose());
    let mut target = DVector::zeros(n + 1);
    target[n] = 1.0;

    let u = nnls(&system, &target, 1e-14);
    let residual = &system * &u - &target;
    if residual.norm() < 1e-14 {
        return Err(GeometryError::Empty);
    }
    let gt_u = (p.g_matrix().transpose() * &u).norm();
    if f.dot(&u) <= 0.0 || gt_u == 0.0 {
        return Ok((0.0, DualCertificate::zeros(l)));
    }
    let lambda = u / gt_u;
    Ok((f.dot(&lambda).max(0.0), DualCertificate::new(lambda, 0.0)))
}

/// Residuals of the pairwise agent-cube constraint between positions `s_i` and `s_j`.
///
/// Returns `((G(s_i − s_j) − Δ·1)ᵀλ + α, ‖Gᵀλ‖₂ − 1)`; the pair is feasible when
/// the first is ≥ 0 and the second is 0 (soft) or ≤ 0 (hard).
pub fn pairwise_constraint_residual(
    s_i: &DVector<f64>,
    s_j: &DVector<f64>,
    delta: f64,
    lambda: &DVector<f64>,
    alpha: f64,
) -> Result<(f64, f64), GeometryError> {
    if s_i.len() != s_j.len() {
        return Err(GeometryError::DimensionMismatch {
            expected: s_i.len(),
            got: s_j.len(),
        });
    }
    let cube = agent_cube_polytope(delta, s_i.len())?;
    check_faces(&cube, lambda)?;
    check_lambda(lambda)?;
    if alpha < 0.0 {
        return Err(GeometryError::NegativeSlack(alpha));
    }
    let rel = s_i - s_j;
    let ineq = (cube.g_matrix() * rel - cube.g_vector()).dot(lambda) + alpha;
    let norm = (cube.g_matrix().transpose() * lambda).norm() - 1.0;
    Ok((ineq, norm))
}
