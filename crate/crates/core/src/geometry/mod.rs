//! Polytopic obstacle sets and distance queries.
//!
//! A [`Polytope`] is the set `{s : G s ≤ g}`. The `*_oracle` functions compute
//! Euclidean distance and penetration depth by direct projection (active-set
//! enumeration over faces), independently of the dual-certificate path in
//! [`certificate`].

mod certificate;
mod nnls;

pub use certificate::{
    hard_certificate_value, max_certified_distance, pairwise_constraint_residual,
    soft_certificate_check, DualCertificate,
};
pub use nnls::nnls;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

/// Slack used by [`contains`] for the non-strict inequality.
pub const CONTAINS_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point has dimension {got}, polytope has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("G is {rows}x{cols} but g has length {len}")]
    ShapeMismatch { rows: usize, cols: usize, len: usize },
    #[error("row {0} of G is zero")]
    ZeroRow(usize),
    #[error("polytope data contains non-finite entries")]
    NonFinite,
    #[error("polytope is empty")]
    Empty,
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("point lies strictly inside the polytope")]
    StrictlyInside,
    #[error("point lies outside the polytope")]
    Outside,
    #[error("cube half-width must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("multiplier entry {index} is negative ({value})")]
    NegativeMultiplier { index: usize, value: f64 },
    #[error("certificate norm ‖Gᵀλ‖ = {0} exceeds 1")]
    CertificateNorm(f64),
    #[error("slack must be nonnegative, got {0}")]
    NegativeSlack(f64),
}

/// Convex compact set `{s ∈ Rⁿ : G s ≤ g}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    g_mat: DMatrix<f64>,
    g_vec: DVector<f64>,
}

impl Polytope {
    /// Validates shape, nonzero rows, boundedness and nonemptiness.
    pub fn new(g_mat: DMatrix<f64>, g_vec: DVector<f64>) -> Result<Self, GeometryError> {
        let (rows, cols) = g_mat.shape();
        if rows != g_vec.len() || cols == 0 {
            return Err(GeometryError::ShapeMismatch {
                rows,
                cols,
                len: g_vec.len(),
            });
        }
        if g_mat.iter().chain(g_vec.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if let Some(r) = (0..rows).find(|&r| g_mat.row(r).norm() == 0.0) {
            return Err(GeometryError::ZeroRow(r));
        }
        let p = Self { g_mat, g_vec };
        if p.g_mat.rank(1e-12) < cols || p.has_recession_direction() {
            return Err(GeometryError::Unbounded);
        }
        if p.vertices().is_empty() {
            return Err(GeometryError::Empty);
        }
        Ok(p)
    }

    /// Axis-aligned box `lower ≤ s ≤ upper`.
    pub fn axis_box(lower: &DVector<f64>, upper: &DVector<f64>) -> Result<Self, GeometryError> {
        if lower.len() != upper.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        let n = lower.len();
        let mut g_mat = DMatrix::zeros(2 * n, n);
        let mut g_vec = DVector::zeros(2 * n);
        for d in 0..n {
            g_mat[(d, d)] = 1.0;
            g_mat[(n + d, d)] = -1.0;
            g_vec[d] = upper[d];
            g_vec[n + d] = -lower[d];
        }
        Self::new(g_mat, g_vec)
    }

    pub fn dim(&self) -> usize {
        self.g_mat.ncols()
    }

    pub fn num_faces(&self) -> usize {
        self.g_mat.nrows()
    }

    pub fn g_matrix(&self) -> &DMatrix<f64> {
        &self.g_mat
    }

    pub fn g_vector(&self) -> &DVector<f64> {
        &self.g_vec
    }

    /// The same set shifted by `offset`.
    pub fn translated(&self, offset: &DVector<f64>) -> Self {
        Self {
            g_mat: self.g_mat.clone(),
            g_vec: &self.g_vec + &self.g_mat * offset,
        }
    }

    pub(crate) fn check_point(&self, s: &DVector<f64>) -> Result<(), GeometryError> {
        if s.len() == self.dim() {
            Ok(())
        } else {
            Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got: s.len(),
            })
        }
    }

    /// Signed facet distances `(G_r s − g_r)/‖G_r‖`; all ≤ 0 iff `s` is contained.
    fn facet_offsets(&self, s: &DVector<f64>) -> DVector<f64> {
        let raw = &self.g_mat * s - &self.g_vec;
        DVector::from_iterator(
            raw.len(),
            raw.iter()
                .enumerate()
                .map(|(r, v)| v / self.g_mat.row(r).norm()),
        )
    }

    fn is_strictly_inside(&self, s: &DVector<f64>) -> bool {
        self.facet_offsets(s).max() < -CONTAINS_TOL
    }

    fn vertices(&self) -> Vec<DVector<f64>> {
        let n = self.dim();
        let mut out = Vec::new();
        for subset in combinations(self.num_faces(), n) {
            let sub = self.g_mat.select_rows(subset.iter());
            let rhs = self.g_vec.select_rows(subset.iter());
            let Some(x) = sub.clone().lu().solve(&rhs) else {
                continue;
            };
            if (&sub * &x - &rhs).amax() > 1e-9 {
                continue;
            }
            let scale = 1.0 + self.g_vec.amax();
            if (&self.g_mat * &x - &self.g_vec).max() <= 1e-9 * scale {
                out.push(x);
            }
        }
        out
    }

    /// True if some nonzero `d` has `G d ≤ 0`; extreme rays of the recession
    /// cone lie on intersections of `n − 1` facets.
    fn has_recession_direction(&self) -> bool {
        let n = self.dim();
        let rows = self.num_faces();
        let scale = self.g_mat.amax();
        let test = |d: &DVector<f64>| (&self.g_mat * d).max() <= 1e-12 * scale;
        for subset in combinations(rows, n - 1) {
            let sub = self.g_mat.select_rows(subset.iter());
            let gram = sub.transpose() * &sub;
            let eig = SymmetricEigen::new(gram);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            if n > 1 && eig.eigenvalues[order[1]] <= 1e-12 * scale * scale {
                continue;
            }
            let d = eig.eigenvectors.column(order[0]).into_owned();
            if test(&d) || test(&(-&d)) {
                return true;
            }
        }
        false
    }
}

/// All `k`-element subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Axis-aligned cube of half-width `delta` around an agent position.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentCube {
    pub center: DVector<f64>,
    pub delta: f64,
}

impl AgentCube {
    pub fn new(center: DVector<f64>, delta: f64) -> Result<Self, GeometryError> {
        if !(delta > 0.0) {
            return Err(GeometryError::NonPositiveDelta(delta));
        }
        Ok(Self { center, delta })
    }

    /// World-frame polytope of the cube.
    pub fn polytope(&self) -> Polytope {
        agent_cube_polytope(self.delta, self.center.len())
            .expect("delta checked at construction")
            .translated(&self.center)
    }
}

/// Minimum separation (hard mode) and maximum penetration (soft mode, reporting only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceThresholds {
    pub d_min: f64,
    pub p_max: f64,
}

impl Default for DistanceThresholds {
    fn default() -> Self {
        Self {
            d_min: 0.0,
            p_max: 0.05,
        }
    }
}

/// Center-relative cube `{r : [I; −I] r ≤ Δ·1}`.
///
/// Rows are ordered `+e_1 … +e_n, −e_1 … −e_n`.
pub fn agent_cube_polytope(delta: f64, dim: usize) -> Result<Polytope, GeometryError> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(GeometryError::NonPositiveDelta(delta));
    }
    let mut g_mat = DMatrix::zeros(2 * dim, dim);
    for d in 0..dim {
        g_mat[(d, d)] = 1.0;
        g_mat[(dim + d, d)] = -1.0;
    }
    Ok(Polytope {
        g_mat,
        g_vec: DVector::from_element(2 * dim, delta),
    })
}

pub fn contains(p: &Polytope, s: &DVector<f64>) -> Result<bool, GeometryError> {
    p.check_point(s)?;
    Ok((p.g_matrix() * s - p.g_vector()).iter().all(|&v| v <= CONTAINS_TOL))
}

/// Euclidean distance from an exterior (or boundary) point to `p`.
///
/// Enumerates every face subset of size ≤ n, projects onto its affine hull and
/// keeps the nearest projection that lies in `p`.
pub fn dist_oracle(p: &Polytope, s: &DVector<f64>) -> Result<f64, GeometryError> {
    p.check_point(s)?;
    if p.is_strictly_inside(s) {
        return Err(GeometryError::StrictlyInside);
    }
    if contains(p, s)? {
        return Ok(0.0);
    }
    let n = p.dim();
    let g = p.g_matrix();
    let h = p.g_vector();
    let scale = 1.0 + h.amax() + s.amax();
    let mut best = f64::INFINITY;
    for size in 1..=n.min(p.num_faces()) {
        for subset in combinations(p.num_faces(), size) {
            let gs = g.select_rows(subset.iter());
            let hs = h.select_rows(subset.iter());
            let gram = &gs * gs.transpose();
            let Some(chol) = gram.cholesky() else { continue };
            let mult = chol.solve(&(&gs * s - &hs));
            let x = s - gs.transpose() * mult;
            if (g * &x - h).max() <= 1e-10 * scale {
                best = best.min((s - x).norm());
            }
        }
    }
    Ok(best)
}

/// Minimum translation that moves an interior point out of `p`.
pub fn pen_oracle(p: &Polytope, s: &DVector<f64>) -> Result<f64, GeometryError> {
    p.check_point(s)?;
    if !contains(p, s)? {
        return Err(GeometryError::Outside);
    }
    Ok((-p.facet_offsets(s).max()).max(0.0))
}

/// Signed distance: positive outside, negative inside, zero on the boundary.
pub fn sdf_oracle(p: &Polytope, s: &DVector<f64>) -> Result<f64, GeometryError> {
    p.check_point(s)?;
    if p.is_strictly_inside(s) {
        Ok(-pen_oracle(p, s)?)
    } else {
        dist_oracle(p, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn unit_box() -> Polytope {
        Polytope::axis_box(&v(&[-1.0, -1.0]), &v(&[1.0, 1.0])).unwrap()
    }

    #[test]
    fn containment_uses_closed_set() {
        let b = unit_box();
        assert!(contains(&b, &v(&[0.0, 0.0])).unwrap());
        assert!(!contains(&b, &v(&[2.0, 0.0])).unwrap());
        assert!(contains(&b, &v(&[1.0, 1.0])).unwrap());
        assert!(contains(&b, &v(&[1.0, 1.0, 0.0])).is_err());
    }

    #[test]
    fn exterior_distances() {
        let b = unit_box();
        assert_relative_eq!(dist_oracle(&b, &v(&[2.0, 0.0])).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            dist_oracle(&b, &v(&[2.0, 2.0])).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-12
        );
        assert_eq!(dist_oracle(&b, &v(&[1.0, 0.0])).unwrap(), 0.0);
        assert_eq!(
            dist_oracle(&b, &v(&[0.0, 0.0])),
            Err(GeometryError::StrictlyInside)
        );
    }

    #[test]
    fn penetration_depths() {
        let b = unit_box();
        assert_relative_eq!(pen_oracle(&b, &v(&[0.0, 0.0])).unwrap(), 1.0);
        assert_relative_eq!(pen_oracle(&b, &v(&[0.5, 0.0])).unwrap(), 0.5);
        let cube = agent_cube_polytope(0.3, 3).unwrap();
        assert_relative_eq!(
            pen_oracle(&cube, &v(&[0.1, 0.0, 0.0])).unwrap(),
            0.2,
            epsilon = 1e-12
        );
        assert_eq!(pen_oracle(&b, &v(&[3.0, 0.0])), Err(GeometryError::Outside));
    }

    #[test]
    fn signed_distance_signs() {
        let b = unit_box();
        assert_relative_eq!(sdf_oracle(&b, &v(&[2.0, 0.0])).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(sdf_oracle(&b, &v(&[0.0, 0.0])).unwrap(), -1.0);
        assert_eq!(sdf_oracle(&b, &v(&[1.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn cube_construction() {
        let c = agent_cube_polytope(0.1, 2).unwrap();
        let expected = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]);
        assert_eq!(c.g_matrix(), &expected);
        assert_eq!(c.g_vector().as_slice(), &[0.1; 4]);
        let c3 = agent_cube_polytope(0.5, 3).unwrap();
        assert_eq!(c3.g_matrix().shape(), (6, 3));
        assert!(c3.g_vector().iter().all(|&x| x == 0.5));
        assert!(contains(&c, &v(&[0.1, -0.03])).unwrap());
        assert!(agent_cube_polytope(0.0, 2).is_err());
        assert!(agent_cube_polytope(-1.0, 3).is_err());
    }

    #[test]
    fn world_frame_cube() {
        let cube = AgentCube::new(v(&[5.0, 5.0]), 0.1).unwrap();
        let p = cube.polytope();
        assert!(contains(&p, &v(&[5.05, 4.95])).unwrap());
        assert_relative_eq!(dist_oracle(&p, &v(&[5.0, 5.2])).unwrap(), 0.1, epsilon = 1e-12);
        assert!(AgentCube::new(v(&[0.0, 0.0]), 0.0).is_err());
    }

    #[test]
    fn construction_rejects_degenerate_sets() {
        let half_plane = Polytope::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), v(&[1.0]));
        assert_eq!(half_plane, Err(GeometryError::Unbounded));
        let wedge = Polytope::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            v(&[1.0, 1.0]),
        );
        assert_eq!(wedge, Err(GeometryError::Unbounded));
        let empty = Polytope::axis_box(&v(&[1.0, 0.0]), &v(&[0.0, 1.0]));
        assert_eq!(empty, Err(GeometryError::Empty));
        let zero_row = Polytope::new(DMatrix::zeros(4, 2), v(&[1.0; 4]));
        assert_eq!(zero_row, Err(GeometryError::ZeroRow(0)));
        let triangle = Polytope::new(
            DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 1.0]),
            v(&[0.0, 0.0, 1.0]),
        );
        assert!(triangle.is_ok());
    }

    #[test]
    fn triangle_distance_hits_vertex_and_edge() {
        let tri = Polytope::new(
            DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 1.0]),
            v(&[0.0, 0.0, 1.0]),
        )
        .unwrap();
        assert_relative_eq!(dist_oracle(&tri, &v(&[-1.0, -1.0])).unwrap(), 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(
            dist_oracle(&tri, &v(&[1.0, 1.0])).unwrap(),
            1.0 / 2f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn subset_enumeration() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert!(combinations(2, 3).is_empty());
    }
}
