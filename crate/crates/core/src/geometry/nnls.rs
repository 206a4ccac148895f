//! Lawson–Hanson active-set non-negative least squares.

use nalgebra::{DMatrix, DVector};

/// Minimize `‖A x − b‖₂` subject to `x ≥ 0`.
///
/// Finite active-set method; `tol` is the dual-feasibility threshold on
/// `w = Aᵀ(b − A x)`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> DVector<f64> {
    let cols = a.ncols();
    let mut x = DVector::zeros(cols);
    let mut passive = vec![false; cols];
    let max_iter = 3 * cols + 10;

    for _ in 0..max_iter {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..cols)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(entering) = candidate else { break };
        passive[entering] = true;

        // inner loop keeps the passive solution strictly positive
        for _ in 0..max_iter {
            let z = passive_least_squares(a, b, &passive);
            let blocked = (0..cols).any(|j| passive[j] && z[j] <= 0.0);
            if !blocked {
                x = z;
                break;
            }
            let step = (0..cols)
                .filter(|&j| passive[j] && z[j] <= 0.0)
                .map(|j| x[j] / (x[j] - z[j]))
                .fold(f64::INFINITY, f64::min);
            x += (&z - &x) * step;
            for j in 0..cols {
                if passive[j] && x[j] <= tol {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
        }
    }
    x
}

fn passive_least_squares(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..passive.len()).filter(|&j| passive[j]).collect();
    let mut z = DVector::zeros(passive.len());
    if idx.is_empty() {
        return z;
    }
    let sub = a.select_columns(idx.iter());
    let sol = sub
        .svd(true, true)
        .solve(b, 1e-14)
        .unwrap_or_else(|_| DVector::zeros(idx.len()));
    for (pos, &j) in idx.iter().enumerate() {
        z[j] = sol[pos];
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_optimum_is_returned_when_nonnegative() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = nnls(&a, &b, 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-10 && (x[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn negative_direction_is_clamped() {
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_vec(vec![-1.0, 0.5]);
        let x = nnls(&a, &b, 1e-12);
        assert_eq!(x[0], 0.0);
        assert!((x[1] - 0.5).abs() < 1e-12);
    }
}
