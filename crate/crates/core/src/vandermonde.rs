//! Recovering a homogeneous component from scalar-action samples.
//!
//! For distinct grades `d_1 < … < d_s` and distinct `λ_1, …, λ_s > 0`,
//! `λ_j ⋆ x = Σ_g λ_j^{d_g} π_g(x)`. Choosing coefficients `c` with
//! `Σ_j c_j λ_j^{d_g} = [g = target]` isolates `π_target(x) = Σ_j c_j (λ_j ⋆ x)`.
//! The coefficient system is a generalized Vandermonde matrix, solved here by
//! Gaussian elimination with partial pivoting.

use crate::error::{Error, Result};
use crate::grading::{rational_to_f64, Rational};
use crate::vector::GradedVector;

/// Condition numbers above this trigger a warning.
pub const CONDITION_WARN: f64 = 1e12;

/// Result of a Vandermonde projection.
#[derive(Debug, Clone)]
pub struct Projection {
    pub component: GradedVector,
    pub coefficients: Vec<f64>,
    /// Infinity-norm condition number of the coefficient matrix.
    pub condition: f64,
}

/// Solves `a · x = b` for square `a` (row-major rows) with partial pivoting.
pub fn solve_partial_pivot(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = a.len();
    if b.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::IllPosed("system is not square".into()));
    }
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() <= scale * f64::EPSILON * n as f64 {
            return Err(Error::IllPosed(format!("singular pivot in column {col}")));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

/// `‖A‖_∞ ‖A⁻¹‖_∞`, with the inverse formed column by column.
pub fn condition_inf(a: &[Vec<f64>]) -> Result<f64> {
    let n = a.len();
    let norm = |m: &[Vec<f64>]| {
        m.iter()
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let mut inv = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let x = solve_partial_pivot(a.to_vec(), e)?;
        for (row, v) in x.into_iter().enumerate() {
            inv[row][col] = v;
        }
    }
    Ok(norm(a) * norm(&inv))
}

/// Extracts the grade-`target` component of `x` from the samples `λ_j ⋆ x`.
///
/// Needs exactly one `λ` per distinct grade of `x`'s grading, all positive
/// and pairwise distinct.
pub fn vandermonde_project(x: &GradedVector, target: Rational, lambdas: &[f64]) -> Result<Projection> {
    let grades = x.grading().distinct();
    if lambdas.len() != grades.len() {
        return Err(Error::IllPosed(format!(
            "{} distinct grades need {} lambdas, got {}",
            grades.len(),
            grades.len(),
            lambdas.len()
        )));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return Err(Error::IllPosed(format!("lambda {l} is not a positive real")));
    }
    for (i, a) in lambdas.iter().enumerate() {
        if lambdas[..i].contains(a) {
            return Err(Error::IllPosed(format!("repeated lambda {a}")));
        }
    }
    let target_row = grades
        .iter()
        .position(|g| *g == target)
        .ok_or_else(|| Error::Domain(format!("grade {target} does not occur in {}", x.grading())))?;

    let matrix: Vec<Vec<f64>> = grades
        .iter()
        .map(|g| {
            let d = rational_to_f64(g);
            lambdas.iter().map(|l| l.powf(d)).collect()
        })
        .collect();
    let mut rhs = vec![0.0; grades.len()];
    rhs[target_row] = 1.0;

    let condition = condition_inf(&matrix)?;
    if condition > CONDITION_WARN {
        log::warn!("vandermonde system is ill-conditioned (cond ≈ {condition:.3e})");
    }
    let coefficients = solve_partial_pivot(matrix, rhs)?;

    let mut acc = vec![0.0; x.len()];
    for (c, l) in coefficients.iter().zip(lambdas) {
        let sample = x.scalar_action(*l)?;
        for (a, s) in acc.iter_mut().zip(sample.values()) {
            *a += c * s;
        }
    }
    Ok(Projection {
        component: GradedVector::from_parts(acc, x.grading().clone()),
        coefficients,
        condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn v(values: &[f64], q: &str) -> GradedVector {
        GradedVector::new(values.to_vec(), Arc::new(q.parse().unwrap())).unwrap()
    }

    #[test]
    fn two_grade_system_by_hand() {
        // Rows λ^2 = (1, 4) and λ^3 = (1, 8); solving for e_1 gives c = (2, -1/4).
        let x = v(&[4.0, 5.0], "2,3");
        let p = vandermonde_project(&x, Rational::from_integer(2), &[1.0, 2.0]).unwrap();
        assert!((p.coefficients[0] - 2.0).abs() < 1e-14);
        assert!((p.coefficients[1] + 0.25).abs() < 1e-14);
        assert!((p.component.values()[0] - 4.0).abs() < 1e-12);
        assert!(p.component.values()[1].abs() < 1e-12);
    }

    #[test]
    fn single_grade_returns_input() {
        let x = v(&[1.5, -2.0, 3.0], "2,2,2");
        let p = vandermonde_project(&x, Rational::from_integer(2), &[1.0]).unwrap();
        assert_eq!(p.coefficients, vec![1.0]);
        assert_eq!(p.component.values(), x.values());
    }

    #[test]
    fn seven_coordinate_example_matches_decompose() {
        let x = v(&[2.0, -3.0, 1.0, 1.0, -2.0, 1.0, 1.0], "2,2,2,3,3,3,3");
        let p = vandermonde_project(&x, Rational::from_integer(3), &[1.0, 2.0]).unwrap();
        let expected = [0.0, 0.0, 0.0, 1.0, -2.0, 1.0, 1.0];
        for (a, b) in p.component.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ill_posed_inputs() {
        let x = v(&[4.0, 5.0], "2,3");
        let two = Rational::from_integer(2);
        assert!(matches!(vandermonde_project(&x, two, &[2.0, 2.0]), Err(Error::IllPosed(_))));
        assert!(matches!(vandermonde_project(&x, two, &[1.0]), Err(Error::IllPosed(_))));
        assert!(matches!(vandermonde_project(&x, two, &[1.0, -1.0]), Err(Error::IllPosed(_))));
        assert!(vandermonde_project(&x, Rational::from_integer(5), &[1.0, 2.0]).is_err());
    }

    #[test]
    fn solver_pivots() {
        // Zero leading entry forces a row swap.
        let a = vec![vec![0.0, 1.0], vec![2.0, 3.0]];
        let x = solve_partial_pivot(a, vec![1.0, 8.0]).unwrap();
        assert_eq!(x, vec![2.5, 1.0]);
        let singular = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve_partial_pivot(singular, vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn condition_of_identity_is_one() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(condition_inf(&a).unwrap(), 1.0);
    }
}
