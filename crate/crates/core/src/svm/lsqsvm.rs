//! Least-squares SVM baseline, solved directly.

use nalgebra::{DMatrix, DVector};

use crate::error::{structural, validation, Error, Result};
use crate::kernel::check_binary_labels;

#[derive(Clone, Debug, PartialEq)]
pub struct LsqsvmSolution {
    /// `[[0, 1ᵀ], [1, K₀ + I/γ]]`.
    pub f_matrix: DMatrix<f64>,
    pub b: f64,
    pub alpha: Vec<f64>,
    /// `‖F(b; α) - (0; y)‖∞`.
    pub residual: f64,
}

pub fn lsqsvm_solve(kernel: &DMatrix<f64>, labels: &[i8], gamma: f64) -> Result<LsqsvmSolution> {
    check_binary_labels(labels)?;
    let m = kernel.nrows();
    if kernel.ncols() != m || labels.len() != m {
        return Err(structural("kernel and label dimensions differ"));
    }
    if !(gamma > 0.0) {
        return Err(validation(format!("gamma must be positive, got {gamma}")));
    }
    let f = DMatrix::from_fn(m + 1, m + 1, |r, c| match (r, c) {
        (0, 0) => 0.0,
        (0, _) | (_, 0) => 1.0,
        (r, c) => kernel[(r - 1, c - 1)] + if r == c { 1.0 / gamma } else { 0.0 },
    });
    let mut rhs = DVector::zeros(m + 1);
    for (i, &y) in labels.iter().enumerate() {
        rhs[i + 1] = f64::from(y);
    }
    let sol = f
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Convergence("least-squares system is singular".into()))?;
    let residual = (&f * &sol - &rhs).amax();
    if !residual.is_finite() || residual > 1e-8 {
        return Err(Error::Convergence(format!("least-squares residual {residual:.3e}")));
    }
    Ok(LsqsvmSolution { f_matrix: f, b: sol[0], alpha: sol.iter().skip(1).copied().collect(), residual })
}

impl LsqsvmSolution {
    /// `<v|u> = (b + Σ α_i k_i) / √(N_u N_x)` with `N_u = b² + Σ α_i²`
    /// and `N_x = M + 1`. Without the bias, `b` is dropped from both.
    pub fn decision_value(&self, kernel_row: &[f64], use_bias: bool) -> f64 {
        let b = if use_bias { self.b } else { 0.0 };
        let n_u = b * b + self.alpha.iter().map(|a| a * a).sum::<f64>();
        let n_x = (self.alpha.len() + 1) as f64;
        let dot: f64 = self.alpha.iter().zip(kernel_row).map(|(a, k)| a * k).sum();
        (b + dot) / (n_u * n_x).sqrt()
    }
}

/// Solves, then labels every row of `trial_kernel` (trial × training).
/// Zero decision values go to +1.
pub fn lsqsvm_solve_and_classify(
    kernel: &DMatrix<f64>,
    labels: &[i8],
    gamma: f64,
    trial_kernel: &DMatrix<f64>,
    use_bias: bool,
) -> Result<(LsqsvmSolution, Vec<i8>, Vec<f64>)> {
    let sol = lsqsvm_solve(kernel, labels, gamma)?;
    if trial_kernel.ncols() != labels.len() {
        return Err(structural("trial kernel width differs from training size"));
    }
    let values: Vec<f64> = (0..trial_kernel.nrows())
        .map(|r| {
            let row: Vec<f64> = trial_kernel.row(r).iter().copied().collect();
            sol.decision_value(&row, use_bias)
        })
        .collect();
    let predicted = values.iter().map(|&v| if v >= 0.0 { 1 } else { -1 }).collect();
    Ok((sol, predicted, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_point_hand_solution() {
        // F = [[0,1,1],[1,1,0],[1,0,1]], rhs (0, 1, -1): b = 0, α = (1, -1).
        let s = lsqsvm_solve(&DMatrix::identity(2, 2), &[1, -1], 1e15).unwrap();
        assert_abs_diff_eq!(s.b, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.alpha[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.alpha[1], -1.0, epsilon = 1e-12);
        assert_eq!(s.f_matrix[(0, 0)], 0.0);
        assert!(s.residual < 1e-12);
    }

    #[test]
    fn single_term_sign() {
        let s = lsqsvm_solve(&DMatrix::identity(2, 2), &[1, -1], 1e15).unwrap();
        assert!(s.decision_value(&[0.0, 1.0], false) < 0.0);
        assert!(s.decision_value(&[1.0, 0.0], false) > 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(lsqsvm_solve(&DMatrix::identity(2, 2), &[1, -1], 0.0).is_err());
        assert!(lsqsvm_solve(&DMatrix::identity(2, 2), &[1], 1.0).is_err());
    }
}
