//! Classical dual solver used as ground truth for the variational trainer.
//!
//! Minimizes `½ αᵀQα − Σα` with `Q_ij = y_i y_j k_ij + δ_ij/γ`, `α ≥ 0` and
//! (by default) `Σ α_i y_i = 0`. A maximal-violating-pair SMO loop gets
//! close, then the KKT system on the free set is solved exactly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{structural, validation, Error, Result};
use crate::kernel::{check_binary_labels, svm_matrix_from_entries};

pub const MAX_DUAL_SIZE: usize = 64;
const MAX_SWEEPS: usize = 200_000;

/// How the offset of the classical decision function is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BiasMode {
    /// Equality-constrained dual; the offset is the KKT multiplier.
    Kkt,
    /// `λ/2·b²` added to the primal: the equality constraint disappears,
    /// the kernel gains `1/λ` and `b = Σ α_i y_i / λ`.
    Regularized { lambda: f64 },
}

impl Default for BiasMode {
    fn default() -> Self {
        BiasMode::Kkt
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub bias_mode: BiasMode,
    /// Max |∂L/∂α_i| over free indices and max violation of the sign
    /// condition on the multipliers of bound ones.
    pub kkt_residual: f64,
    /// |Σ α_i y_i|.
    pub equality_residual: f64,
}

impl DualSolution {
    /// `Σ α_i y_i k_i + b` for one row of kernel values against the
    /// training set.
    pub fn decision_value(&self, labels: &[i8], kernel_row: &[f64]) -> f64 {
        weighted_sum(&self.alpha, labels, kernel_row) + self.bias
    }
}

pub(crate) fn weighted_sum(alpha: &[f64], labels: &[i8], kernel_row: &[f64]) -> f64 {
    alpha
        .iter()
        .zip(labels)
        .zip(kernel_row)
        .map(|((a, &y), k)| a * f64::from(y) * k)
        .sum()
}

pub fn classical_dual_solve(kernel: &DMatrix<f64>, labels: &[i8], gamma: f64) -> Result<DualSolution> {
    classical_dual_solve_with(kernel, labels, gamma, BiasMode::Kkt)
}

pub fn classical_dual_solve_with(
    kernel: &DMatrix<f64>,
    labels: &[i8],
    gamma: f64,
    bias_mode: BiasMode,
) -> Result<DualSolution> {
    let m = kernel.nrows();
    if m > MAX_DUAL_SIZE {
        return Err(validation(format!("dual oracle limited to {MAX_DUAL_SIZE} samples, got {m}")));
    }
    check_binary_labels(labels)?;
    if labels.len() != m {
        return Err(structural("kernel and label dimensions differ"));
    }
    let q = svm_matrix_from_entries(kernel, labels, gamma)?.entries;
    let y: Vec<f64> = labels.iter().map(|&v| f64::from(v)).collect();
    match bias_mode {
        BiasMode::Kkt => solve_equality(&q, &y),
        BiasMode::Regularized { lambda } => {
            if !(lambda > 0.0) {
                return Err(validation(format!("lambda must be positive, got {lambda}")));
            }
            let yv = DVector::from_column_slice(&y);
            let q_reg = &q + (&yv * yv.transpose()) / lambda;
            solve_nonnegative(&q_reg, &y, lambda)
        }
    }
}

fn gradient(q: &DMatrix<f64>, alpha: &[f64]) -> Vec<f64> {
    let a = DVector::from_column_slice(alpha);
    (q * a).iter().map(|v| v - 1.0).collect()
}

fn solve_equality(q: &DMatrix<f64>, y: &[f64]) -> Result<DualSolution> {
    let m = y.len();
    let has_pos = y.iter().any(|&v| v > 0.0);
    let has_neg = y.iter().any(|&v| v < 0.0);
    if !(has_pos && has_neg) {
        // Only α = 0 is feasible.
        let alpha = vec![0.0; m];
        return Ok(finish(q, y, alpha, BiasMode::Kkt));
    }
    let mut alpha = vec![0.0; m];
    let mut g = gradient(q, &alpha);
    for _ in 0..MAX_SWEEPS {
        // i maximizes -y g over I_up, j minimizes it over I_low.
        let mut i = None;
        let mut j = None;
        let (mut up, mut low) = (f64::NEG_INFINITY, f64::INFINITY);
        for t in 0..m {
            let v = -y[t] * g[t];
            let in_up = y[t] > 0.0 || alpha[t] > 0.0;
            let in_low = y[t] < 0.0 || alpha[t] > 0.0;
            if in_up && v > up {
                up = v;
                i = Some(t);
            }
            if in_low && v < low {
                low = v;
                j = Some(t);
            }
        }
        let (Some(i), Some(j)) = (i, j) else { break };
        if up - low < 1e-13 {
            break;
        }
        let curvature = (q[(i, i)] + q[(j, j)] - 2.0 * y[i] * y[j] * q[(i, j)]).max(1e-15);
        let mut d = (up - low) / curvature;
        if y[i] < 0.0 {
            d = d.min(alpha[i]);
        }
        if y[j] > 0.0 {
            d = d.min(alpha[j]);
        }
        alpha[i] += y[i] * d;
        alpha[j] -= y[j] * d;
        alpha[i] = alpha[i].max(0.0);
        alpha[j] = alpha[j].max(0.0);
        for t in 0..m {
            g[t] += d * (y[i] * q[(t, i)] - y[j] * q[(t, j)]);
        }
    }
    polish_equality(q, y, &mut alpha);
    let sol = finish(q, y, alpha, BiasMode::Kkt);
    if sol.kkt_residual > 1e-6 || sol.equality_residual > 1e-6 {
        return Err(Error::Convergence(format!(
            "dual solve stalled with KKT residual {:.3e}",
            sol.kkt_residual.max(sol.equality_residual)
        )));
    }
    Ok(sol)
}

/// Exact solve of `[Q_FF y_F; y_Fᵀ 0](α_F; ν) = (1; 0)` on the free set.
/// Kept only if it stays nonnegative.
fn polish_equality(q: &DMatrix<f64>, y: &[f64], alpha: &mut [f64]) {
    let scale = alpha.iter().cloned().fold(0.0, f64::max);
    let free: Vec<usize> = (0..y.len()).filter(|&t| alpha[t] > 1e-10 * scale.max(1e-300)).collect();
    if free.is_empty() {
        return;
    }
    let n = free.len();
    let mut a = DMatrix::zeros(n + 1, n + 1);
    let mut rhs = DVector::zeros(n + 1);
    for (r, &i) in free.iter().enumerate() {
        for (c, &j) in free.iter().enumerate() {
            a[(r, c)] = q[(i, j)];
        }
        a[(r, n)] = y[i];
        a[(n, r)] = y[i];
        rhs[r] = 1.0;
    }
    let Some(sol) = a.lu().solve(&rhs) else { return };
    if sol.iter().take(n).any(|v| *v < 0.0 || !v.is_finite()) {
        return;
    }
    for t in alpha.iter_mut() {
        *t = 0.0;
    }
    for (r, &i) in free.iter().enumerate() {
        alpha[i] = sol[r];
    }
}

/// Coordinate descent for the bound-only problem, then an exact solve on
/// the free set.
fn solve_nonnegative(q: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<DualSolution> {
    let m = y.len();
    let mut alpha = vec![0.0; m];
    let mut g = gradient(q, &alpha);
    for _ in 0..MAX_SWEEPS / m.max(1) {
        let mut worst: f64 = 0.0;
        for i in 0..m {
            let new = (alpha[i] - g[i] / q[(i, i)]).max(0.0);
            let d = new - alpha[i];
            if d != 0.0 {
                for t in 0..m {
                    g[t] += d * q[(t, i)];
                }
                alpha[i] = new;
            }
            worst = worst.max(d.abs());
        }
        if worst < 1e-14 {
            break;
        }
    }
    let free: Vec<usize> = (0..m).filter(|&t| alpha[t] > 0.0).collect();
    if !free.is_empty() {
        let sub = DMatrix::from_fn(free.len(), free.len(), |r, c| q[(free[r], free[c])]);
        if let Some(sol) = sub.lu().solve(&DVector::from_element(free.len(), 1.0)) {
            if sol.iter().all(|v| *v >= 0.0) {
                for (r, &i) in free.iter().enumerate() {
                    alpha[i] = sol[r];
                }
            }
        }
    }
    let mut sol = finish(q, y, alpha, BiasMode::Regularized { lambda });
    sol.bias = sol.alpha.iter().zip(y).map(|(a, y)| a * y).sum::<f64>() / lambda;
    if sol.kkt_residual > 1e-6 {
        return Err(Error::Convergence(format!("dual solve stalled with KKT residual {:.3e}", sol.kkt_residual)));
    }
    Ok(sol)
}

fn finish(q: &DMatrix<f64>, y: &[f64], alpha: Vec<f64>, bias_mode: BiasMode) -> DualSolution {
    let g = gradient(q, &alpha);
    let free: Vec<usize> = (0..y.len()).filter(|&t| alpha[t] > 0.0).collect();
    let equality = matches!(bias_mode, BiasMode::Kkt);
    // Stationarity: g_i + ν y_i = μ_i with μ_i = 0 on free indices.
    let nu = if equality && !free.is_empty() {
        -free.iter().map(|&i| g[i] * y[i]).sum::<f64>() / free.len() as f64
    } else if equality {
        // All bound: any ν in the feasible interval; take its midpoint.
        let lo = y.iter().zip(&g).filter(|(y, _)| **y < 0.0).map(|(_, g)| *g).fold(f64::NEG_INFINITY, f64::max);
        let hi = y.iter().zip(&g).filter(|(y, _)| **y > 0.0).map(|(_, g)| -*g).fold(f64::INFINITY, f64::min);
        if lo.is_finite() && hi.is_finite() { (lo + hi) / 2.0 } else { 0.0 }
    } else {
        0.0
    };
    let mut residual: f64 = 0.0;
    for t in 0..y.len() {
        let r = g[t] + nu * y[t];
        if alpha[t] > 0.0 {
            residual = residual.max(r.abs());
        } else {
            residual = residual.max((-r).max(0.0));
        }
    }
    let equality_residual = alpha.iter().zip(y).map(|(a, y)| a * y).sum::<f64>().abs();
    // Q_i α = 1 - ν y_i matches y_i(Σ_j α_j y_j k_ij + b) = 1 - α_i/γ with b = ν.
    DualSolution { alpha, bias: nu, bias_mode, kkt_residual: residual, equality_residual }
}
