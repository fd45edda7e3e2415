//! Distinguishability histograms and Monte-Carlo checks of the decision
//! value scaling and the shot-noise perturbation bound.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dual::classical_dual_solve;
use crate::error::{validation, Result};
use crate::feature_map::FeatureMap;
use crate::kernel::{kernel_from_states, min_eigenvalue, svm_matrix_from_entries, KernelMode};
use crate::sim::{derive_seed, Statevector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistinguishabilityHistogram {
    pub bin_width: f64,
    /// Bin index `round(f / bin_width)` to count.
    pub counts: BTreeMap<i64, u64>,
    pub total: usize,
    /// Fraction of values with `|f| < 0.05`.
    pub fraction_small: f64,
    pub mean: f64,
    pub std: f64,
}

pub const SMALL_VALUE: f64 = 0.05;

pub fn distinguishability_histogram(values: &[f64], bin_width: f64) -> Result<DistinguishabilityHistogram> {
    if values.is_empty() {
        return Err(validation("empty batch"));
    }
    if !(bin_width > 0.0) {
        return Err(validation("bin width must be positive"));
    }
    let mut counts = BTreeMap::new();
    for v in values {
        *counts.entry((v / bin_width).round() as i64).or_insert(0) += 1;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(DistinguishabilityHistogram {
        bin_width,
        counts,
        total: values.len(),
        fraction_small: values.iter().filter(|v| v.abs() < SMALL_VALUE).count() as f64 / n,
        mean,
        std: var.sqrt(),
    })
}

/// CSV with columns `bin_center,count,classifier_tag`.
pub fn write_histograms_csv(histograms: &[(&str, &DistinguishabilityHistogram)], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_center", "count", "classifier_tag"])?;
    for (tag, h) in histograms {
        for (bin, count) in &h.counts {
            let centre = *bin as f64 * h.bin_width;
            w.write_record([format!("{centre:.6}"), count.to_string(), tag.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Where kernel values come from in the scaling check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSource {
    /// Random data encoded through the feature map.
    Layout,
    /// Kernel values drawn uniformly from [0, 1], isolating the averaging.
    Synthetic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub m: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of ln(std) against ln(M).
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares line through `(x, y)`; returns (slope, intercept).
pub fn fit_line(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `f = Σ α_i y_i k_i / √M` with `α_i = 1/√M`.
pub fn uniform_decision_value(labels: &[i8], kernel_row: &[f64]) -> f64 {
    let m = labels.len() as f64;
    labels.iter().zip(kernel_row).map(|(&y, k)| f64::from(y) * k).sum::<f64>() / m
}

/// For each `M`, draws `trials` independent training sets, balanced random
/// labels and a trial point, all uniform in `[0, π]^n`, and records the
/// spread of `f` under uniform weights.
pub fn verify_theorem1_scaling(
    map: &(impl FeatureMap + Sync),
    theta: &[f64],
    m_grid: &[usize],
    trials: usize,
    seed: u64,
    source: KernelSource,
    power: u32,
) -> Result<ScalingReport> {
    if m_grid.len() < 2 {
        return Err(validation("need at least two sizes to fit a slope"));
    }
    if let Some(m) = m_grid.iter().find(|&&m| m < 16) {
        return Err(validation(format!("size {m} below 16")));
    }
    if trials < 200 {
        return Err(validation(format!("{trials} trials, need at least 200")));
    }
    let n = map.n_qubits();
    let mut rows = Vec::new();
    for &m in m_grid {
        let values = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[m as u64, t as u64]));
                let mut labels: Vec<i8> = (0..m).map(|i| if i < m / 2 { 1 } else { -1 }).collect();
                labels.shuffle(&mut rng);
                let row: Vec<f64> = match source {
                    KernelSource::Synthetic => (0..m).map(|_| rng.random::<f64>()).collect(),
                    KernelSource::Layout => {
                        let mut draw = || -> Vec<f64> {
                            (0..n).map(|_| rng.random::<f64>() * std::f64::consts::PI).collect()
                        };
                        let x = map.encode(&draw(), theta)?;
                        let mut row = Vec::with_capacity(m);
                        for _ in 0..m {
                            let s = map.encode(&draw(), theta)?;
                            row.push(x.overlap(&s)?.norm_sqr().powf(power as f64 / 2.0));
                        }
                        row
                    }
                };
                Ok(uniform_decision_value(&labels, &row))
            })
            .collect::<Result<Vec<f64>>>()?;
        let mean = values.iter().sum::<f64>() / trials as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
        rows.push(ScalingRow { m, mean, std: var.sqrt() });
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.std > 0.0)
        .map(|r| ((r.m as f64).ln(), r.std.ln()))
        .collect();
    let (slope, intercept) = if points.len() >= 2 { fit_line(&points) } else { (f64::NAN, f64::NAN) };
    Ok(ScalingReport { rows, slope, intercept })
}

/// One comparison of the noiseless and perturbed dual solutions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationTrial {
    /// ε' = ‖K' - K‖_F.
    pub epsilon: f64,
    pub alpha_error: f64,
    /// `ε'(1 + ‖α‖)/(λ_min - ε')`, present when ε' < λ_min.
    pub bound: Option<f64>,
    pub violated: bool,
}

/// Solves the dual on `kernel` and on `perturbed` and evaluates the
/// perturbation bound. `lambda_min` is the smallest eigenvalue of the
/// noiseless regularized matrix.
pub fn perturbation_trial(
    kernel: &DMatrix<f64>,
    perturbed: &DMatrix<f64>,
    labels: &[i8],
    gamma: f64,
) -> Result<PerturbationTrial> {
    let q = svm_matrix_from_entries(kernel, labels, gamma)?;
    let lambda_min = q.min_eigenvalue();
    let alpha = classical_dual_solve(kernel, labels, gamma)?.alpha;
    let epsilon = (perturbed - kernel).norm();
    let alpha_norm = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
    if epsilon >= lambda_min {
        return Ok(PerturbationTrial { epsilon, alpha_error: f64::NAN, bound: None, violated: false });
    }
    let noisy = classical_dual_solve(perturbed, labels, gamma)?.alpha;
    let alpha_error = alpha.iter().zip(&noisy).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let bound = epsilon * (1.0 + alpha_norm) / (lambda_min - epsilon);
    Ok(PerturbationTrial { epsilon, alpha_error, bound: Some(bound), violated: alpha_error > bound * (1.0 + 1e-9) + 1e-12 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotBudgetRow {
    pub shots: u64,
    pub median_frobenius: f64,
    pub median_alpha_error: f64,
    pub valid_trials: usize,
    pub excluded_trials: usize,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotBudgetReport {
    pub lambda_min: f64,
    pub alpha_norm: f64,
    pub rows: Vec<ShotBudgetRow>,
    pub frobenius_decreasing: bool,
    pub alpha_error_decreasing: bool,
    pub total_violations: usize,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 { values[n / 2] } else { (values[n / 2 - 1] + values[n / 2]) / 2.0 }
}

/// For every shot count, re-estimates the kernel `trials` times by
/// sampling and compares the perturbed dual solution with the exact one.
/// The α error median covers every trial, including those where the bound
/// does not apply.
pub fn verify_shot_budget_lemmas(
    states: &[Statevector],
    labels: &[i8],
    gamma: f64,
    shot_grid: &[u64],
    trials: usize,
    seed: u64,
) -> Result<ShotBudgetReport> {
    if states.len() > 8 {
        return Err(validation(format!("instance has {} samples, limit is 8", states.len())));
    }
    if trials == 0 || shot_grid.is_empty() {
        return Err(validation("need at least one trial and one shot count"));
    }
    let exact = kernel_from_states(states, 2, KernelMode::Exact)?.entries;
    let q = svm_matrix_from_entries(&exact, labels, gamma)?;
    let lambda_min = min_eigenvalue(&q.entries);
    let alpha = classical_dual_solve(&exact, labels, gamma)?.alpha;
    let alpha_norm = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut rows = Vec::new();
    for (g, &shots) in shot_grid.iter().enumerate() {
        let results = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mode = KernelMode::Sampled { shots, seed: derive_seed(seed, &[g as u64, t as u64]) };
                let noisy = kernel_from_states(states, 2, mode)?.entries;
                let trial = perturbation_trial(&exact, &noisy, labels, gamma)?;
                let err = if trial.bound.is_some() {
                    trial.alpha_error
                } else {
                    let a = classical_dual_solve(&noisy, labels, gamma)?.alpha;
                    alpha.iter().zip(&a).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
                };
                Ok((trial, err))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut frob: Vec<f64> = results.iter().map(|(t, _)| t.epsilon).collect();
        let mut errs: Vec<f64> = results.iter().map(|(_, e)| *e).collect();
        let valid = results.iter().filter(|(t, _)| t.bound.is_some()).count();
        rows.push(ShotBudgetRow {
            shots,
            median_frobenius: median(&mut frob),
            median_alpha_error: median(&mut errs),
            valid_trials: valid,
            excluded_trials: trials - valid,
            violations: results.iter().filter(|(t, _)| t.violated).count(),
        });
    }
    let decreasing = |f: fn(&ShotBudgetRow) -> f64| rows.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    Ok(ShotBudgetReport {
        lambda_min,
        alpha_norm,
        frobenius_decreasing: decreasing(|r| r.median_frobenius),
        alpha_error_decreasing: decreasing(|r| r.median_alpha_error),
        total_violations: rows.iter().map(|r| r.violations).sum(),
        rows,
    })
}
