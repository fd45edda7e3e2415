//! Fidelity kernels `|<ψ(x_i)|ψ(x_j)>|^p`, Gram and regularized SVM
//! matrices, and heatmap export.

mod pauli;

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{structural, validation, Result};
use crate::feature_map::FeatureMap;
use crate::sim::{ShotSampler, Statevector};

pub use pauli::{
    pauli_decompose, pauli_expectation, pauli_matrix, sampled_expectation,
    sampled_expectation_entries, PauliDecomposition, PauliTerm, MAX_PAULI_QUBITS,
};

pub const DEFAULT_POWER: u32 = 2;
pub const DEFAULT_GAMMA: f64 = 10.0;

/// How kernel entries are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum KernelMode {
    Exact,
    /// Inversion test: frequency of |0...0> after `U†(x_i) U(x_j)`.
    Sampled { shots: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    pub entries: DMatrix<f64>,
    pub power: u32,
    pub source: KernelMode,
}

fn check_power(power: u32, sampled: bool) -> Result<()> {
    if power == 0 {
        return Err(validation("kernel power must be at least 1"));
    }
    if sampled && power % 2 == 1 {
        return Err(validation(format!(
            "kernel power {power} is odd; sampling only observes |overlap|^2"
        )));
    }
    Ok(())
}

/// `|overlap|²` raised to `p/2`, with the square possibly estimated.
fn from_fidelity(fidelity: f64, power: u32) -> f64 {
    let f = fidelity.clamp(0.0, 1.0);
    match power {
        2 => f,
        p => f.powf(p as f64 / 2.0),
    }
}

fn sampled_entry(a: &Statevector, b: &Statevector, sampler: &ShotSampler, power: u32) -> Result<f64> {
    let fidelity = a.overlap(b)?.norm_sqr();
    Ok(from_fidelity(sampler.estimate_probability(fidelity), power))
}

/// Single kernel entry. In sampled mode the estimate is the frequency of the
/// all-zeros outcome of the inversion circuit, raised to `p/2`.
pub fn kernel_value(
    map: &impl FeatureMap,
    theta: &[f64],
    xi: &[f64],
    xj: &[f64],
    power: u32,
    sampler: Option<&ShotSampler>,
) -> Result<f64> {
    check_power(power, sampler.is_some())?;
    match sampler {
        None => {
            let a = map.encode(xi, theta)?;
            let b = map.encode(xj, theta)?;
            Ok(from_fidelity(a.overlap(&b)?.norm_sqr(), power).min(1.0))
        }
        Some(s) => {
            let inversion = map.circuit(xj, theta)?.then(&map.circuit(xi, theta)?.inverse());
            let out = Statevector::zero(map.n_qubits())?.apply_circuit(&inversion)?;
            let p0 = out.probabilities()[0];
            Ok(from_fidelity(s.estimate_probability(p0), power))
        }
    }
}

/// Encodes every row once.
pub fn encode_all(map: &(impl FeatureMap + Sync), theta: &[f64], data: &[Vec<f64>]) -> Result<Vec<Statevector>> {
    data.par_iter().map(|x| map.encode(x, theta)).collect()
}

/// Full Gram matrix. Each unordered pair is computed once; sampled entries
/// use a seed derived from `(seed, i, j)` so the fill order is irrelevant.
pub fn build_kernel_matrix(
    map: &(impl FeatureMap + Sync),
    theta: &[f64],
    data: &[Vec<f64>],
    power: u32,
    mode: KernelMode,
) -> Result<KernelMatrix> {
    let states = encode_all(map, theta, data)?;
    kernel_from_states(&states, power, mode)
}

pub fn kernel_from_states(states: &[Statevector], power: u32, mode: KernelMode) -> Result<KernelMatrix> {
    let m = states.len();
    if m < 2 {
        return Err(structural("kernel matrix needs at least two samples"));
    }
    let sampler = match mode {
        KernelMode::Exact => None,
        KernelMode::Sampled { shots, seed } => Some(ShotSampler::new(seed, shots)?),
    };
    check_power(power, sampler.is_some())?;
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| match &sampler {
            None => Ok(from_fidelity(states[i].overlap(&states[j])?.norm_sqr(), power)),
            Some(s) => sampled_entry(&states[i], &states[j], &s.fork(&[i as u64, j as u64]), power),
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut entries = DMatrix::identity(m, m);
    for (&(i, j), v) in pairs.iter().zip(values) {
        entries[(i, j)] = v;
        entries[(j, i)] = v;
    }
    if let Some(s) = &sampler {
        // Self-overlap is 1 in principle; estimate it anyway for an honest
        // noise model.
        for i in 0..m {
            entries[(i, i)] = sampled_entry(&states[i], &states[i], &s.fork(&[i as u64, i as u64]), power)?;
        }
    }
    Ok(KernelMatrix { entries, power, source: mode })
}

/// Kernel values between every trial state and every training state.
pub fn cross_kernel(train: &[Statevector], trial: &[Statevector], power: u32) -> Result<DMatrix<f64>> {
    check_power(power, false)?;
    let rows = trial
        .par_iter()
        .map(|t| {
            train
                .iter()
                .map(|s| Ok(from_fidelity(t.overlap(s)?.norm_sqr(), power)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(trial.len(), train.len(), |r, c| rows[r][c]))
}

impl KernelMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.entries)
    }

    /// Row-major CSV whose header row holds the sample ids.
    pub fn write_csv(&self, ids: &[String], out: impl Write) -> Result<()> {
        if ids.len() != self.size() {
            return Err(structural("id count differs from matrix size"));
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(ids)?;
        for r in 0..self.size() {
            w.write_record(self.entries.row(r).iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Binary 8-bit grayscale PGM, pixel = round(255·entry).
    pub fn write_pgm(&self, mut out: impl Write) -> Result<()> {
        let m = self.size();
        write!(out, "P5\n{m} {m}\n255\n")?;
        let pixels: Vec<u8> = (0..m)
            .flat_map(|r| (0..m).map(move |c| (r, c)))
            .map(|(r, c)| (255.0 * self.entries[(r, c)].clamp(0.0, 1.0)).round() as u8)
            .collect();
        out.write_all(&pixels)?;
        Ok(())
    }

    /// Mean entry over rows in `a` and columns in `b`, skipping the diagonal.
    pub fn block_mean(&self, a: &[usize], b: &[usize]) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for &i in a {
            for &j in b {
                if i != j {
                    sum += self.entries[(i, j)];
                    n += 1;
                }
            }
        }
        if n == 0 { f64::NAN } else { sum / n as f64 }
    }
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// `y_i y_j k(x_i, x_j) + δ_ij / γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmMatrix {
    pub entries: DMatrix<f64>,
    pub gamma: f64,
    pub labels: Vec<i8>,
}

pub(crate) fn check_binary_labels(labels: &[i8]) -> Result<()> {
    if let Some(bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
        return Err(validation(format!("label {bad} is not +1 or -1")));
    }
    Ok(())
}

pub fn build_svm_matrix(kernel: &KernelMatrix, labels: &[i8], gamma: f64) -> Result<SvmMatrix> {
    svm_matrix_from_entries(&kernel.entries, labels, gamma)
}

pub fn svm_matrix_from_entries(k: &DMatrix<f64>, labels: &[i8], gamma: f64) -> Result<SvmMatrix> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(validation(format!("gamma must be positive, got {gamma}")));
    }
    check_binary_labels(labels)?;
    let m = k.nrows();
    if k.ncols() != m || labels.len() != m {
        return Err(structural("kernel and label dimensions differ"));
    }
    let entries = DMatrix::from_fn(m, m, |i, j| {
        let d = if i == j { 1.0 / gamma } else { 0.0 };
        f64::from(labels[i]) * f64::from(labels[j]) * k[(i, j)] + d
    });
    Ok(SvmMatrix { entries, gamma, labels: labels.to_vec() })
}

impl SvmMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.entries)
    }
}
