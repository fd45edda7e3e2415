//! Variational SVM: α lives in the amplitudes of `U_A(ξ)|0>^m` and is
//! trained on `½<α|K|α> - ‖α‖₁ + C·l(α)²`.
//!
//! `U_A` is a tree of uniformly controlled RY rotations with every angle in
//! `[0, π]`, which reaches exactly the nonnegative unit vectors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::model::{AlphaMode, AlphaModel};
use crate::feature_map::ParameterVector;
use crate::error::{structural, validation, Error, Result};
use crate::kernel::{pauli_decompose, sampled_expectation, SvmMatrix};
use crate::optimizer::{multistart_minimize, OptimizationProblem};
use crate::sim::{
    derive_seed, hadamard_test_probabilities, hadamard_test_with_signs, Circuit, GateOp,
    ShotSampler, Statevector,
};

/// Diagonal entry given to padding slots so their amplitudes stay near 0.
const PAD_PENALTY: f64 = 1e3;

/// Parameter count of the ansatz on `m` qubits.
pub fn ansatz_parameter_count(m: usize) -> usize {
    (1 << m) - 1
}

fn check_xi(m: usize, xi: &[f64]) -> Result<()> {
    if xi.len() != ansatz_parameter_count(m) {
        return Err(validation(format!(
            "ansatz on {m} qubits takes {} angles, got {}",
            ansatz_parameter_count(m),
            xi.len()
        )));
    }
    Ok(())
}

/// Angles are consumed level by level from the most significant qubit; at
/// level `t` the branch selected by the higher bits `c` uses
/// `xi[2^(m-t-1) - 1 + c]`.
pub fn alpha_ansatz(m: usize, xi: &[f64]) -> Result<Circuit> {
    check_xi(m, xi)?;
    let mut circuit = Circuit::new(m);
    for t in (0..m).rev() {
        let offset = (1 << (m - t - 1)) - 1;
        let controls: Vec<usize> = (t + 1..m).collect();
        let branches: Vec<Circuit> = (0..1 << (m - t - 1))
            .map(|c| {
                let mut b = Circuit::new(m);
                b.push(GateOp::Ry { qubit: t, angle: xi[offset + c] });
                b
            })
            .collect();
        if controls.is_empty() {
            circuit.append(&branches[0]);
        } else {
            circuit.multiplex(controls, branches);
        }
    }
    Ok(circuit)
}

/// Closed form of the amplitudes produced by [`alpha_ansatz`].
pub fn ansatz_amplitudes(m: usize, xi: &[f64]) -> Result<Vec<f64>> {
    check_xi(m, xi)?;
    Ok((0..1usize << m)
        .map(|i| {
            (0..m)
                .map(|t| {
                    let a = xi[(1 << (m - t - 1)) - 1 + (i >> (t + 1))] / 2.0;
                    if (i >> t) & 1 == 0 { a.cos() } else { a.sin() }
                })
                .product()
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmObjectiveBreakdown {
    pub quadratic: f64,
    pub l1_norm: f64,
    pub constraint: f64,
    pub total: f64,
}

impl SvmObjectiveBreakdown {
    pub fn new(quadratic: f64, l1_norm: f64, constraint: f64, penalty: f64) -> Self {
        SvmObjectiveBreakdown {
            quadratic,
            l1_norm,
            constraint,
            total: quadratic - l1_norm + penalty * constraint * constraint,
        }
    }
}

/// How the three objective terms are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EstimationMode {
    Exact,
    /// Sampled Pauli expectation for the quadratic term and shot-sampled
    /// Hadamard tests for the other two, `shots` each.
    Sampled { shots: u64, seed: u64 },
}

/// Direct evaluation on a weight vector.
pub fn objective_breakdown(alpha: &[f64], matrix: &DMatrix<f64>, signs: &[f64], penalty: f64) -> SvmObjectiveBreakdown {
    let a = DVector::from_column_slice(alpha);
    let quadratic = 0.5 * (a.transpose() * matrix * &a)[(0, 0)];
    let l1: f64 = alpha.iter().sum();
    let l: f64 = alpha.iter().zip(signs).map(|(a, s)| a * s).sum();
    SvmObjectiveBreakdown::new(quadratic, l1, l, penalty)
}

fn register_width(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(validation(format!("matrix dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Objective terms from the circuits: the quadratic form on the prepared
/// state, `‖α‖₁ = √M (P0 - P1)` from the plain Hadamard test and `l(α)`
/// from the test with the sign pattern inserted.
pub fn svqsvm_objective(
    xi: &[f64],
    svm: &SvmMatrix,
    penalty: f64,
    mode: EstimationMode,
) -> Result<SvmObjectiveBreakdown> {
    let signs: Vec<f64> = svm.labels.iter().map(|&y| f64::from(y)).collect();
    register_objective(xi, &svm.entries, &signs, penalty, mode)
}

pub(crate) fn register_objective(
    xi: &[f64],
    matrix: &DMatrix<f64>,
    signs: &[f64],
    penalty: f64,
    mode: EstimationMode,
) -> Result<SvmObjectiveBreakdown> {
    let m = register_width(matrix.nrows())?;
    let prep = alpha_ansatz(m, xi)?;
    let state = Statevector::zero(m)?.apply_circuit(&prep)?;
    let scale = ((1usize << m) as f64).sqrt();
    let plain = hadamard_test_probabilities(&prep)?;
    let signed = hadamard_test_with_signs(&prep, signs)?;
    match mode {
        EstimationMode::Exact => {
            let alpha: Vec<f64> = state.amplitudes().iter().map(|a| a.re).collect();
            let a = DVector::from_column_slice(&alpha);
            let quadratic = 0.5 * (a.transpose() * matrix * &a)[(0, 0)];
            Ok(SvmObjectiveBreakdown::new(
                quadratic,
                scale * (plain.0 - plain.1),
                scale * (signed.0 - signed.1),
                penalty,
            ))
        }
        EstimationMode::Sampled { shots, seed } => {
            let sampler = ShotSampler::new(seed, shots)?;
            let decomp = pauli_decompose(matrix)?;
            let quadratic = 0.5 * sampled_expectation(&decomp, &state, &sampler.fork(&[0]))?;
            let diff = |p1: f64, stream: u64| 1.0 - 2.0 * sampler.fork(&[stream]).estimate_probability(p1);
            Ok(SvmObjectiveBreakdown::new(
                quadratic,
                scale * diff(plain.1, 1),
                scale * diff(signed.1, 2),
                penalty,
            ))
        }
    }
}

/// Samples ordered positives first, then negatives, then padding up to a
/// power of two.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Register {
    pub slots: Vec<Option<usize>>,
    pub matrix: DMatrix<f64>,
    pub signs: Vec<f64>,
}

impl Register {
    pub fn new(svm: &SvmMatrix) -> Register {
        let m = svm.size();
        let mut slots: Vec<Option<usize>> = (0..m).filter(|&i| svm.labels[i] > 0).map(Some).collect();
        slots.extend((0..m).filter(|&i| svm.labels[i] < 0).map(Some));
        let dim = m.next_power_of_two().max(2);
        let mut pad_sign = 1.0;
        let mut signs: Vec<f64> = slots.iter().map(|s| f64::from(svm.labels[s.unwrap()])).collect();
        while slots.len() < dim {
            slots.push(None);
            signs.push(pad_sign);
            pad_sign = -pad_sign;
        }
        let matrix = DMatrix::from_fn(dim, dim, |a, b| match (slots[a], slots[b]) {
            (Some(i), Some(j)) => svm.entries[(i, j)],
            _ if a == b => PAD_PENALTY,
            _ => 0.0,
        });
        Register { slots, matrix, signs }
    }

    pub fn width(&self) -> usize {
        self.slots.len().trailing_zeros() as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvqsvmConfig {
    /// Evaluations per start.
    pub budget: usize,
    pub tolerance: f64,
    pub starts: usize,
    pub estimation: EstimationMode,
}

impl Default for SvqsvmConfig {
    fn default() -> Self {
        SvqsvmConfig { budget: 3000, tolerance: 1e-10, starts: 5, estimation: EstimationMode::Exact }
    }
}

pub const DEFAULT_PENALTY: f64 = 10.0;

/// Trains α with angles boxed to `[0, π]` and returns a model whose support
/// mask uses the default threshold `1/(4M)` in exact mode.
pub fn train_svqsvm(svm: &SvmMatrix, penalty: f64, config: &SvqsvmConfig, seed: u64) -> Result<AlphaModel> {
    if !(penalty >= 0.0) {
        return Err(validation(format!("penalty must be nonnegative, got {penalty}")));
    }
    let register = Register::new(svm);
    let m = register.width();
    let n_params = ansatz_parameter_count(m);
    let problem = OptimizationProblem::uniform_box(n_params, 0.0, std::f64::consts::PI, config.budget)
        .with_tolerance(config.tolerance);
    let mut failure: Option<Error> = None;
    let mut evaluation = 0u64;
    let objective = |xi: &[f64]| -> f64 {
        evaluation += 1;
        let value = match config.estimation {
            // Same value as the circuit estimators, without simulating them.
            EstimationMode::Exact => ansatz_amplitudes(m, xi)
                .map(|a| objective_breakdown(&a, &register.matrix, &register.signs, penalty).total),
            EstimationMode::Sampled { shots, seed: s } => register_objective(
                xi,
                &register.matrix,
                &register.signs,
                penalty,
                EstimationMode::Sampled { shots, seed: derive_seed(s, &[evaluation]) },
            )
            .map(|b| b.total),
        };
        value.unwrap_or_else(|e| {
            failure.get_or_insert(e);
            f64::NAN
        })
    };
    let result = multistart_minimize(&problem, objective, config.starts.max(1), seed);
    if let Some(e) = failure {
        return Err(e);
    }
    let trace = result?;
    let xi = trace.best.best_params;
    let amps = ansatz_amplitudes(m, &xi)?;
    let mut alpha = vec![0.0; svm.size()];
    for (slot, sample) in register.slots.iter().enumerate() {
        if let Some(i) = sample {
            alpha[*i] = amps[slot].abs();
        }
    }
    let norm = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 0.0 {
        alpha.iter_mut().for_each(|a| *a /= norm);
    }
    let mut model = AlphaModel {
        mode: AlphaMode::Variational,
        xi: Some(ParameterVector(xi)),
        register: register.slots.clone(),
        alpha,
        labels: svm.labels.clone(),
        support_mask: vec![true; svm.size()],
        m_s: svm.size(),
        bias: 0.0,
        gamma: svm.gamma,
        penalty,
        objective: Some(trace.best.best_value),
        power: 2,
        feature_map: None,
        theta: None,
    };
    model.extract_support_vectors(default_threshold(svm.size()), None)?;
    Ok(model)
}

/// `τ = 1/(4M)` on measurement frequencies.
pub fn default_threshold(m: usize) -> f64 {
    1.0 / (4.0 * m as f64)
}

/// Outcome of the fault-tolerant sign rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    Positive,
    Negative,
    Inconclusive,
}

impl Prediction {
    pub fn label(self) -> Option<i8> {
        match self {
            Prediction::Positive => Some(1),
            Prediction::Negative => Some(-1),
            Prediction::Inconclusive => None,
        }
    }
}

/// `+1` above `1/√k`, `-1` below `-1/√k`, otherwise inconclusive.
pub fn fault_tolerant_sign(estimate: f64, shots: u64) -> Prediction {
    let band = 1.0 / (shots as f64).sqrt();
    if estimate > band {
        Prediction::Positive
    } else if estimate < -band {
        Prediction::Negative
    } else {
        Prediction::Inconclusive
    }
}

/// Exact mode returns `sign f(x)` (ties to +1). Sampled mode estimates
/// `f` as the mean of `k` ±1 outcomes with `P(+1) = (1 + f)/2` and applies
/// [`fault_tolerant_sign`]. Returns the label and the value used.
pub fn classify_svqsvm(
    model: &AlphaModel,
    kernel_row: &[f64],
    sampler: Option<&ShotSampler>,
) -> Result<(Prediction, f64)> {
    let f = model.decision_value(kernel_row)?;
    match sampler {
        None => Ok((if f >= 0.0 { Prediction::Positive } else { Prediction::Negative }, f)),
        Some(s) => {
            let estimate = estimate_sign_test(f, s);
            Ok((fault_tolerant_sign(estimate, s.shots), estimate))
        }
    }
}

/// Mean of `sampler.shots` ±1 outcomes with `P(+1) = (1 + f)/2`.
pub fn estimate_sign_test(f: f64, sampler: &ShotSampler) -> f64 {
    let p_minus = ((1.0 - f.clamp(-1.0, 1.0)) / 2.0).clamp(0.0, 1.0);
    1.0 - 2.0 * sampler.estimate_probability(p_minus)
}

pub(crate) fn check_support(model: &AlphaModel) -> Result<()> {
    if model.m_s == 0 {
        return Err(Error::Contract("model has no support vectors".into()));
    }
    if model.support_mask.len() != model.alpha.len() {
        return Err(structural("support mask length differs from α"));
    }
    Ok(())
}
