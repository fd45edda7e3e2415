use num_complex::Complex64;

use super::circuit::{Circuit, Instruction};
use super::gate::{apply_masked, extract_bits, GateOp};
use crate::error::{structural, validation, Result};

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 20;

/// Dense statevector. Qubit 0 is the least-significant bit of the basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// |0...0> on `n_qubits`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_width(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(structural(format!("basis index {index} out of range for {n_qubits} qubits")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Statevector { n_qubits, amplitudes })
    }

    /// Wraps an amplitude vector; the length must be a power of two and the
    /// norm must be one within 1e-10.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(structural(format!("amplitude vector length {dim} is not a power of two")));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_width(n_qubits)?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(validation(format!("state has squared norm {norm}")));
        }
        Ok(Statevector { n_qubits, amplitudes })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::from_amplitudes(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Marginal distribution over `qubits`, indexed with `qubits[k]` as bit `k`.
    pub fn marginal_probabilities(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        for (k, &q) in qubits.iter().enumerate() {
            if q >= self.n_qubits || qubits[..k].contains(&q) {
                return Err(structural(format!("invalid measured qubit {q}")));
            }
        }
        let mut out = vec![0.0; 1 << qubits.len()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            out[extract_bits(i, qubits)] += a.norm_sqr();
        }
        Ok(out)
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn overlap(&self, other: &Statevector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(structural(format!(
                "overlap of {}-qubit and {}-qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn apply_gate(&self, gate: &GateOp) -> Result<Statevector> {
        gate.validate(self.n_qubits)?;
        let mut out = self.clone();
        apply_masked(&mut out.amplitudes, gate, 0, 0);
        Ok(out)
    }

    pub fn apply_circuit(&self, circuit: &Circuit) -> Result<Statevector> {
        if circuit.n_qubits() != self.n_qubits {
            return Err(structural(format!(
                "{}-qubit circuit applied to {}-qubit state",
                circuit.n_qubits(),
                self.n_qubits
            )));
        }
        circuit.validate()?;
        let mut out = self.clone();
        run(&mut out.amplitudes, circuit, 0, 0);
        Ok(out)
    }

    /// Euclidean distance between amplitude vectors.
    pub fn distance(&self, other: &Statevector) -> Result<f64> {
        if self.n_qubits != other.n_qubits {
            return Err(structural("distance between states of different width"));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }
}

fn check_width(n_qubits: usize) -> Result<()> {
    if n_qubits > MAX_QUBITS {
        return Err(structural(format!("{n_qubits} qubits exceeds the {MAX_QUBITS}-qubit cap")));
    }
    Ok(())
}

fn run(amps: &mut [Complex64], circuit: &Circuit, mask: usize, value: usize) {
    for inst in circuit.instructions() {
        match inst {
            Instruction::Gate(g) => apply_masked(amps, g, mask, value),
            Instruction::Multiplex { controls, branches } => {
                let cmask = controls.iter().fold(0, |m, &q| m | (1 << q));
                for (c, branch) in branches.iter().enumerate() {
                    if branch.is_empty() {
                        continue;
                    }
                    let cvalue = controls
                        .iter()
                        .enumerate()
                        .fold(0, |v, (k, &q)| v | (((c >> k) & 1) << q));
                    run(amps, branch, mask | cmask, value | cvalue);
                }
            }
        }
    }
}
