use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{structural, validation, Result};

/// A primitive gate.
///
/// Rotations use the halved-angle convention `R_a(t) = exp(-i t A / 2)`.
/// `DiagonalPhase` and `Permutation` act on the sub-register formed by
/// `qubits`, where `qubits[k]` supplies bit `k` of the sub-register index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GateOp {
    Rx { qubit: usize, angle: f64 },
    Ry { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    H { qubit: usize },
    Cz { a: usize, b: usize },
    Cnot { control: usize, target: usize },
    Swap { a: usize, b: usize },
    DiagonalPhase { qubits: Vec<usize>, signs: Vec<f64> },
    Permutation { qubits: Vec<usize>, mapping: Vec<usize> },
}

impl GateOp {
    pub fn targets(&self) -> Vec<usize> {
        match self {
            GateOp::Rx { qubit, .. }
            | GateOp::Ry { qubit, .. }
            | GateOp::Rz { qubit, .. }
            | GateOp::H { qubit } => vec![*qubit],
            GateOp::Cz { a, b } | GateOp::Swap { a, b } => vec![*a, *b],
            GateOp::Cnot { control, target } => vec![*control, *target],
            GateOp::DiagonalPhase { qubits, .. } | GateOp::Permutation { qubits, .. } => {
                qubits.clone()
            }
        }
    }

    pub fn inverse(&self) -> GateOp {
        match self {
            GateOp::Rx { qubit, angle } => GateOp::Rx { qubit: *qubit, angle: -angle },
            GateOp::Ry { qubit, angle } => GateOp::Ry { qubit: *qubit, angle: -angle },
            GateOp::Rz { qubit, angle } => GateOp::Rz { qubit: *qubit, angle: -angle },
            GateOp::Permutation { qubits, mapping } => {
                let mut inv = vec![0; mapping.len()];
                for (from, &to) in mapping.iter().enumerate() {
                    inv[to] = from;
                }
                GateOp::Permutation { qubits: qubits.clone(), mapping: inv }
            }
            other => other.clone(),
        }
    }

    /// Checks targets against the register width and the gate's own data.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let targets = self.targets();
        for (k, &q) in targets.iter().enumerate() {
            if q >= n_qubits {
                return Err(structural(format!(
                    "qubit {q} out of range for {n_qubits}-qubit register"
                )));
            }
            if targets[..k].contains(&q) {
                return Err(structural(format!("repeated target qubit {q}")));
            }
        }
        match self {
            GateOp::DiagonalPhase { qubits, signs } => {
                if signs.len() != 1 << qubits.len() {
                    return Err(structural(format!(
                        "diagonal of length {} does not match {} qubits",
                        signs.len(),
                        qubits.len()
                    )));
                }
                if let Some(bad) = signs.iter().find(|s| **s != 1.0 && **s != -1.0) {
                    return Err(validation(format!("diagonal entry {bad} is not +1 or -1")));
                }
            }
            GateOp::Permutation { qubits, mapping } => {
                if mapping.len() != 1 << qubits.len() {
                    return Err(structural(format!(
                        "mapping of length {} does not match {} qubits",
                        mapping.len(),
                        qubits.len()
                    )));
                }
                let mut seen = vec![false; mapping.len()];
                for &m in mapping {
                    if m >= mapping.len() || seen[m] {
                        return Err(validation("permutation mapping is not a bijection"));
                    }
                    seen[m] = true;
                }
            }
            _ => {}
        }
        Ok(())
    }
}

pub(crate) type Mat2 = [[Complex64; 2]; 2];

pub(crate) fn single_qubit_matrix(gate: &GateOp) -> Option<(usize, Mat2)> {
    let zero = Complex64::new(0.0, 0.0);
    match *gate {
        GateOp::Rx { qubit, angle } => {
            let (s, c) = (angle / 2.0).sin_cos();
            let c = Complex64::new(c, 0.0);
            let mis = Complex64::new(0.0, -s);
            Some((qubit, [[c, mis], [mis, c]]))
        }
        GateOp::Ry { qubit, angle } => {
            let (s, c) = (angle / 2.0).sin_cos();
            Some((
                qubit,
                [
                    [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                    [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
                ],
            ))
        }
        GateOp::Rz { qubit, angle } => {
            let half = angle / 2.0;
            Some((
                qubit,
                [
                    [Complex64::from_polar(1.0, -half), zero],
                    [zero, Complex64::from_polar(1.0, half)],
                ],
            ))
        }
        GateOp::H { qubit } => {
            let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            Some((qubit, [[h, h], [h, -h]]))
        }
        _ => None,
    }
}

/// Gathers the bits of `index` at positions `qubits` into a compact integer.
pub(crate) fn extract_bits(index: usize, qubits: &[usize]) -> usize {
    qubits
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &q)| acc | (((index >> q) & 1) << k))
}

/// Writes the bits of `value` back into `index` at positions `qubits`.
pub(crate) fn deposit_bits(index: usize, qubits: &[usize], value: usize) -> usize {
    qubits.iter().enumerate().fold(index, |acc, (k, &q)| {
        (acc & !(1 << q)) | (((value >> k) & 1) << q)
    })
}

/// Applies `gate` in place to every amplitude whose index satisfies
/// `index & mask == value`. Control bits must be disjoint from the targets.
pub(crate) fn apply_masked(amps: &mut [Complex64], gate: &GateOp, mask: usize, value: usize) {
    let dim = amps.len();
    let selected = |i: usize| i & mask == value;
    if let Some((q, m)) = single_qubit_matrix(gate) {
        let bit = 1 << q;
        for i in 0..dim {
            if i & bit == 0 && selected(i) {
                let j = i | bit;
                let (a, b) = (amps[i], amps[j]);
                amps[i] = m[0][0] * a + m[0][1] * b;
                amps[j] = m[1][0] * a + m[1][1] * b;
            }
        }
        return;
    }
    match gate {
        GateOp::Cz { a, b } => {
            let both = (1 << a) | (1 << b);
            for (i, amp) in amps.iter_mut().enumerate() {
                if i & both == both && selected(i) {
                    *amp = -*amp;
                }
            }
        }
        GateOp::Cnot { control, target } => {
            let (c, t) = (1 << control, 1 << target);
            for i in 0..dim {
                if i & c != 0 && i & t == 0 && selected(i) {
                    amps.swap(i, i | t);
                }
            }
        }
        GateOp::Swap { a, b } => {
            let (ba, bb) = (1 << a, 1 << b);
            for i in 0..dim {
                if i & ba != 0 && i & bb == 0 && selected(i) {
                    amps.swap(i, i ^ ba ^ bb);
                }
            }
        }
        GateOp::DiagonalPhase { qubits, signs } => {
            for (i, amp) in amps.iter_mut().enumerate() {
                if selected(i) && signs[extract_bits(i, qubits)] < 0.0 {
                    *amp = -*amp;
                }
            }
        }
        GateOp::Permutation { qubits, mapping } => {
            let source = amps.to_vec();
            for (i, &amp) in source.iter().enumerate() {
                if selected(i) {
                    let j = deposit_bits(i, qubits, mapping[extract_bits(i, qubits)]);
                    amps[j] = amp;
                }
            }
        }
        _ => unreachable!("single-qubit gates handled above"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_helpers_round_trip() {
        let qubits = [3, 0, 5];
        for index in 0..64 {
            let v = extract_bits(index, &qubits);
            assert_eq!(deposit_bits(index, &qubits, v), index);
        }
        assert_eq!(extract_bits(0b101000, &qubits), 0b101);
        assert_eq!(deposit_bits(0, &qubits, 0b011), 0b1001);
    }

    #[test]
    fn rejects_non_unit_diagonal() {
        let gate = GateOp::DiagonalPhase { qubits: vec![0], signs: vec![1.0, 0.5] };
        assert!(matches!(gate.validate(1), Err(crate::Error::Validation(_))));
    }

    #[test]
    fn rejects_out_of_range_and_repeated_targets() {
        assert!(matches!(
            GateOp::H { qubit: 2 }.validate(2),
            Err(crate::Error::Structural(_))
        ));
        assert!(matches!(
            GateOp::Cz { a: 1, b: 1 }.validate(2),
            Err(crate::Error::Structural(_))
        ));
    }

    #[test]
    fn rejects_non_bijective_mapping() {
        let gate = GateOp::Permutation { qubits: vec![0, 1], mapping: vec![0, 1, 1, 3] };
        assert!(gate.validate(2).is_err());
    }

    #[test]
    fn permutation_inverse_undoes_mapping() {
        let gate = GateOp::Permutation { qubits: vec![0, 1], mapping: vec![2, 0, 3, 1] };
        if let GateOp::Permutation { mapping, .. } = gate.inverse() {
            assert_eq!(mapping, vec![1, 3, 0, 2]);
        } else {
            panic!("inverse changed the gate kind");
        }
    }
}
