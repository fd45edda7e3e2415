use serde::{Deserialize, Serialize};

use super::gate::GateOp;
use crate::error::{structural, validation, Result};

/// One step of a circuit: a plain gate, or a uniformly controlled block
/// that applies `branches[c]` to the state where the control register
/// (with `controls[k]` as bit `k`) reads `c`. Missing branches are identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Instruction {
    Gate(GateOp),
    Multiplex {
        controls: Vec<usize>,
        branches: Vec<Circuit>,
    },
}

/// An ordered list of instructions on a fixed-width register.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit { n_qubits, instructions: Vec::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn push(&mut self, gate: GateOp) -> &mut Self {
        self.instructions.push(Instruction::Gate(gate));
        self
    }

    pub fn multiplex(&mut self, controls: Vec<usize>, branches: Vec<Circuit>) -> &mut Self {
        self.instructions.push(Instruction::Multiplex { controls, branches });
        self
    }

    /// Applies `body` only where `control` is |1>.
    pub fn controlled(&mut self, control: usize, body: Circuit) -> &mut Self {
        let idle = Circuit::new(self.n_qubits);
        self.multiplex(vec![control], vec![idle, body])
    }

    pub fn append(&mut self, other: &Circuit) -> &mut Self {
        self.instructions.extend(other.instructions.iter().cloned());
        self
    }

    pub fn then(mut self, other: &Circuit) -> Self {
        self.append(other);
        self
    }

    /// The adjoint circuit.
    pub fn inverse(&self) -> Circuit {
        let instructions = self
            .instructions
            .iter()
            .rev()
            .map(|inst| match inst {
                Instruction::Gate(g) => Instruction::Gate(g.inverse()),
                Instruction::Multiplex { controls, branches } => Instruction::Multiplex {
                    controls: controls.clone(),
                    branches: branches.iter().map(Circuit::inverse).collect(),
                },
            })
            .collect();
        Circuit { n_qubits: self.n_qubits, instructions }
    }

    /// Relabels qubit `q` as `mapping[q]` inside a register of `n_qubits`.
    pub fn remapped(&self, mapping: &[usize], n_qubits: usize) -> Result<Circuit> {
        if mapping.len() != self.n_qubits {
            return Err(structural(format!(
                "qubit mapping has {} entries for a {}-qubit circuit",
                mapping.len(),
                self.n_qubits
            )));
        }
        if let Some(&q) = mapping.iter().find(|&&q| q >= n_qubits) {
            return Err(structural(format!("mapped qubit {q} exceeds register of {n_qubits}")));
        }
        let m = |q: usize| mapping[q];
        let instructions = self
            .instructions
            .iter()
            .map(|inst| -> Result<Instruction> {
                Ok(match inst {
                    Instruction::Gate(g) => Instruction::Gate(remap_gate(g, &m)),
                    Instruction::Multiplex { controls, branches } => Instruction::Multiplex {
                        controls: controls.iter().map(|&q| m(q)).collect(),
                        branches: branches
                            .iter()
                            .map(|b| b.remapped(mapping, n_qubits))
                            .collect::<Result<_>>()?,
                    },
                })
            })
            .collect::<Result<_>>()?;
        Ok(Circuit { n_qubits, instructions })
    }

    /// Checks every instruction against the register, with control qubits
    /// excluded from the targets of the blocks they control.
    pub fn validate(&self) -> Result<()> {
        self.validate_with_controls(&[])
    }

    fn validate_with_controls(&self, outer: &[usize]) -> Result<()> {
        for inst in &self.instructions {
            match inst {
                Instruction::Gate(g) => {
                    g.validate(self.n_qubits)?;
                    if let Some(q) = g.targets().iter().find(|q| outer.contains(q)) {
                        return Err(structural(format!("gate targets control qubit {q}")));
                    }
                }
                Instruction::Multiplex { controls, branches } => {
                    if branches.len() > 1 << controls.len() {
                        return Err(validation(format!(
                            "{} branches for {} control qubits",
                            branches.len(),
                            controls.len()
                        )));
                    }
                    let mut all = outer.to_vec();
                    for &c in controls {
                        if c >= self.n_qubits || all.contains(&c) {
                            return Err(structural(format!("invalid control qubit {c}")));
                        }
                        all.push(c);
                    }
                    for b in branches {
                        if b.n_qubits != self.n_qubits {
                            return Err(structural("branch width differs from parent circuit"));
                        }
                        b.validate_with_controls(&all)?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn remap_gate(g: &GateOp, m: &impl Fn(usize) -> usize) -> GateOp {
    match g {
        GateOp::Rx { qubit, angle } => GateOp::Rx { qubit: m(*qubit), angle: *angle },
        GateOp::Ry { qubit, angle } => GateOp::Ry { qubit: m(*qubit), angle: *angle },
        GateOp::Rz { qubit, angle } => GateOp::Rz { qubit: m(*qubit), angle: *angle },
        GateOp::H { qubit } => GateOp::H { qubit: m(*qubit) },
        GateOp::Cz { a, b } => GateOp::Cz { a: m(*a), b: m(*b) },
        GateOp::Cnot { control, target } => GateOp::Cnot { control: m(*control), target: m(*target) },
        GateOp::Swap { a, b } => GateOp::Swap { a: m(*a), b: m(*b) },
        GateOp::DiagonalPhase { qubits, signs } => GateOp::DiagonalPhase {
            qubits: qubits.iter().map(|&q| m(q)).collect(),
            signs: signs.clone(),
        },
        GateOp::Permutation { qubits, mapping } => GateOp::Permutation {
            qubits: qubits.iter().map(|&q| m(q)).collect(),
            mapping: mapping.clone(),
        },
    }
}

/// Builds a circuit taking |0...0> on `qubits` to the real state with the
/// given amplitudes (`qubits[k]` is bit `k` of the amplitude index).
///
/// Uses a tree of uniformly controlled RY rotations, from the most
/// significant bit down. Signs are honored at the last level only, which is
/// enough to reach any real vector.
pub fn prepare_real_amplitudes(
    n_qubits: usize,
    qubits: &[usize],
    amplitudes: &[f64],
) -> Result<Circuit> {
    let k = qubits.len();
    if amplitudes.len() != 1 << k {
        return Err(structural(format!(
            "{} amplitudes for a {k}-qubit register",
            amplitudes.len()
        )));
    }
    let norm: f64 = amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(validation(format!("amplitudes have norm {norm}, expected 1")));
    }
    let mut circuit = Circuit::new(n_qubits);
    for t in (0..k).rev() {
        let block = 1 << (t + 1);
        let half = 1 << t;
        let controls: Vec<usize> = qubits[t + 1..].to_vec();
        let branches: Vec<Circuit> = (0..1 << (k - t - 1))
            .map(|c| {
                let chunk = &amplitudes[c * block..(c + 1) * block];
                let angle = if t == 0 {
                    2.0 * chunk[1].atan2(chunk[0])
                } else {
                    let lo: f64 = chunk[..half].iter().map(|a| a * a).sum::<f64>().sqrt();
                    let hi: f64 = chunk[half..].iter().map(|a| a * a).sum::<f64>().sqrt();
                    2.0 * hi.atan2(lo)
                };
                let mut b = Circuit::new(n_qubits);
                if angle != 0.0 {
                    b.push(GateOp::Ry { qubit: qubits[t], angle });
                }
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
