use super::circuit::Circuit;
use super::gate::GateOp;
use super::statevector::Statevector;
use crate::error::{structural, Error, Result};

/// Ancilla-interference test of `v`: returns (P0, P1) for the ancilla,
/// with P0 - P1 = Re⟨0|V|0⟩.
pub fn hadamard_test(v: &Circuit) -> Result<(f64, f64)> {
    let m = v.n_qubits();
    let ancilla = m;
    let register: Vec<usize> = (0..m).collect();
    let body = v.remapped(&register, m + 1)?;
    let mut circ = Circuit::new(m + 1);
    circ.push(GateOp::H { qubit: ancilla });
    circ.controlled(ancilla, body);
    circ.push(GateOp::H { qubit: ancilla });
    let out = Statevector::zero(m + 1)?.apply_circuit(&circ)?;
    let p = out.marginal_probabilities(&[ancilla])?;
    Ok((p[0], p[1]))
}

/// Hadamard test of `H^m · U_A`, so that `(P0 - P1)·sqrt(2^m)` is the sum
/// of the amplitudes prepared by `preparer`.
pub fn hadamard_test_probabilities(preparer: &Circuit) -> Result<(f64, f64)> {
    hadamard_test(&with_hadamard_layer(preparer.clone()))
}

/// Same as [`hadamard_test_probabilities`] with a controlled sign pattern
/// inserted before the Hadamard layer, giving `Σ signs[i]·α_i / sqrt(2^m)`.
pub fn hadamard_test_with_signs(preparer: &Circuit, signs: &[f64]) -> Result<(f64, f64)> {
    let m = preparer.n_qubits();
    let mut v = preparer.clone();
    v.push(GateOp::DiagonalPhase { qubits: (0..m).collect(), signs: signs.to_vec() });
    hadamard_test(&with_hadamard_layer(v))
}

fn with_hadamard_layer(mut v: Circuit) -> Circuit {
    for q in 0..v.n_qubits() {
        v.push(GateOp::H { qubit: q });
    }
    v
}

/// Runs `iterations` rounds of `U · O · U† · T` on `state`, where `T` flips
/// the sign of marked basis states and `O = diag(1, -1, ..., -1)`.
///
/// `preparer` must map |0...0> to `state` within 1e-8.
pub fn grover_reflections(
    state: &Statevector,
    marked: &[bool],
    preparer: &Circuit,
    iterations: usize,
) -> Result<Statevector> {
    let n = state.n_qubits();
    if marked.len() != state.dim() {
        return Err(structural(format!(
            "marked mask has {} entries for dimension {}",
            marked.len(),
            state.dim()
        )));
    }
    let prepared = Statevector::zero(n)?.apply_circuit(preparer)?;
    let gap = prepared.distance(state)?;
    if gap > 1e-8 {
        return Err(Error::Contract(format!(
            "preparer does not reproduce the input state (distance {gap:.3e})"
        )));
    }
    let all: Vec<usize> = (0..n).collect();
    let phase_flip = GateOp::DiagonalPhase {
        qubits: all.clone(),
        signs: marked.iter().map(|&m| if m { -1.0 } else { 1.0 }).collect(),
    };
    let mut zero_reflect = vec![-1.0; state.dim()];
    zero_reflect[0] = 1.0;
    let mut round = Circuit::new(n);
    round.push(phase_flip);
    round.append(&preparer.inverse());
    round.push(GateOp::DiagonalPhase { qubits: all, signs: zero_reflect });
    round.append(preparer);
    let mut out = state.clone();
    for _ in 0..iterations {
        out = out.apply_circuit(&round)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::circuit::prepare_real_amplitudes;
    use approx::assert_abs_diff_eq;

    fn uniform(n: usize) -> (Statevector, Circuit) {
        let mut c = Circuit::new(n);
        for q in 0..n {
            c.push(GateOp::H { qubit: q });
        }
        (Statevector::zero(n).unwrap().apply_circuit(&c).unwrap(), c)
    }

    #[test]
    fn hadamard_test_examples() {
        // |0>^2: P0 - P1 = 1/2, scaled by sqrt(4) gives 1.
        let (p0, p1) = hadamard_test_probabilities(&Circuit::new(2)).unwrap();
        assert_abs_diff_eq!(p0 + p1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!((p0 - p1) * 2.0, 1.0, epsilon = 1e-12);

        let (_, prep) = uniform(2);
        let (p0, p1) = hadamard_test_probabilities(&prep).unwrap();
        assert_abs_diff_eq!((p0 - p1) * 2.0, 2.0, epsilon = 1e-12);

        let prep = prepare_real_amplitudes(2, &[0, 1], &[0.6, 0.8, 0.0, 0.0]).unwrap();
        let (p0, p1) = hadamard_test_probabilities(&prep).unwrap();
        assert_abs_diff_eq!((p0 - p1) * 2.0, 1.4, epsilon = 1e-12);
    }

    #[test]
    fn signed_hadamard_test_matches_z_on_top_qubit() {
        let amps = [0.1, 0.2, 0.3, 0.4, 0.5, 0.1, 0.2, 0.6];
        let norm = amps.iter().map(|a: &f64| a * a).sum::<f64>().sqrt();
        let amps: Vec<f64> = amps.iter().map(|a| a / norm).collect();
        let prep = prepare_real_amplitudes(3, &[0, 1, 2], &amps).unwrap();
        let signs: Vec<f64> = (0..8).map(|i| if i < 4 { 1.0 } else { -1.0 }).collect();
        let (p0, p1) = hadamard_test_with_signs(&prep, &signs).unwrap();
        let direct: f64 = amps.iter().zip(&signs).map(|(a, s)| a * s).sum();
        assert_abs_diff_eq!((p0 - p1) * 8f64.sqrt(), direct, epsilon = 1e-12);

        // A single Z on the top qubit realizes the same positive/negative split.
        let mut z_circ = prep.clone();
        z_circ.push(GateOp::DiagonalPhase { qubits: vec![2], signs: vec![1.0, -1.0] });
        let (q0, q1) = hadamard_test_probabilities(&z_circ).unwrap();
        assert_abs_diff_eq!(q0 - q1, p0 - p1, epsilon = 1e-12);
    }

    #[test]
    fn grover_two_qubits_one_mark_reaches_certainty() {
        let (s, prep) = uniform(2);
        let mut marked = vec![false; 4];
        marked[2] = true;
        let out = grover_reflections(&s, &marked, &prep, 1).unwrap();
        assert_abs_diff_eq!(out.probabilities()[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn grover_zero_iterations_is_identity() {
        let (s, prep) = uniform(3);
        let out = grover_reflections(&s, &[true; 8], &prep, 0).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn grover_three_qubits_two_rounds() {
        let (s, prep) = uniform(3);
        let mut marked = vec![false; 8];
        marked[5] = true;
        let out = grover_reflections(&s, &marked, &prep, 2).unwrap();
        let theta = (1.0f64 / 8f64.sqrt()).asin();
        let expected = (5.0 * theta).sin().powi(2);
        assert_abs_diff_eq!(out.probabilities()[5], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 0.9453, epsilon = 1e-4);
    }

    #[test]
    fn grover_rejects_mismatched_preparer() {
        let (s, _) = uniform(2);
        let err = grover_reflections(&s, &[false; 4], &Circuit::new(2), 1).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }
}
