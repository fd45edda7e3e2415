//! Pauli-basis expansion of small matrices and sampled expectation values.
//!
//! Words are written most-significant qubit first, so `"XZ"` is
//! `X` on qubit 1 and `Z` on qubit 0, matching the Kronecker order of the
//! matrix indices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{structural, validation, Result};
use crate::sim::{ShotSampler, Statevector};

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);
const I1: Complex64 = Complex64::new(0.0, 1.0);

/// Largest qubit count accepted by [`pauli_decompose`].
pub const MAX_PAULI_QUBITS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coeff: Complex64,
    pub word: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliDecomposition {
    pub n_qubits: usize,
    pub terms: Vec<PauliTerm>,
    /// Σ |coeff|.
    pub lambda_total: f64,
}

/// Single-qubit Pauli entry `<row|σ|col>`.
fn pauli_entry(p: u8, row: usize, col: usize) -> Complex64 {
    match (p, row, col) {
        (b'I', r, c) => if r == c { C1 } else { C0 },
        (b'Z', 0, 0) => C1,
        (b'Z', 1, 1) => -C1,
        (b'X', r, c) => if r != c { C1 } else { C0 },
        (b'Y', 0, 1) => -I1,
        (b'Y', 1, 0) => I1,
        _ => C0,
    }
}

/// Dense matrix of a Pauli word.
pub fn pauli_matrix(word: &str) -> Result<DMatrix<Complex64>> {
    check_word(word)?;
    let m = word.len();
    let dim = 1usize << m;
    let bytes = word.as_bytes();
    Ok(DMatrix::from_fn(dim, dim, |r, c| {
        let mut v = C1;
        for (k, &p) in bytes.iter().enumerate() {
            let q = m - 1 - k;
            v *= pauli_entry(p, (r >> q) & 1, (c >> q) & 1);
            if v == C0 {
                break;
            }
        }
        v
    }))
}

fn check_word(word: &str) -> Result<()> {
    if word.is_empty() || !word.bytes().all(|b| matches!(b, b'I' | b'X' | b'Y' | b'Z')) {
        return Err(validation(format!("invalid Pauli word {word:?}")));
    }
    Ok(())
}

fn all_words(m: usize) -> Vec<String> {
    const LETTERS: [char; 4] = ['I', 'X', 'Y', 'Z'];
    (0..1usize << (2 * m))
        .map(|code| (0..m).map(|k| LETTERS[(code >> (2 * (m - 1 - k))) & 3]).collect())
        .collect()
}

/// Expands a real `2^m × 2^m` matrix as `Σ c_σ σ` with `c_σ = Tr(σM)/2^m`.
/// Terms with `|c| < 1e-14` are dropped.
pub fn pauli_decompose(matrix: &DMatrix<f64>) -> Result<PauliDecomposition> {
    let dim = matrix.nrows();
    if dim != matrix.ncols() {
        return Err(structural("matrix is not square"));
    }
    if dim < 2 || !dim.is_power_of_two() {
        return Err(validation(format!("dimension {dim} is not a power of two")));
    }
    let m = dim.trailing_zeros() as usize;
    if m > MAX_PAULI_QUBITS {
        return Err(validation(format!("{m} qubits exceeds the decomposition limit {MAX_PAULI_QUBITS}")));
    }
    let mut terms = Vec::new();
    for word in all_words(m) {
        let sigma = pauli_matrix(&word)?;
        let mut trace = C0;
        for r in 0..dim {
            for c in 0..dim {
                trace += sigma[(r, c)] * matrix[(c, r)];
            }
        }
        let coeff = trace / dim as f64;
        if coeff.norm() >= 1e-14 {
            terms.push(PauliTerm { coeff, word });
        }
    }
    let lambda_total = terms.iter().map(|t| t.coeff.norm()).sum();
    Ok(PauliDecomposition { n_qubits: m, terms, lambda_total })
}

impl PauliDecomposition {
    pub fn reconstruct(&self) -> Result<DMatrix<Complex64>> {
        let dim = 1usize << self.n_qubits;
        let mut out = DMatrix::from_element(dim, dim, C0);
        for t in &self.terms {
            out += pauli_matrix(&t.word)? * t.coeff;
        }
        Ok(out)
    }

    /// Exact `<ψ|K|ψ>` (real part).
    pub fn exact_expectation(&self, state: &Statevector) -> Result<f64> {
        self.check_state(state)?;
        let mut total = 0.0;
        for t in &self.terms {
            total += (t.coeff * pauli_expectation(&t.word, state)?).re;
        }
        Ok(total)
    }

    fn check_state(&self, state: &Statevector) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(structural(format!(
                "decomposition acts on {} qubits, state has {}",
                self.n_qubits,
                state.n_qubits()
            )));
        }
        Ok(())
    }
}

/// `<ψ|σ|ψ>` for a Pauli word, always real.
pub fn pauli_expectation(word: &str, state: &Statevector) -> Result<f64> {
    check_word(word)?;
    let m = word.len();
    if m != state.n_qubits() {
        return Err(structural("Pauli word length differs from state width"));
    }
    let (mut flip, mut zmask, mut n_y) = (0usize, 0usize, 0u32);
    for (k, b) in word.bytes().enumerate() {
        let bit = 1usize << (m - 1 - k);
        match b {
            b'X' => flip |= bit,
            b'Z' => zmask |= bit,
            b'Y' => {
                flip |= bit;
                zmask |= bit;
                n_y += 1;
            }
            _ => {}
        }
    }
    // σ|i> = i^{n_y} (-1)^{popcount(i & zmask)} |i ^ flip>, with Y = iXZ.
    let global = I1.powu(n_y);
    let amps = state.amplitudes();
    let mut acc = C0;
    for (i, a) in amps.iter().enumerate() {
        let sign = if (i & zmask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        acc += amps[i ^ flip].conj() * a * sign;
    }
    Ok((acc * global).re)
}

/// ±1 outcome of measuring `σ` once, given its expectation value.
fn measure_pm(rng: &mut impl Rng, expectation: f64) -> f64 {
    let p_plus = ((1.0 + expectation) / 2.0).clamp(0.0, 1.0);
    if rng.random::<f64>() < p_plus { 1.0 } else { -1.0 }
}

/// Estimates `<ψ|K|ψ>` from `sampler.shots` single-shot Pauli measurements.
/// Each shot picks term `j` with probability `|c_j|/Λ` and contributes
/// `Λ·sign(c_j)·outcome`, which is unbiased for Hermitian `K`.
pub fn sampled_expectation(
    decomp: &PauliDecomposition,
    state: &Statevector,
    sampler: &ShotSampler,
) -> Result<f64> {
    decomp.check_state(state)?;
    if decomp.terms.is_empty() {
        return Ok(0.0);
    }
    let expectations = decomp
        .terms
        .iter()
        .map(|t| pauli_expectation(&t.word, state))
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<f64> = decomp.terms.iter().map(|t| t.coeff.norm()).collect();
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        cdf.push(acc);
    }
    let mut rng = sampler.rng();
    let mut sum = 0.0;
    for _ in 0..sampler.shots {
        let u = rng.random::<f64>() * acc;
        let j = cdf.partition_point(|&c| c <= u).min(weights.len() - 1);
        let phase = decomp.terms[j].coeff / weights[j];
        sum += phase.re * measure_pm(&mut rng, expectations[j]);
    }
    Ok(decomp.lambda_total * sum / sampler.shots as f64)
}

/// Entry-then-coin estimator: each shot picks an entry `(x, y)` with
/// probability `|K_xy|/Σ|K|`, then one of the `2^m` Pauli words in the
/// expansion of `|x><y|` uniformly by tossing a coin per qubit, and
/// measures that word once.
pub fn sampled_expectation_entries(
    matrix: &DMatrix<f64>,
    state: &Statevector,
    sampler: &ShotSampler,
) -> Result<f64> {
    let dim = matrix.nrows();
    if dim != matrix.ncols() || dim != state.dim() {
        return Err(structural("matrix and state dimensions differ"));
    }
    let m = state.n_qubits();
    let entries: Vec<(usize, usize, f64)> = (0..dim)
        .flat_map(|r| (0..dim).map(move |c| (r, c)))
        .map(|(r, c)| (r, c, matrix[(r, c)]))
        .filter(|e| e.2 != 0.0)
        .collect();
    if entries.is_empty() {
        return Ok(0.0);
    }
    let mut cdf = Vec::with_capacity(entries.len());
    let mut lambda = 0.0;
    for e in &entries {
        lambda += e.2.abs();
        cdf.push(lambda);
    }
    let mut rng = sampler.rng();
    let mut word = vec![b'I'; m];
    let mut sum = 0.0;
    for _ in 0..sampler.shots {
        let u = rng.random::<f64>() * lambda;
        let (x, y, k) = entries[cdf.partition_point(|&c| c <= u).min(entries.len() - 1)];
        // |a><b| per qubit: |0><0| = (I+Z)/2, |1><1| = (I-Z)/2,
        // |0><1| = (X+iY)/2, |1><0| = (X-iY)/2. Coin picks the first or second.
        let mut phase = C1;
        for (k_pos, slot) in word.iter_mut().enumerate() {
            let q = m - 1 - k_pos;
            let (a, b) = ((x >> q) & 1, (y >> q) & 1);
            let second = rng.random::<bool>();
            let (p, ph) = match (a, b, second) {
                (0, 0, false) | (1, 1, false) => (b'I', C1),
                (0, 0, true) => (b'Z', C1),
                (1, 1, true) => (b'Z', -C1),
                (_, _, false) => (b'X', C1),
                (0, 1, true) => (b'Y', I1),
                _ => (b'Y', -I1),
            };
            *slot = p;
            phase *= ph;
        }
        let w = std::str::from_utf8(&word).expect("ascii word");
        let outcome = measure_pm(&mut rng, pauli_expectation(w, state)?);
        sum += k.signum() * phase.re * outcome;
    }
    Ok(lambda * sum / sampler.shots as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::sim::GateOp;

    fn words(d: &PauliDecomposition) -> Vec<(&str, f64)> {
        d.terms.iter().map(|t| (t.word.as_str(), t.coeff.re)).collect()
    }

    #[test]
    fn identity_and_projector() {
        let d = pauli_decompose(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(words(&d), vec![("I", 1.0)]);
        let d = pauli_decompose(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(words(&d), vec![("I", 0.5), ("Z", 0.5)]);
        assert_abs_diff_eq!(d.lambda_total, 1.0);
    }

    #[test]
    fn word_order_is_most_significant_first() {
        // Z on qubit 1 only: diag(1, 1, -1, -1).
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0]));
        let d = pauli_decompose(&m).unwrap();
        assert_eq!(words(&d), vec![("ZI", 1.0)]);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(pauli_decompose(&DMatrix::identity(3, 3)).is_err());
        assert!(pauli_decompose(&DMatrix::identity(32, 32)).is_err());
        assert!(pauli_decompose(&DMatrix::zeros(2, 4)).is_err());
    }

    #[test]
    fn expectation_matches_dense_product() {
        let s = Statevector::zero(2)
            .unwrap()
            .apply_gate(&GateOp::Ry { qubit: 0, angle: 0.7 })
            .unwrap()
            .apply_gate(&GateOp::H { qubit: 1 })
            .unwrap()
            .apply_gate(&GateOp::Rz { qubit: 1, angle: 0.4 })
            .unwrap();
        let v = nalgebra::DVector::from_column_slice(s.amplitudes());
        for w in ["XY", "YZ", "ZX", "YY", "IX"] {
            let dense = (v.adjoint() * pauli_matrix(w).unwrap() * &v)[(0, 0)];
            assert_abs_diff_eq!(pauli_expectation(w, &s).unwrap(), dense.re, epsilon = 1e-12);
            assert_abs_diff_eq!(dense.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sampled_identity_and_eigenstate_are_exact() {
        let s = Statevector::zero(1).unwrap();
        let sampler = ShotSampler::new(5, 37).unwrap();
        let d = pauli_decompose(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(sampled_expectation(&d, &s, &sampler).unwrap(), 1.0);
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let d = pauli_decompose(&z).unwrap();
        assert_eq!(sampled_expectation(&d, &s, &sampler).unwrap(), 1.0);
    }

    #[test]
    fn json_shape() {
        let d = pauli_decompose(&DMatrix::identity(2, 2)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&d.terms).unwrap();
        assert_eq!(v, serde_json::json!([{ "coeff": [1.0, 0.0], "word": "I" }]));
    }
}
