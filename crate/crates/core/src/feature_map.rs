//! Trainable feature maps with data re-uploading, their training losses and
//! the explicit (measure-the-label-qubit) classifier.
//!
//! A layout encodes `x` into `n_qubits` qubits, one feature per qubit. The
//! circuit is an initial rotation block followed by `layers` repetitions of
//! {entangler, rotation block}. Every rotation angle is `x[q] + θ`.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{structural, validation, Result};
use crate::sim::{Circuit, GateOp, Statevector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationPattern {
    /// One RY per qubit per block.
    Y,
    /// RZ, RY, RZ per qubit per block, each with its own parameter.
    Zyz,
}

impl RotationPattern {
    pub fn rotations_per_block(self) -> usize {
        match self {
            RotationPattern::Y => 1,
            RotationPattern::Zyz => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entangler {
    None,
    LinearCz,
    LinearCnot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineRule {
    /// angle = x[q] + θ
    #[default]
    Additive,
}

impl CombineRule {
    fn angle(self, x: f64, theta: f64) -> f64 {
        match self {
            CombineRule::Additive => x + theta,
        }
    }
}

/// Anything that turns a feature vector and parameters into a circuit.
pub trait FeatureMap {
    fn n_qubits(&self) -> usize;
    fn parameter_count(&self) -> usize;
    fn circuit(&self, x: &[f64], theta: &[f64]) -> Result<Circuit>;

    fn encode(&self, x: &[f64], theta: &[f64]) -> Result<Statevector> {
        Statevector::zero(self.n_qubits())?.apply_circuit(&self.circuit(x, theta)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMapLayout {
    pub n_qubits: usize,
    pub layers: usize,
    pub rotation_pattern: RotationPattern,
    pub entangler: Entangler,
    #[serde(default)]
    pub combine_rule: CombineRule,
}

impl FeatureMapLayout {
    pub fn new(
        n_qubits: usize,
        layers: usize,
        rotation_pattern: RotationPattern,
        entangler: Entangler,
    ) -> Self {
        FeatureMapLayout { n_qubits, layers, rotation_pattern, entangler, combine_rule: CombineRule::Additive }
    }

    fn check_inputs(&self, x: &[f64], theta: &[f64]) -> Result<()> {
        if x.len() != self.n_qubits {
            return Err(validation(format!(
                "feature vector has {} entries, layout expects {}",
                x.len(),
                self.n_qubits
            )));
        }
        if theta.len() != self.parameter_count() {
            return Err(validation(format!(
                "parameter vector has {} entries, layout expects {}",
                theta.len(),
                self.parameter_count()
            )));
        }
        Ok(())
    }
}

impl FeatureMap for FeatureMapLayout {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn parameter_count(&self) -> usize {
        self.n_qubits * self.rotation_pattern.rotations_per_block() * (self.layers + 1)
    }

    fn circuit(&self, x: &[f64], theta: &[f64]) -> Result<Circuit> {
        self.check_inputs(x, theta)?;
        let mut c = Circuit::new(self.n_qubits);
        let per_block = self.n_qubits * self.rotation_pattern.rotations_per_block();
        for block in 0..=self.layers {
            if block > 0 {
                push_entangler(&mut c, self.n_qubits, self.entangler);
            }
            let params = &theta[block * per_block..(block + 1) * per_block];
            push_rotations(&mut c, self.rotation_pattern, params, |q, t| {
                self.combine_rule.angle(x[q], t)
            });
        }
        Ok(c)
    }
}

fn push_entangler(c: &mut Circuit, n: usize, entangler: Entangler) {
    for q in 0..n.saturating_sub(1) {
        match entangler {
            Entangler::None => {}
            Entangler::LinearCz => {
                c.push(GateOp::Cz { a: q, b: q + 1 });
            }
            Entangler::LinearCnot => {
                c.push(GateOp::Cnot { control: q, target: q + 1 });
            }
        }
    }
}

fn push_rotations(
    c: &mut Circuit,
    pattern: RotationPattern,
    params: &[f64],
    angle: impl Fn(usize, f64) -> f64,
) {
    let n = c.n_qubits();
    match pattern {
        RotationPattern::Y => {
            for q in 0..n {
                c.push(GateOp::Ry { qubit: q, angle: angle(q, params[q]) });
            }
        }
        RotationPattern::Zyz => {
            for q in 0..n {
                let p = &params[3 * q..3 * q + 3];
                c.push(GateOp::Rz { qubit: q, angle: angle(q, p[0]) });
                c.push(GateOp::Ry { qubit: q, angle: angle(q, p[1]) });
                c.push(GateOp::Rz { qubit: q, angle: angle(q, p[2]) });
            }
        }
    }
}

/// The static map `U_φ H U_φ H` with `U_φ = ⊗ RZ(x_q)`, followed by a
/// trainable ZYZ circuit `W(θ)` of `layers` {entangler, rotation} blocks.
/// The parameters do not touch the data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineMap {
    pub n_qubits: usize,
    pub layers: usize,
    pub entangler: Entangler,
}

impl BaselineMap {
    pub fn static_circuit(&self, x: &[f64]) -> Result<Circuit> {
        if x.len() != self.n_qubits {
            return Err(validation(format!(
                "feature vector has {} entries, map expects {}",
                x.len(),
                self.n_qubits
            )));
        }
        let mut c = Circuit::new(self.n_qubits);
        for _ in 0..2 {
            for q in 0..self.n_qubits {
                c.push(GateOp::H { qubit: q });
            }
            for (q, &xq) in x.iter().enumerate() {
                c.push(GateOp::Rz { qubit: q, angle: xq });
            }
        }
        Ok(c)
    }
}

impl FeatureMap for BaselineMap {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn parameter_count(&self) -> usize {
        self.n_qubits * 3 * (self.layers + 1)
    }

    fn circuit(&self, x: &[f64], theta: &[f64]) -> Result<Circuit> {
        if theta.len() != self.parameter_count() {
            return Err(validation(format!(
                "parameter vector has {} entries, map expects {}",
                theta.len(),
                self.parameter_count()
            )));
        }
        let mut c = self.static_circuit(x)?;
        let per_block = self.n_qubits * 3;
        for block in 0..=self.layers {
            if block > 0 {
                push_entangler(&mut c, self.n_qubits, self.entangler);
            }
            let params = &theta[block * per_block..(block + 1) * per_block];
            push_rotations(&mut c, RotationPattern::Zyz, params, |_, t| t);
        }
        Ok(c)
    }
}

/// `U_φ H U_φ H |0>` for the baseline map.
pub fn static_baseline_map(x: &[f64]) -> Result<Statevector> {
    let map = BaselineMap { n_qubits: x.len(), layers: 0, entangler: Entangler::None };
    Statevector::zero(x.len())?.apply_circuit(&map.static_circuit(x)?)
}

/// Serializable choice between the two map families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MapSpec {
    Trainable(FeatureMapLayout),
    Baseline(BaselineMap),
}

impl FeatureMap for MapSpec {
    fn n_qubits(&self) -> usize {
        match self {
            MapSpec::Trainable(m) => m.n_qubits(),
            MapSpec::Baseline(m) => m.n_qubits(),
        }
    }

    fn parameter_count(&self) -> usize {
        match self {
            MapSpec::Trainable(m) => m.parameter_count(),
            MapSpec::Baseline(m) => m.parameter_count(),
        }
    }

    fn circuit(&self, x: &[f64], theta: &[f64]) -> Result<Circuit> {
        match self {
            MapSpec::Trainable(m) => m.circuit(x, theta),
            MapSpec::Baseline(m) => m.circuit(x, theta),
        }
    }
}

/// Angles in radians, persisted as a plain JSON array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn zeros(len: usize) -> Self {
        ParameterVector(vec![0.0; len])
    }

    /// Every value folded into [0, 2π).
    pub fn canonicalized(&self) -> Self {
        ParameterVector(
            self.0
                .iter()
                .map(|v| {
                    let r = v.rem_euclid(TAU);
                    if r >= TAU { 0.0 } else { r }
                })
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Number of label qubits needed for `n_classes` labels.
pub fn label_qubit_count(n_classes: usize) -> usize {
    (usize::BITS - n_classes.saturating_sub(1).leading_zeros()).max(1) as usize
}

/// Label qubits are the lowest qubits; class `j` is the pattern `j` on them.
pub fn label_qubits(n_classes: usize) -> Vec<usize> {
    (0..label_qubit_count(n_classes)).collect()
}

/// |y_j> as a full register state with the non-label qubits at |0>.
pub fn label_state(class_index: usize, n_classes: usize, n_qubits: usize) -> Result<Statevector> {
    if class_index >= n_classes {
        return Err(validation(format!("class {class_index} out of range for {n_classes} classes")));
    }
    if label_qubit_count(n_classes) > n_qubits {
        return Err(structural(format!("{n_classes} classes need more than {n_qubits} qubits")));
    }
    Statevector::basis(n_qubits, class_index)
}

/// Probability that the label qubits read `class_index`.
pub fn label_probability(state: &Statevector, class_index: usize, n_classes: usize) -> Result<f64> {
    let marginal = state.marginal_probabilities(&label_qubits(n_classes))?;
    Ok(marginal[class_index])
}

/// `E(θ) = 1 - (1/L) Σ_j (1/M_j) Σ_i |<ψ(x_i^j, θ)|y_j>|²`, where the
/// overlap with |y_j> is taken on the label qubits only.
pub fn clustering_loss(
    map: &impl FeatureMap,
    theta: &[f64],
    features: &[Vec<f64>],
    labels: &[usize],
) -> Result<f64> {
    if features.len() != labels.len() {
        return Err(structural("features and labels differ in length"));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    if n_classes == 0 {
        return Err(validation("empty training set"));
    }
    let mut sums = vec![0.0; n_classes];
    let mut counts = vec![0usize; n_classes];
    for (x, &y) in features.iter().zip(labels) {
        let state = map.encode(x, theta)?;
        sums[y] += label_probability(&state, y, n_classes)?;
        counts[y] += 1;
    }
    if let Some(j) = counts.iter().position(|&c| c == 0) {
        return Err(validation(format!("class {j} has no training samples")));
    }
    let mean: f64 = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).sum::<f64>() / n_classes as f64;
    Ok((1.0 - mean).clamp(0.0, 1.0))
}

/// `1 - mean_i Prob(qubit 0 = (1 + a_i)/2)` for labels `a_i ∈ {+1, -1}`.
pub fn compact_binary_loss(
    map: &impl FeatureMap,
    theta: &[f64],
    features: &[Vec<f64>],
    labels: &[i8],
) -> Result<f64> {
    if features.len() != labels.len() {
        return Err(structural("features and labels differ in length"));
    }
    if features.is_empty() {
        return Err(validation("empty training set"));
    }
    let mut total = 0.0;
    for (x, &a) in features.iter().zip(labels) {
        let bit = binary_label_bit(a)?;
        let state = map.encode(x, theta)?;
        total += state.marginal_probabilities(&[0])?[bit];
    }
    Ok((1.0 - total / features.len() as f64).clamp(0.0, 1.0))
}

pub(crate) fn binary_label_bit(a: i8) -> Result<usize> {
    match a {
        1 => Ok(1),
        -1 => Ok(0),
        other => Err(validation(format!("binary label must be +1 or -1, got {other}"))),
    }
}

/// Reads qubit 0: +1 when `P(1) >= P(0)`, so exact ties go to +1.
pub fn explicit_classify_binary(map: &impl FeatureMap, theta: &[f64], x: &[f64]) -> Result<i8> {
    let p = map.encode(x, theta)?.marginal_probabilities(&[0])?;
    Ok(if p[1] >= p[0] { 1 } else { -1 })
}

/// Argmax over the first `n_classes` label patterns; ties go to the
/// smallest class index.
pub fn explicit_classify_multiclass(
    map: &impl FeatureMap,
    theta: &[f64],
    x: &[f64],
    n_classes: usize,
) -> Result<usize> {
    let marginal = map.encode(x, theta)?.marginal_probabilities(&label_qubits(n_classes))?;
    Ok(argmax(&marginal[..n_classes]))
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn y_layout(n: usize, layers: usize, ent: Entangler) -> FeatureMapLayout {
        FeatureMapLayout::new(n, layers, RotationPattern::Y, ent)
    }

    #[test]
    fn parameter_count_matches_layout() {
        assert_eq!(y_layout(4, 2, Entangler::LinearCz).parameter_count(), 12);
        let zyz = FeatureMapLayout::new(4, 2, RotationPattern::Zyz, Entangler::LinearCz);
        assert_eq!(zyz.parameter_count(), 36);
        assert_eq!(BaselineMap { n_qubits: 4, layers: 1, entangler: Entangler::LinearCz }.parameter_count(), 24);
    }

    #[test]
    fn zero_input_encodes_to_zero_state() {
        let layout = y_layout(4, 0, Entangler::None);
        let s = layout.encode(&[0.0; 4], &[0.0; 4]).unwrap();
        assert_abs_diff_eq!(s.probabilities()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn pi_on_first_feature_flips_qubit_zero() {
        let layout = y_layout(4, 0, Entangler::None);
        let s = layout.encode(&[PI, 0.0, 0.0, 0.0], &[0.0; 4]).unwrap();
        assert_abs_diff_eq!(s.probabilities()[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_validation_error() {
        let layout = y_layout(2, 1, Entangler::LinearCz);
        assert!(matches!(layout.encode(&[0.0; 3], &[0.0; 4]), Err(crate::Error::Validation(_))));
        assert!(matches!(layout.encode(&[0.0; 2], &[0.0; 3]), Err(crate::Error::Validation(_))));
    }

    fn ry(t: f64) -> DMatrix<f64> {
        let (s, c) = (t / 2.0).sin_cos();
        DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
    }

    #[test]
    fn one_layer_cz_matches_dense_product() {
        // Oracle: explicit 4x4 matrices. Qubit 0 is the least-significant
        // bit, so a gate on qubit 0 is I ⊗ G and on qubit 1 is G ⊗ I.
        let x = [FRAC_PI_2, FRAC_PI_2];
        let layer = ry(x[1]).kronecker(&ry(x[0]));
        let cz = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 1.0, 1.0, -1.0]));
        let u = &layer * &cz * &layer;
        let expected = u.column(0);
        let s = y_layout(2, 1, Entangler::LinearCz).encode(&x, &[0.0; 4]).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(s.amplitudes()[i].re, expected[i], epsilon = 1e-14);
            assert_abs_diff_eq!(s.amplitudes()[i].im, 0.0, epsilon = 1e-14);
        }
        // Hand evaluation: |++> -> CZ -> (1,1,1,-1)/2 -> RY(π/2)⊗RY(π/2).
        let frozen = [-0.5, 0.5, 0.5, 0.5];
        for (a, f) in s.amplitudes().iter().zip(frozen) {
            assert_abs_diff_eq!(a.re, f, epsilon = 1e-14);
        }
    }

    #[test]
    fn static_baseline_zero_vector_is_identity() {
        let s = static_baseline_map(&[0.0; 3]).unwrap();
        assert_abs_diff_eq!(s.probabilities()[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn static_baseline_single_feature_matches_matrix_product() {
        // Oracle on one qubit: RZ(a) H RZ(a) H |0>.
        let a = 0.7f64;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (re0, im0) = ((-a / 2.0).cos(), (-a / 2.0).sin());
        let (re1, im1) = ((a / 2.0).cos(), (a / 2.0).sin());
        // H|0> = (h, h); RZ: (h e0, h e1); H: (h²(e0+e1), h²(e0-e1)); RZ again.
        let e0 = num_complex::Complex64::new(re0, im0);
        let e1 = num_complex::Complex64::new(re1, im1);
        let v0 = e0 * (h * h) * (e0 + e1);
        let v1 = e1 * (h * h) * (e0 - e1);
        let s = static_baseline_map(&[a, 0.0]).unwrap();
        assert_abs_diff_eq!((s.amplitudes()[0] - v0).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((s.amplitudes()[1] - v1).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.probabilities()[2] + s.probabilities()[3], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn label_states_are_orthogonal() {
        for n_classes in [2, 3, 4] {
            for i in 0..n_classes {
                for j in 0..n_classes {
                    let a = label_state(i, n_classes, 4).unwrap();
                    let b = label_state(j, n_classes, 4).unwrap();
                    let ov = a.overlap(&b).unwrap().norm();
                    assert_eq!(ov, if i == j { 1.0 } else { 0.0 });
                }
            }
        }
        assert_eq!(label_qubits(3), vec![0, 1]);
        assert_eq!(label_qubits(2), vec![0]);
    }

    /// A map whose output state is fixed, to pin loss values directly.
    struct Fixed(Vec<Statevector>);
    impl FeatureMap for Fixed {
        fn n_qubits(&self) -> usize {
            self.0[0].n_qubits()
        }
        fn parameter_count(&self) -> usize {
            0
        }
        fn circuit(&self, _: &[f64], _: &[f64]) -> Result<Circuit> {
            unreachable!()
        }
        fn encode(&self, x: &[f64], _: &[f64]) -> Result<Statevector> {
            Ok(self.0[x[0] as usize].clone())
        }
    }

    #[test]
    fn clustering_loss_examples() {
        let perfect = Fixed(vec![Statevector::basis(2, 0).unwrap(), Statevector::basis(2, 1).unwrap()]);
        let loss = clustering_loss(&perfect, &[], &[vec![0.0], vec![1.0]], &[0, 1]).unwrap();
        assert_abs_diff_eq!(loss, 0.0);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let half = Fixed(vec![Statevector::from_real(&[h, h]).unwrap()]);
        let loss = clustering_loss(&half, &[], &[vec![0.0]], &[0]).unwrap();
        assert_abs_diff_eq!(loss, 0.5, epsilon = 1e-15);

        let err = clustering_loss(&perfect, &[], &[vec![0.0]], &[1]).unwrap_err();
        assert!(matches!(err, crate::Error::Validation(_)));
    }

    #[test]
    fn compact_loss_examples() {
        let one = Fixed(vec![Statevector::basis(2, 1).unwrap()]);
        assert_abs_diff_eq!(compact_binary_loss(&one, &[], &[vec![0.0]], &[1]).unwrap(), 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = Fixed(vec![Statevector::from_real(&[h, h, 0.0, 0.0]).unwrap()]);
        for a in [1, -1] {
            let l = compact_binary_loss(&plus, &[], &[vec![0.0]], &[a]).unwrap();
            assert_abs_diff_eq!(l, 0.5, epsilon = 1e-15);
        }
        assert!(compact_binary_loss(&plus, &[], &[vec![0.0]], &[2]).is_err());
    }

    #[test]
    fn compact_loss_equals_clustering_loss_on_one_qubit() {
        let layout = y_layout(1, 2, Entangler::None);
        let xs = vec![vec![0.3], vec![1.1], vec![2.0], vec![2.9]];
        let signed = [1i8, -1, 1, -1];
        let idx: Vec<usize> = signed.iter().map(|&a| if a == 1 { 1 } else { 0 }).collect();
        for k in 0..10 {
            let theta = [0.37 * k as f64, 1.3 - 0.2 * k as f64, 0.9 * k as f64];
            let a = compact_binary_loss(&layout, &theta, &xs, &signed).unwrap();
            let b = clustering_loss(&layout, &theta, &xs, &idx).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn explicit_classifier_reads_qubit_zero() {
        let one = Fixed(vec![Statevector::basis(2, 1).unwrap()]);
        assert_eq!(explicit_classify_binary(&one, &[], &[0.0]).unwrap(), 1);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let tie = Fixed(vec![Statevector::from_real(&[h, h]).unwrap()]);
        assert_eq!(explicit_classify_binary(&tie, &[], &[0.0]).unwrap(), 1);
        let zero = Fixed(vec![Statevector::basis(2, 2).unwrap()]);
        assert_eq!(explicit_classify_binary(&zero, &[], &[0.0]).unwrap(), -1);
        assert_eq!(explicit_classify_multiclass(&zero, &[], &[0.0], 3).unwrap(), 2);
    }

    #[test]
    fn reuploading_gives_higher_degree_response() {
        // <Z>(x) for a 1-qubit, 1-layer Y map is cos(2x + c): a degree-1
        // trigonometric fit leaves a residual, a degree-2 fit does not.
        let layout = y_layout(1, 1, Entangler::None);
        let theta = [0.4, 1.1];
        let xs: Vec<f64> = (0..5).map(|k| 0.3 + 0.55 * k as f64).collect();
        let z: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let p = layout.encode(&[x], &theta).unwrap().probabilities();
                p[0] - p[1]
            })
            .collect();
        let fit = |degree: usize| -> f64 {
            let cols = 1 + 2 * degree;
            let a = DMatrix::from_fn(5, cols, |r, c| {
                let x = xs[r];
                if c == 0 {
                    1.0
                } else {
                    let k = c.div_ceil(2) as f64;
                    if c % 2 == 1 { (k * x).cos() } else { (k * x).sin() }
                }
            });
            let b = DVector::from_vec(z.clone());
            let sol = a.clone().svd(true, true).solve(&b, 1e-12).unwrap();
            (a * sol - b).norm()
        };
        assert!(fit(1) > 1e-3, "degree-1 residual {}", fit(1));
        assert!(fit(2) < 1e-9, "degree-2 residual {}", fit(2));
    }

    #[test]
    fn encode_is_bitwise_deterministic() {
        let layout = FeatureMapLayout::new(3, 2, RotationPattern::Zyz, Entangler::LinearCnot);
        let theta: Vec<f64> = (0..27).map(|i| 0.1 * i as f64).collect();
        let a = layout.encode(&[0.2, 1.4, 2.2], &theta).unwrap();
        let b = layout.encode(&[0.2, 1.4, 2.2], &theta).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn canonicalized_parameters_in_range() {
        let p = ParameterVector(vec![-0.5, 7.0, TAU, 0.0]).canonicalized();
        assert!(p.0.iter().all(|v| (0.0..TAU).contains(v)));
        assert_abs_diff_eq!(p.0[0], TAU - 0.5, epsilon = 1e-15);
    }

    #[test]
    fn layout_json_round_trip() {
        let layout = FeatureMapLayout::new(4, 2, RotationPattern::Zyz, Entangler::LinearCz);
        let json = serde_json::to_string(&layout).unwrap();
        assert!(json.contains("\"rotation_pattern\":\"zyz\""));
        assert_eq!(serde_json::from_str::<FeatureMapLayout>(&json).unwrap(), layout);
    }
}
