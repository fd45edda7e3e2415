//! Multiclass decisions from class ensembles of encoded training states,
//! and the amplitude-amplified readout circuit.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{structural, validation, Result};
use crate::feature_map::{argmax, label_qubit_count, FeatureMap};
use crate::sim::{grover_reflections, prepare_real_amplitudes, Circuit, GateOp, ShotSampler, Statevector};

/// Weighted set of encoded training states for one class, `ρ^j = Σ p_i |ψ_i><ψ_i|`.
#[derive(Clone, Debug)]
pub struct ClassEnsemble {
    pub class_index: usize,
    pub weights: Vec<f64>,
    pub members: Vec<Vec<f64>>,
    pub states: Vec<Statevector>,
}

impl ClassEnsemble {
    /// Encodes `members` with `map`. Weights default to uniform.
    pub fn encode(
        class_index: usize,
        members: Vec<Vec<f64>>,
        weights: Option<Vec<f64>>,
        map: &impl FeatureMap,
        theta: &[f64],
    ) -> Result<Self> {
        if members.is_empty() {
            return Err(validation(format!("class {class_index} has no ensemble members")));
        }
        let weights = weights.unwrap_or_else(|| vec![1.0 / members.len() as f64; members.len()]);
        if weights.len() != members.len() {
            return Err(structural("ensemble weights and members differ in length"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(validation("ensemble weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(validation(format!("ensemble weights sum to {total}")));
        }
        let states = members.iter().map(|x| map.encode(x, theta)).collect::<Result<Vec<_>>>()?;
        Ok(ClassEnsemble { class_index, weights, members, states })
    }

    /// `Tr(ρ^j ρ)` for the pure state `ρ = |x><x|`.
    pub fn trace_overlap(&self, x: &Statevector) -> Result<f64> {
        let mut t = 0.0;
        for (p, s) in self.weights.iter().zip(&self.states) {
            t += p * s.overlap(x)?.norm_sqr();
        }
        Ok(t)
    }
}

pub fn trace_values(ensembles: &[ClassEnsemble], x: &Statevector) -> Result<Vec<f64>> {
    ensembles.iter().map(|e| e.trace_overlap(x)).collect()
}

/// One-vs-one: the class with the largest `Tr(ρ^j ρ)`. Ties go to the
/// earliest ensemble.
pub fn ensemble_decision_ovo(ensembles: &[ClassEnsemble], x: &Statevector) -> Result<usize> {
    if ensembles.is_empty() {
        return Err(validation("no ensembles"));
    }
    let t = trace_values(ensembles, x)?;
    Ok(ensembles[argmax(&t)].class_index)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OvrDecision {
    pub class_index: usize,
    /// `Tr(ρ^j ρ) - mean_{k≠j} Tr(ρ^k ρ)` per class.
    pub values: Vec<f64>,
    /// False when no class or several classes were positive; the argmax
    /// was used instead.
    pub unique: bool,
}

/// One-vs-rest: picks the class whose score against the mean of the others
/// is positive. Falls back to the argmax.
pub fn ensemble_decision_ovr(ensembles: &[ClassEnsemble], x: &Statevector) -> Result<OvrDecision> {
    if ensembles.len() < 2 {
        return Err(validation("one-vs-rest needs at least two classes"));
    }
    let t = trace_values(ensembles, x)?;
    let l = t.len() as f64;
    let total: f64 = t.iter().sum();
    let values: Vec<f64> = t.iter().map(|&v| v - (total - v) / (l - 1.0)).collect();
    let positive: Vec<usize> = (0..values.len()).filter(|&j| values[j] > 0.0).collect();
    let unique = positive.len() == 1;
    let pick = if unique { positive[0] } else { argmax(&values) };
    Ok(OvrDecision { class_index: ensembles[pick].class_index, values, unique })
}

/// Qubit roles in the readout register.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadoutRegisterMap {
    pub n_classes: usize,
    pub slots: usize,
    pub label_qubits: Vec<usize>,
    pub index_qubits: Vec<usize>,
    /// Reserved; stays in |0>.
    pub work_qubit: usize,
    pub feature_qubits: Vec<usize>,
}

impl ReadoutRegisterMap {
    /// Label qubits lowest, then index, work and feature qubits. With 3
    /// classes, 4 slots and 4 features this is a 9-qubit register.
    pub fn standard(n_classes: usize, slots: usize, n_features: usize) -> Result<Self> {
        if n_classes == 0 || slots == 0 || n_features == 0 {
            return Err(validation("readout register needs classes, slots and features"));
        }
        if !slots.is_power_of_two() {
            return Err(validation(format!("slot count {slots} is not a power of two")));
        }
        let nl = label_qubit_count(n_classes);
        let ni = slots.trailing_zeros() as usize;
        let map = ReadoutRegisterMap {
            n_classes,
            slots,
            label_qubits: (0..nl).collect(),
            index_qubits: (nl..nl + ni).collect(),
            work_qubit: nl + ni,
            feature_qubits: (nl + ni + 1..nl + ni + 1 + n_features).collect(),
        };
        map.validate()?;
        Ok(map)
    }

    pub fn width(&self) -> usize {
        self.label_qubits.len() + self.index_qubits.len() + 1 + self.feature_qubits.len()
    }

    pub fn validate(&self) -> Result<()> {
        let mut all: Vec<usize> = self.label_qubits.clone();
        all.extend(&self.index_qubits);
        all.push(self.work_qubit);
        all.extend(&self.feature_qubits);
        let mut sorted = all.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != all.len() || sorted.last() != Some(&(all.len() - 1)) {
            return Err(structural("readout qubit roles must partition 0..width"));
        }
        if 1 << self.label_qubits.len() < self.n_classes {
            return Err(structural("too few label qubits"));
        }
        if 1 << self.index_qubits.len() != self.slots {
            return Err(structural("index qubits do not match the slot count"));
        }
        Ok(())
    }

    /// Basis index of `|j>` on the label qubits with everything else at 0.
    pub fn label_basis_state(&self, j: usize) -> usize {
        self.label_qubits
            .iter()
            .enumerate()
            .fold(0, |acc, (k, &q)| acc | (((j >> k) & 1) << q))
    }

    /// Maps each label basis state to index `j` and back; None when that is
    /// already the identity.
    pub fn swap_permutation(&self) -> Option<Vec<usize>> {
        let dim = 1usize << self.width();
        let mut mapping: Vec<usize> = (0..dim).collect();
        let mut moved = false;
        for j in 0..self.n_classes {
            let from = self.label_basis_state(j);
            if from != j {
                mapping.swap(from, j);
                moved = true;
            }
        }
        moved.then_some(mapping)
    }

    /// Images under the swap of the label basis states: `0..n_classes`.
    pub fn target_basis_states(&self) -> Vec<usize> {
        (0..self.n_classes).collect()
    }
}

/// Readout state `S U_x† U_L |0>` and the circuit preparing it.
#[derive(Clone, Debug)]
pub struct ReadoutInstance {
    pub register: ReadoutRegisterMap,
    pub state: Statevector,
    pub preparer: Circuit,
}

impl ReadoutInstance {
    pub fn target_amplitudes(&self) -> Vec<Complex64> {
        self.register.target_basis_states().iter().map(|&t| self.state.amplitudes()[t]).collect()
    }
}

/// Builds the readout state for trial point `x`. Class `j` lands on basis
/// state `j` with amplitude `(1/√L) Σ_i √p_i <ψ(x)|ψ(x_i^j)> / √M`, where
/// `M` is the slot count. Empty slots carry zero weight.
pub fn build_readout_state(
    ensembles: &[ClassEnsemble],
    map: &impl FeatureMap,
    theta: &[f64],
    x: &[f64],
) -> Result<ReadoutInstance> {
    if ensembles.is_empty() {
        return Err(validation("no ensembles"));
    }
    let largest = ensembles.iter().map(|e| e.members.len()).max().unwrap_or(1);
    let register = ReadoutRegisterMap::standard(ensembles.len(), largest.next_power_of_two(), map.n_qubits())?;
    build_readout_state_with(ensembles, map, theta, x, &register)
}

pub fn build_readout_state_with(
    ensembles: &[ClassEnsemble],
    map: &impl FeatureMap,
    theta: &[f64],
    x: &[f64],
    register: &ReadoutRegisterMap,
) -> Result<ReadoutInstance> {
    register.validate()?;
    if ensembles.len() != register.n_classes {
        return Err(structural("ensemble count differs from the register's class count"));
    }
    if register.feature_qubits.len() != map.n_qubits() {
        return Err(structural("feature register width differs from the feature map"));
    }
    if ensembles.iter().any(|e| e.members.len() > register.slots) {
        return Err(structural("an ensemble has more members than index slots"));
    }
    let width = register.width();
    let l = register.n_classes;
    let nl = register.label_qubits.len();
    let encode = |v: &[f64]| -> Result<Circuit> { map.circuit(v, theta)?.remapped(&register.feature_qubits, width) };

    let mut u_l = Circuit::new(width);
    let mut label_amps = vec![0.0; 1 << nl];
    for a in label_amps.iter_mut().take(l) {
        *a = 1.0 / (l as f64).sqrt();
    }
    u_l.append(&prepare_real_amplitudes(width, &register.label_qubits, &label_amps)?);
    if !register.index_qubits.is_empty() {
        let branches = (0..1 << nl)
            .map(|j| match ensembles.get(j) {
                Some(e) => {
                    let mut amps = vec![0.0; register.slots];
                    for (a, p) in amps.iter_mut().zip(&e.weights) {
                        *a = p.sqrt();
                    }
                    prepare_real_amplitudes(width, &register.index_qubits, &amps)
                }
                None => Ok(Circuit::new(width)),
            })
            .collect::<Result<Vec<_>>>()?;
        u_l.multiplex(register.label_qubits.clone(), branches);
    }
    let mut controls = register.label_qubits.clone();
    controls.extend(&register.index_qubits);
    let branches = (0..1usize << controls.len())
        .map(|c| {
            let (j, i) = (c & ((1 << nl) - 1), c >> nl);
            match ensembles.get(j).and_then(|e| e.members.get(i)) {
                Some(member) => encode(member),
                None => Ok(Circuit::new(width)),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    u_l.multiplex(controls, branches);

    let mut u_x = Circuit::new(width);
    for &q in &register.index_qubits {
        u_x.push(GateOp::H { qubit: q });
    }
    u_x.append(&encode(x)?);

    let mut preparer = u_l.then(&u_x.inverse());
    if let Some(mapping) = register.swap_permutation() {
        preparer.push(GateOp::Permutation { qubits: (0..width).collect(), mapping });
    }
    let state = Statevector::zero(width)?.apply_circuit(&preparer)?;
    Ok(ReadoutInstance { register: register.clone(), state, preparer })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutReport {
    pub iterations: usize,
    pub amplitudes_before: Vec<Complex64>,
    pub amplitudes_after: Vec<Complex64>,
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    /// Shot frequencies of each target basis state after the rounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled: Option<Vec<f64>>,
    /// Argmax of the sampled frequencies if present, else of `after`.
    pub predicted: usize,
}

/// Runs `iterations` amplification rounds marking the target basis states.
pub fn grover_readout(
    instance: &ReadoutInstance,
    iterations: usize,
    sampler: Option<&ShotSampler>,
) -> Result<ReadoutReport> {
    let targets = instance.register.target_basis_states();
    let mut marked = vec![false; instance.state.dim()];
    for &t in &targets {
        marked[t] = true;
    }
    let out = grover_reflections(&instance.state, &marked, &instance.preparer, iterations)?;
    let amplitudes_before = instance.target_amplitudes();
    let amplitudes_after: Vec<Complex64> = targets.iter().map(|&t| out.amplitudes()[t]).collect();
    let before: Vec<f64> = amplitudes_before.iter().map(|a| a.norm_sqr()).collect();
    let after: Vec<f64> = amplitudes_after.iter().map(|a| a.norm_sqr()).collect();
    let sampled = sampler.map(|s| {
        let counts = s.sample_counts(&out.probabilities());
        targets.iter().map(|&t| counts[t] as f64 / s.shots as f64).collect::<Vec<f64>>()
    });
    let predicted = argmax(sampled.as_deref().unwrap_or(&after));
    Ok(ReadoutReport { iterations, amplitudes_before, amplitudes_after, before, after, sampled, predicted })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRange {
    pub r_min: usize,
    pub r_max: usize,
    pub amplitude_lower: f64,
    pub amplitude_upper: f64,
}

/// Rounds worth trying when the marked amplitude lies in
/// `[1/√(5M), 1/√3]`: from 1 to `⌊(√(5M)·π - 1)/2⌋`.
pub fn estimate_iteration_range(slots: usize) -> Result<IterationRange> {
    if slots == 0 {
        return Err(validation("slot count must be positive"));
    }
    let m = slots as f64;
    let r_max = (((5.0 * m).sqrt() * std::f64::consts::PI - 1.0) / 2.0).floor() as usize;
    Ok(IterationRange {
        r_min: 1,
        r_max: r_max.max(1),
        amplitude_lower: 1.0 / (5.0 * m).sqrt(),
        amplitude_upper: 1.0 / 3f64.sqrt(),
    })
}

/// One classified trial point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutRecord {
    pub sample_id: usize,
    pub true_class: usize,
    pub report: ReadoutReport,
}

impl ReadoutRecord {
    pub fn correct(&self) -> bool {
        self.report.predicted == self.true_class
    }

    /// Probability of the true class after amplification, sampled if shots were taken.
    pub fn true_class_after(&self) -> f64 {
        self.report.sampled.as_ref().unwrap_or(&self.report.after)[self.true_class]
    }
}

pub fn write_readout_csv(records: &[ReadoutRecord], out: &mut impl Write) -> Result<()> {
    let l = records.first().map_or(0, |r| r.report.before.len());
    let mut header = vec!["sample_id".to_string(), "true_class".to_string()];
    header.extend((0..l).map(|j| format!("p{j}_before")));
    header.extend((0..l).map(|j| format!("p{j}_after")));
    header.extend(["predicted".to_string(), "correct".to_string()]);
    writeln!(out, "{}", header.join(","))?;
    for r in records {
        let after = r.report.sampled.as_ref().unwrap_or(&r.report.after);
        let mut row = vec![r.sample_id.to_string(), r.true_class.to_string()];
        row.extend(r.report.before.iter().map(|p| p.to_string()));
        row.extend(after.iter().map(|p| p.to_string()));
        row.extend([r.report.predicted.to_string(), r.correct().to_string()]);
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Per-class statistics of the true-class probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutClassSummary {
    pub class_index: usize,
    pub before_max: f64,
    pub before_min: f64,
    pub before_mean: f64,
    pub after_max: f64,
    pub after_min: f64,
    pub after_mean: f64,
    /// Correct, with true-class probability above 0.5 after amplification.
    pub above_half: usize,
    pub below_half: usize,
    pub errors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutSummary {
    pub classes: Vec<ReadoutClassSummary>,
    pub success_rate: f64,
    pub above_half: usize,
}

pub fn summarize_readout(records: &[ReadoutRecord], n_classes: usize) -> ReadoutSummary {
    let stats = |v: &[f64]| -> (f64, f64, f64) {
        if v.is_empty() {
            return (0.0, 0.0, 0.0);
        }
        let max = v.iter().copied().fold(f64::MIN, f64::max);
        let min = v.iter().copied().fold(f64::MAX, f64::min);
        (max, min, v.iter().sum::<f64>() / v.len() as f64)
    };
    let classes: Vec<ReadoutClassSummary> = (0..n_classes)
        .map(|c| {
            let mine: Vec<&ReadoutRecord> = records.iter().filter(|r| r.true_class == c).collect();
            let before: Vec<f64> = mine.iter().map(|r| r.report.before[c]).collect();
            let after: Vec<f64> = mine.iter().map(|r| r.true_class_after()).collect();
            let (bmax, bmin, bmean) = stats(&before);
            let (amax, amin, amean) = stats(&after);
            let errors = mine.iter().filter(|r| !r.correct()).count();
            let above_half = mine.iter().filter(|r| r.correct() && r.true_class_after() > 0.5).count();
            ReadoutClassSummary {
                class_index: c,
                before_max: bmax,
                before_min: bmin,
                before_mean: bmean,
                after_max: amax,
                after_min: amin,
                after_mean: amean,
                above_half,
                below_half: mine.len() - errors - above_half,
                errors,
            }
        })
        .collect();
    let correct = records.iter().filter(|r| r.correct()).count();
    ReadoutSummary {
        above_half: classes.iter().map(|c| c.above_half).sum(),
        success_rate: if records.is_empty() { 0.0 } else { correct as f64 / records.len() as f64 },
        classes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_map::{Entangler, FeatureMapLayout, RotationPattern};
    use approx::assert_abs_diff_eq;

    fn layout() -> FeatureMapLayout {
        FeatureMapLayout::new(4, 1, RotationPattern::Y, Entangler::LinearCz)
    }

    fn ensembles(map: &FeatureMapLayout, theta: &[f64]) -> Vec<ClassEnsemble> {
        let classes = [
            vec![vec![0.1, 0.2, 0.3, 0.4], vec![0.2, 0.2, 0.3, 0.5], vec![0.1, 0.3, 0.2, 0.4], vec![0.0, 0.2, 0.4, 0.4]],
            vec![vec![1.5, 1.2, 1.0, 1.4], vec![1.4, 1.3, 1.1, 1.5], vec![1.6, 1.1, 1.0, 1.3], vec![1.5, 1.2, 0.9, 1.4]],
            vec![vec![2.9, 2.5, 2.8, 2.7], vec![3.0, 2.6, 2.7, 2.9], vec![2.8, 2.4, 2.9, 2.6], vec![2.9, 2.6, 2.8, 2.8]],
        ];
        classes
            .into_iter()
            .enumerate()
            .map(|(j, m)| ClassEnsemble::encode(j, m, None, map, theta).unwrap())
            .collect()
    }

    #[test]
    fn standard_register_is_nine_qubits() {
        let r = ReadoutRegisterMap::standard(3, 4, 4).unwrap();
        assert_eq!(r.width(), 9);
        assert_eq!(r.label_qubits, vec![0, 1]);
        assert_eq!(r.index_qubits, vec![2, 3]);
        assert_eq!(r.work_qubit, 4);
        assert_eq!(r.feature_qubits, vec![5, 6, 7, 8]);
        assert!(r.swap_permutation().is_none());
        assert!(ReadoutRegisterMap::standard(3, 3, 4).is_err());
    }

    #[test]
    fn readout_amplitudes_match_direct_formula() {
        let map = layout();
        let theta: Vec<f64> = (0..map.parameter_count()).map(|k| 0.3 * k as f64).collect();
        let ens = ensembles(&map, &theta);
        let x = [1.4, 1.25, 1.05, 1.45];
        let inst = build_readout_state(&ens, &map, &theta, &x).unwrap();
        let xs = map.encode(&x, &theta).unwrap();
        for (j, e) in ens.iter().enumerate() {
            let expect: Complex64 = e
                .weights
                .iter()
                .zip(&e.states)
                .map(|(p, s)| xs.overlap(s).unwrap() * p.sqrt())
                .sum::<Complex64>()
                / (3f64.sqrt() * 2.0);
            let got = inst.state.amplitudes()[j];
            assert_abs_diff_eq!((got - expect).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn identical_members_give_one_third() {
        let map = layout();
        let theta = vec![0.2; map.parameter_count()];
        let x = vec![0.5, 1.0, 1.5, 2.0];
        let ens: Vec<ClassEnsemble> = (0..3)
            .map(|j| {
                let m = if j == 0 { vec![x.clone(); 4] } else { vec![vec![3.0, 0.1, 2.9, 0.2]; 4] };
                ClassEnsemble::encode(j, m, None, &map, &theta).unwrap()
            })
            .collect();
        let r = grover_readout(&build_readout_state(&ens, &map, &theta, &x).unwrap(), 0, None).unwrap();
        assert_abs_diff_eq!(r.before[0], 1.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn amplification_preserves_ratios_and_raises_mass() {
        let map = layout();
        let theta: Vec<f64> = (0..map.parameter_count()).map(|k| 0.1 * k as f64).collect();
        let ens = ensembles(&map, &theta);
        let inst = build_readout_state(&ens, &map, &theta, &[0.2, 0.25, 0.3, 0.45]).unwrap();
        let r = grover_readout(&inst, 1, None).unwrap();
        let before: f64 = r.before.iter().sum();
        let after: f64 = r.after.iter().sum();
        assert!(before < 0.5);
        assert!(after > before);
        let scale = r.amplitudes_after[0] / r.amplitudes_before[0];
        for (a, b) in r.amplitudes_after.iter().zip(&r.amplitudes_before) {
            assert_abs_diff_eq!((a - b * scale).norm(), 0.0, epsilon = 1e-9);
        }
        assert_eq!(r.predicted, 0);
    }

    #[test]
    fn sampled_readout_is_reproducible() {
        let map = layout();
        let theta = vec![0.0; map.parameter_count()];
        let ens = ensembles(&map, &theta);
        let inst = build_readout_state(&ens, &map, &theta, &[2.9, 2.5, 2.8, 2.8]).unwrap();
        let s = ShotSampler::new(5, 10_000).unwrap();
        let a = grover_readout(&inst, 1, Some(&s)).unwrap();
        let b = grover_readout(&inst, 1, Some(&s)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.predicted, 2);
        for (f, p) in a.sampled.unwrap().iter().zip(&a.after) {
            assert!((f - p).abs() < 0.02);
        }
    }

    #[test]
    fn iteration_range_examples() {
        assert_eq!(estimate_iteration_range(4).unwrap().r_max, 6);
        assert_eq!(estimate_iteration_range(1).unwrap().r_max, 3);
        assert_eq!(estimate_iteration_range(4).unwrap().r_min, 1);
        assert!(estimate_iteration_range(0).is_err());
    }

    #[test]
    fn ovo_and_ovr_pick_the_nearby_class() {
        let map = layout();
        let theta = vec![0.0; map.parameter_count()];
        let ens = ensembles(&map, &theta);
        let x = map.encode(&[1.5, 1.2, 1.0, 1.4], &theta).unwrap();
        assert_eq!(ensemble_decision_ovo(&ens, &x).unwrap(), 1);
        let d = ensemble_decision_ovr(&ens, &x).unwrap();
        assert_eq!(d.class_index, 1);
        assert!(d.unique);
    }

    #[test]
    fn summary_counts() {
        let rec = |true_class, after: Vec<f64>| ReadoutRecord {
            sample_id: 0,
            true_class,
            report: ReadoutReport {
                iterations: 1,
                amplitudes_before: vec![],
                amplitudes_after: vec![],
                before: vec![0.3, 0.1],
                predicted: argmax(&after),
                after,
                sampled: None,
            },
        };
        let s = summarize_readout(&[rec(0, vec![0.9, 0.1]), rec(0, vec![0.4, 0.3]), rec(1, vec![0.6, 0.2])], 2);
        assert_eq!(s.above_half, 1);
        assert_eq!(s.classes[0].below_half, 1);
        assert_eq!(s.classes[1].errors, 1);
        assert_abs_diff_eq!(s.success_rate, 2.0 / 3.0);
        let mut buf = Vec::new();
        write_readout_csv(&[rec(0, vec![0.9, 0.1])], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sample_id,true_class,p0_before,p1_before,p0_after,p1_after,predicted,correct\n"));
    }
}
