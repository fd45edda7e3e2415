//! The IRIS experiments and verification runs, as plain functions over a
//! normalized dataset. File output lives in [`crate::cli`].

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{binary_relabel, sample_split, LabeledDataset, SplitRecord};
use crate::error::{validation, Error, Result};
use crate::feature_map::{
    clustering_loss, compact_binary_loss, explicit_classify_binary, BaselineMap, Entangler, FeatureMap,
    FeatureMapLayout, MapSpec, RotationPattern,
};
use crate::kernel::{cross_kernel, encode_all, kernel_from_states, svm_matrix_from_entries, KernelMatrix, KernelMode};
use crate::multiclass::{build_readout_state, grover_readout, ClassEnsemble, ReadoutRecord};
use crate::optimizer::{minimize, multistart_seed, multistart_start, OptimizationProblem, OptimizationTrace};
use crate::sim::{derive_seed, ShotSampler};
use crate::svm::{
    distinguishability_histogram, estimate_sign_test, lsqsvm_solve, train_svqsvm, AlphaModel, DistinguishabilityHistogram, SvqsvmConfig,
};

/// Reference success rates (%) for the explicit comparison, rows in
/// [`MapVariant::ALL`] order, columns r = 0, 1, 2.
pub const EXPLICIT_REFERENCE: [[f64; 3]; 3] = [[68.0, 81.6, 86.0], [83.2, 86.0, 91.8], [63.6, 84.4, 89.8]];
/// Reference ensemble accuracies (%) for r = 0, 1, 2.
pub const ENSEMBLE_REFERENCE: [f64; 3] = [92.0, 91.8, 94.8];
/// Reference readout success rates (%) for r = 0, 1, 2.
pub const READOUT_REFERENCE: [f64; 3] = [95.3, 93.3, 94.7];
/// Reference counts of correct samples read above 0.5, for r = 0 and r = 2.
pub const READOUT_ABOVE_HALF_REFERENCE: [usize; 2] = [81, 136];

/// The three maps compared on the binary task.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapVariant {
    TqfmY,
    TqfmZyz,
    QfmZyz,
}

impl MapVariant {
    pub const ALL: [MapVariant; 3] = [MapVariant::TqfmY, MapVariant::TqfmZyz, MapVariant::QfmZyz];

    pub fn name(self) -> &'static str {
        match self {
            MapVariant::TqfmY => "TQFM(y)",
            MapVariant::TqfmZyz => "TQFM(zyz)",
            MapVariant::QfmZyz => "QFM(zyz)",
        }
    }

    pub fn map(self, n_qubits: usize, layers: usize, entangler: Entangler) -> MapSpec {
        match self {
            MapVariant::TqfmY => MapSpec::Trainable(FeatureMapLayout::new(n_qubits, layers, RotationPattern::Y, entangler)),
            MapVariant::TqfmZyz => {
                MapSpec::Trainable(FeatureMapLayout::new(n_qubits, layers, RotationPattern::Zyz, entangler))
            }
            MapVariant::QfmZyz => MapSpec::Baseline(BaselineMap { n_qubits, layers, entangler }),
        }
    }
}

/// Box for trainable angles: two full periods, so every optimum has an
/// interior copy.
pub fn parameter_problem(dimension: usize, budget: usize) -> OptimizationProblem {
    OptimizationProblem::uniform_box(dimension, -2.0 * PI, 2.0 * PI, budget).with_initial_step(0.5)
}

/// Per-class mean kernel values, `blocks[a][b]` over classes `a` and `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringReport {
    pub before: Vec<Vec<f64>>,
    pub after: Vec<Vec<f64>>,
}

impl ClusteringReport {
    /// Every intra-class mean is at least each of its inter-class means.
    pub fn intra_dominates(&self) -> bool {
        let b = &self.after;
        (0..b.len()).all(|a| (0..b.len()).all(|c| a == c || b[a][a] >= b[a][c]))
    }
}

#[derive(Clone, Debug)]
pub struct TqfmTraining {
    pub layout: FeatureMapLayout,
    pub split: SplitRecord,
    pub trace: OptimizationTrace,
    pub theta: Vec<f64>,
    pub initial_loss: f64,
    pub kernel_before: KernelMatrix,
    pub kernel_after: KernelMatrix,
    pub clustering: ClusteringReport,
}

/// Trains `layout` on the clustering loss from θ = 0 with a stratified
/// split of `per_class` samples per class.
pub fn train_tqfm(
    ds: &LabeledDataset,
    layout: FeatureMapLayout,
    per_class: usize,
    split_seed: u64,
    budget: usize,
    seed: u64,
) -> Result<TqfmTraining> {
    let split = sample_split(ds, &vec![per_class; ds.n_classes()], split_seed)?;
    let idx = split.train_indices();
    let features = ds.rows(&idx);
    let labels: Vec<usize> = idx.iter().map(|&i| ds.labels[i]).collect();
    let dim = layout.parameter_count();
    let problem = parameter_problem(dim, budget);
    let trace = minimize_loss(&problem, |t| clustering_loss(&layout, t, &features, &labels), &vec![0.0; dim], seed)?;
    let theta = trace.best_params.clone();
    let initial_loss = clustering_loss(&layout, &vec![0.0; dim], &features, &labels)?;
    let kernel_before = kernel_from_states(&encode_all(&layout, &vec![0.0; dim], &features)?, 2, KernelMode::Exact)?;
    let kernel_after = kernel_from_states(&encode_all(&layout, &theta, &features)?, 2, KernelMode::Exact)?;
    let blocks: Vec<Vec<usize>> = {
        let mut start = 0;
        split
            .train
            .iter()
            .map(|c| {
                let b = (start..start + c.len()).collect();
                start += c.len();
                b
            })
            .collect()
    };
    let means = |k: &KernelMatrix| -> Vec<Vec<f64>> {
        blocks.iter().map(|a| blocks.iter().map(|b| k.block_mean(a, b)).collect()).collect()
    };
    let clustering = ClusteringReport { before: means(&kernel_before), after: means(&kernel_after) };
    Ok(TqfmTraining { layout, split, trace, theta, initial_loss, kernel_before, kernel_after, clustering })
}

/// Runs [`minimize`], surfacing the first loss error instead of a NaN abort.
fn minimize_loss(
    problem: &OptimizationProblem,
    loss: impl Fn(&[f64]) -> Result<f64>,
    start: &[f64],
    seed: u64,
) -> Result<OptimizationTrace> {
    let mut failure: Option<Error> = None;
    let trace = minimize(
        problem,
        |t| {
            loss(t).unwrap_or_else(|e| {
                failure.get_or_insert(e);
                f64::NAN
            })
        },
        start,
        seed,
    );
    match failure {
        Some(e) => Err(e),
        None => trace,
    }
}

/// Binary task between two classes: the first is +1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryTask {
    pub positive: usize,
    pub negative: usize,
    pub per_class: usize,
    pub entangler: Entangler,
}

impl Default for BinaryTask {
    fn default() -> Self {
        BinaryTask { positive: 1, negative: 2, per_class: 5, entangler: Entangler::LinearCz }
    }
}

impl BinaryTask {
    fn split(&self, ds: &LabeledDataset, seed: u64) -> Result<SplitRecord> {
        let mut counts = vec![0; ds.n_classes()];
        if self.positive >= counts.len() || self.negative >= counts.len() || self.positive == self.negative {
            return Err(validation("binary task needs two distinct existing classes"));
        }
        counts[self.positive] = self.per_class;
        counts[self.negative] = self.per_class;
        sample_split(ds, &counts, seed)
    }

    fn members(&self, ds: &LabeledDataset) -> Vec<usize> {
        (0..ds.len()).filter(|&i| ds.labels[i] == self.positive || ds.labels[i] == self.negative).collect()
    }

    fn sign(&self, class: usize) -> i8 {
        if class == self.positive { 1 } else { -1 }
    }
}

/// One trained cell of the explicit comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplicitRun {
    pub variant: MapVariant,
    pub layers: usize,
    pub seed: u64,
    pub loss: f64,
    pub success_rate: f64,
    pub theta: Vec<f64>,
    pub split: SplitRecord,
}

/// Trains `variant` with `layers` from a uniform random start and reads
/// qubit 0 on every sample of both classes.
pub fn explicit_run(
    ds: &LabeledDataset,
    task: &BinaryTask,
    variant: MapVariant,
    layers: usize,
    budget: usize,
    seed: u64,
) -> Result<ExplicitRun> {
    let split = task.split(ds, seed)?;
    let idx = split.train_indices();
    let features = ds.rows(&idx);
    let labels: Vec<i8> = idx.iter().map(|&i| task.sign(ds.labels[i])).collect();
    let map = variant.map(ds.n_features(), layers, task.entangler);
    let problem = parameter_problem(map.parameter_count(), budget);
    let start = multistart_start(&problem, seed, 0);
    let trace = minimize_loss(
        &problem,
        |t| compact_binary_loss(&map, t, &features, &labels),
        &start,
        multistart_seed(seed, 0),
    )?;
    let theta = trace.best_params;
    let all = task.members(ds);
    let mut correct = 0;
    for &i in &all {
        if explicit_classify_binary(&map, &theta, &ds.features[i])? == task.sign(ds.labels[i]) {
            correct += 1;
        }
    }
    Ok(ExplicitRun {
        variant,
        layers,
        seed,
        loss: trace.best_value,
        success_rate: 100.0 * correct as f64 / all.len() as f64,
        theta,
        split,
    })
}

/// Every variant × layer × seed, in that nesting order.
pub fn explicit_compare(
    ds: &LabeledDataset,
    task: &BinaryTask,
    layers: &[usize],
    seeds: &[u64],
    budget: usize,
) -> Result<Vec<ExplicitRun>> {
    let cells: Vec<(MapVariant, usize, u64)> = MapVariant::ALL
        .iter()
        .flat_map(|&v| layers.iter().flat_map(move |&r| seeds.iter().map(move |&s| (v, r, s))))
        .collect();
    cells.par_iter().map(|&(v, r, s)| explicit_run(ds, task, v, r, budget, s)).collect()
}

/// Mean and sample standard deviation of one comparison cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub variant: MapVariant,
    pub layers: usize,
    pub seeds: usize,
    pub success_mean: f64,
    pub success_std: f64,
    pub loss_mean: f64,
    pub loss_std: f64,
    pub reference: Option<f64>,
    /// `|mean - reference| > 5` points.
    pub deviates: bool,
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Aggregates runs per (variant, layers) in variant-major order. Cells
/// without runs get NaN statistics and are flagged.
pub fn summarize_explicit(runs: &[ExplicitRun], layers: &[usize]) -> Vec<TableCell> {
    let mut cells = Vec::new();
    for (vi, &variant) in MapVariant::ALL.iter().enumerate() {
        for &r in layers {
            let mine: Vec<&ExplicitRun> = runs.iter().filter(|x| x.variant == variant && x.layers == r).collect();
            let (sm, ss) = mean_std(&mine.iter().map(|x| x.success_rate).collect::<Vec<_>>());
            let (lm, ls) = mean_std(&mine.iter().map(|x| x.loss).collect::<Vec<_>>());
            let reference = EXPLICIT_REFERENCE[vi].get(r).copied();
            let deviates = mine.is_empty() || reference.is_some_and(|p| (sm - p).abs() > 5.0);
            cells.push(TableCell {
                variant,
                layers: r,
                seeds: mine.len(),
                success_mean: sm,
                success_std: ss,
                loss_mean: lm,
                loss_std: ls,
                reference,
                deviates,
            });
        }
    }
    cells
}

/// Accuracy of the trace-argmax ensemble built from the first `size`
/// training samples of each class of a TQFM(y) run.
pub fn ensemble_accuracy(ds: &LabeledDataset, task: &BinaryTask, run: &ExplicitRun, size: usize) -> Result<f64> {
    let map = run.variant.map(ds.n_features(), run.layers, task.entangler);
    let ensembles = [task.positive, task.negative]
        .iter()
        .map(|&c| {
            let members: Vec<Vec<f64>> = run.split.train[c].iter().take(size).map(|&i| ds.features[i].clone()).collect();
            ClassEnsemble::encode(c, members, None, &map, &run.theta)
        })
        .collect::<Result<Vec<_>>>()?;
    let all = task.members(ds);
    let mut correct = 0;
    for &i in &all {
        let x = map.encode(&ds.features[i], &run.theta)?;
        if crate::multiclass::ensemble_decision_ovo(&ensembles, &x)? == ds.labels[i] {
            correct += 1;
        }
    }
    Ok(100.0 * correct as f64 / all.len() as f64)
}

/// SV-QSVM against the least-squares baseline on one split.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SvmComparison {
    pub split: SplitRecord,
    pub model: AlphaModel,
    pub sv_values: Vec<f64>,
    pub ls_values: Vec<f64>,
    pub sv_accuracy: f64,
    pub ls_accuracy: f64,
    pub sv_histogram: DistinguishabilityHistogram,
    pub ls_histogram: DistinguishabilityHistogram,
    /// Shot estimates of both decision values, when shots were requested.
    pub sampled: Option<SampledComparison>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampledComparison {
    pub shots: u64,
    pub sv_values: Vec<f64>,
    pub ls_values: Vec<f64>,
    pub sv_accuracy: f64,
    pub ls_accuracy: f64,
    pub sv_histogram: DistinguishabilityHistogram,
    pub ls_histogram: DistinguishabilityHistogram,
}

fn sign_accuracy(values: &[f64], truth: &[i8]) -> f64 {
    let hits = values.iter().zip(truth).filter(|(v, &y)| (if **v >= 0.0 { 1 } else { -1 }) == y).count();
    100.0 * hits as f64 / values.len() as f64
}

/// Fraction of values with `|v| < width`.
pub fn small_fraction(values: &[f64], width: f64) -> f64 {
    values.iter().filter(|v| v.abs() < width).count() as f64 / values.len().max(1) as f64
}

/// Settings for [`svm_comparison`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmComparisonSettings {
    pub counts: Vec<usize>,
    pub positive: usize,
    pub gamma: f64,
    #[serde(rename = "C")]
    pub penalty: f64,
    pub svqsvm: SvqsvmConfig,
    /// Shots per decision value; 0 skips the sampled estimates.
    pub shots: u64,
}

impl Default for SvmComparisonSettings {
    fn default() -> Self {
        SvmComparisonSettings {
            counts: vec![4, 2, 2],
            positive: 0,
            gamma: crate::kernel::DEFAULT_GAMMA,
            penalty: crate::svm::DEFAULT_PENALTY,
            svqsvm: SvqsvmConfig::default(),
            shots: 4095,
        }
    }
}

/// Trains both classifiers with zero bias on a stratified split (class
/// `positive` is +1) and evaluates every sample of the dataset.
pub fn svm_comparison(
    ds: &LabeledDataset,
    map: &MapSpec,
    theta: &[f64],
    settings: &SvmComparisonSettings,
    seed: u64,
) -> Result<SvmComparison> {
    let SvmComparisonSettings { counts, positive, gamma, penalty, .. } = settings;
    let (positive, gamma, penalty) = (*positive, *gamma, *penalty);
    let split = sample_split(ds, counts, seed)?;
    let idx = split.train_indices();
    let labels = binary_relabel(&idx.iter().map(|&i| ds.labels[i]).collect::<Vec<_>>(), positive);
    let train_states = encode_all(map, theta, &ds.rows(&idx))?;
    let k = kernel_from_states(&train_states, 2, KernelMode::Exact)?;
    let svm = svm_matrix_from_entries(&k.entries, &labels, gamma)?;
    let mut model = train_svqsvm(&svm, penalty, &settings.svqsvm, derive_seed(seed, &[1]))?;
    model.feature_map = Some(*map);
    model.theta = Some(crate::feature_map::ParameterVector(theta.to_vec()));
    let ls = lsqsvm_solve(&k.entries, &labels, gamma)?;
    let trial = cross_kernel(&train_states, &encode_all(map, theta, &ds.features)?, 2)?;
    let truth = binary_relabel(&ds.labels, positive);
    let mut sv_values = Vec::with_capacity(ds.len());
    let mut ls_values = Vec::with_capacity(ds.len());
    for r in 0..trial.nrows() {
        let row: Vec<f64> = trial.row(r).iter().copied().collect();
        sv_values.push(model.decision_value(&row)?);
        ls_values.push(ls.decision_value(&row, false));
    }
    let sampled = if settings.shots > 0 {
        let estimate = |values: &[f64], stream: u64| -> Result<Vec<f64>> {
            values
                .iter()
                .enumerate()
                .map(|(i, &f)| {
                    Ok(estimate_sign_test(f, &ShotSampler::new(derive_seed(seed, &[2, stream, i as u64]), settings.shots)?))
                })
                .collect()
        };
        let sv = estimate(&sv_values, 0)?;
        let ls = estimate(&ls_values, 1)?;
        Some(SampledComparison {
            shots: settings.shots,
            sv_accuracy: sign_accuracy(&sv, &truth),
            ls_accuracy: sign_accuracy(&ls, &truth),
            sv_histogram: distinguishability_histogram(&sv, 0.01)?,
            ls_histogram: distinguishability_histogram(&ls, 0.01)?,
            sv_values: sv,
            ls_values: ls,
        })
    } else {
        None
    };
    Ok(SvmComparison {
        split,
        sv_accuracy: sign_accuracy(&sv_values, &truth),
        ls_accuracy: sign_accuracy(&ls_values, &truth),
        sv_histogram: distinguishability_histogram(&sv_values, 0.01)?,
        ls_histogram: distinguishability_histogram(&ls_values, 0.01)?,
        model,
        sv_values,
        ls_values,
        sampled,
    })
}

/// Readout of every sample with ensembles of `size` training samples per
/// class taken from `training`.
pub fn multiclass_readout(
    ds: &LabeledDataset,
    training: &TqfmTraining,
    size: usize,
    iterations: usize,
    shots: u64,
    seed: u64,
) -> Result<Vec<ReadoutRecord>> {
    let map = training.layout;
    let ensembles = training
        .split
        .train
        .iter()
        .enumerate()
        .map(|(c, members)| {
            let m: Vec<Vec<f64>> = members.iter().take(size).map(|&i| ds.features[i].clone()).collect();
            ClassEnsemble::encode(c, m, None, &map, &training.theta)
        })
        .collect::<Result<Vec<_>>>()?;
    (0..ds.len())
        .into_par_iter()
        .map(|i| {
            let inst = build_readout_state(&ensembles, &map, &training.theta, &ds.features[i])?;
            let sampler = if shots > 0 { Some(ShotSampler::new(derive_seed(seed, &[i as u64]), shots)?) } else { None };
            let report = grover_readout(&inst, iterations, sampler.as_ref())?;
            Ok(ReadoutRecord { sample_id: i, true_class: ds.labels[i], report })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{iris, normalize, NormalizationMethod};

    #[test]
    fn spread_statistics() {
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert!((m - 2.0).abs() < 1e-15 && (s - 1.0).abs() < 1e-15);
        assert!(mean_std(&[]).0.is_nan());
        assert_eq!(small_fraction(&[0.01, -0.04, 0.05, 0.5], 0.05), 0.5);
        assert_eq!(sign_accuracy(&[0.2, -0.1, 0.0], &[1, -1, -1]), 100.0 * 2.0 / 3.0);
    }

    #[test]
    fn intra_dominance() {
        let after = vec![vec![0.9, 0.2], vec![0.2, 0.8]];
        assert!(ClusteringReport { before: after.clone(), after }.intra_dominates());
        let after = vec![vec![0.3, 0.4], vec![0.4, 0.8]];
        assert!(!ClusteringReport { before: after.clone(), after }.intra_dominates());
    }

    #[test]
    fn explicit_runs_are_deterministic() {
        let ds = normalize(&iris().unwrap(), NormalizationMethod::angle()).unwrap();
        let task = BinaryTask::default();
        let a = explicit_run(&ds, &task, MapVariant::TqfmY, 0, 60, 5).unwrap();
        let b = explicit_run(&ds, &task, MapVariant::TqfmY, 0, 60, 5).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.success_rate, b.success_rate);
        assert!(a.split.train.iter().all(|c| c.is_empty() || c.len() == task.per_class));
        let cells = summarize_explicit(&[a], &[0, 1]);
        assert_eq!(cells.len(), 6);
        assert!(cells[1].success_mean.is_nan() && cells[1].deviates);
    }

    #[test]
    fn readout_uses_training_split() {
        let ds = normalize(&iris().unwrap(), NormalizationMethod::angle()).unwrap();
        let layout = FeatureMapLayout::new(4, 0, RotationPattern::Y, Entangler::LinearCz);
        let t = train_tqfm(&ds, layout, 4, 1, 20, 1).unwrap();
        assert!(t.trace.best_value <= t.initial_loss);
        let records = multiclass_readout(&ds, &t, 4, 1, 0, 1).unwrap();
        assert_eq!(records.len(), ds.len());
        for r in &records {
            let total: f64 = r.report.after.iter().sum();
            assert!(total <= 1.0 + 1e-12);
        }
    }
}
