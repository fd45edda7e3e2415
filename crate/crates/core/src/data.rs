//! Tabular datasets: CSV ingestion, normalization, stratified splits and
//! JSON persistence.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{structural, validation, Error, Result};
use crate::sim::derive_seed;

/// The bundled IRIS measurements (150 rows, 4 features, 3 species).
pub const IRIS_CSV: &str = include_str!("../data/iris.csv");
pub const IRIS_SHA256: &str = "e404da8a0348eaa780e968c07a8f4dc90fe90eea54ddceeb5b444ce0caae8d30";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum NormalizationMethod {
    MinMax { lo: f64, hi: f64 },
    Zscore,
}

impl NormalizationMethod {
    /// Min-max to `[0, π]`, the default for angle encoding.
    pub fn angle() -> Self {
        NormalizationMethod::MinMax { lo: 0.0, hi: std::f64::consts::PI }
    }
}

/// Fitted per-feature transform: `(min, max)` for min-max, `(mean, std)`
/// for z-score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub method: NormalizationMethod,
    pub params: Vec<(f64, f64)>,
}

impl Normalization {
    pub fn fit(features: &[Vec<f64>], method: NormalizationMethod) -> Result<Self> {
        let n = features.first().map(|r| r.len()).ok_or_else(|| validation("empty dataset"))?;
        let m = features.len() as f64;
        let params = (0..n)
            .map(|c| {
                let col = features.iter().map(|r| r[c]);
                match method {
                    NormalizationMethod::MinMax { .. } => {
                        col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
                    }
                    NormalizationMethod::Zscore => {
                        let mean = col.clone().sum::<f64>() / m;
                        let var = col.map(|v| (v - mean).powi(2)).sum::<f64>() / m;
                        (mean, var.sqrt())
                    }
                }
            })
            .collect::<Vec<_>>();
        for (c, &(a, b)) in params.iter().enumerate() {
            let constant = match method {
                NormalizationMethod::MinMax { .. } => a == b,
                NormalizationMethod::Zscore => b == 0.0,
            };
            if constant {
                log::warn!("feature {c} is constant; mapping it to the centre of the target range");
            }
        }
        Ok(Normalization { method, params })
    }

    /// Transforms one row. Under min-max, values outside the fitted range
    /// are clamped and the second return value is true.
    pub fn apply(&self, x: &[f64]) -> Result<(Vec<f64>, bool)> {
        if x.len() != self.params.len() {
            return Err(structural(format!("row has {} features, transform expects {}", x.len(), self.params.len())));
        }
        let mut clamped = false;
        let out = x
            .iter()
            .zip(&self.params)
            .map(|(&v, &(a, b))| match self.method {
                NormalizationMethod::MinMax { lo, hi } => {
                    if a == b {
                        return (lo + hi) / 2.0;
                    }
                    let t = (v - a) / (b - a);
                    if !(0.0..=1.0).contains(&t) {
                        clamped = true;
                    }
                    let t = t.clamp(0.0, 1.0);
                    if t == 1.0 { hi } else { lo + t * (hi - lo) }
                }
                NormalizationMethod::Zscore => {
                    if b == 0.0 { 0.0 } else { (v - a) / b }
                }
            })
            .collect();
        Ok((out, clamped))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Original label value for each class index.
    pub class_names: Vec<String>,
    #[serde(default)]
    pub normalization: Option<Normalization>,
    pub provenance: Provenance,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads a headed CSV whose columns are all numeric except `label_column`.
/// Labels that are all integers are ordered numerically; otherwise classes
/// follow first appearance.
pub fn load_csv(path: &Path, label_column: &str) -> Result<LabeledDataset> {
    let bytes = std::fs::read(path)?;
    parse_csv(&bytes, &path.display().to_string(), label_column)
}

/// The bundled IRIS table, unnormalized.
pub fn iris() -> Result<LabeledDataset> {
    parse_csv(IRIS_CSV.as_bytes(), "builtin:iris.csv", "species")
}

pub fn parse_csv(bytes: &[u8], source: &str, label_column: &str) -> Result<LabeledDataset> {
    let parse_err = |line: usize, message: String| Error::Parse { path: source.to_string(), line, message };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(bytes);
    let headers = reader.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| validation(format!("no column named {label_column:?} in {source}")))?;
    let feature_names: Vec<String> =
        headers.iter().enumerate().filter(|(i, _)| *i != label_idx).map(|(_, h)| h.to_string()).collect();
    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| parse_err(line, e.to_string()))?;
        if record.len() != headers.len() {
            return Err(parse_err(line, format!("expected {} fields, found {}", headers.len(), record.len())));
        }
        let mut x = Vec::with_capacity(feature_names.len());
        for (i, field) in record.iter().enumerate() {
            if i == label_idx {
                continue;
            }
            let v: f64 = field.parse().map_err(|_| parse_err(line, format!("{field:?} is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("non-finite value {field:?}")));
            }
            x.push(v);
        }
        features.push(x);
        raw_labels.push(record[label_idx].to_string());
    }
    if features.is_empty() {
        return Err(validation(format!("{source} has no data rows")));
    }
    let mut class_names: Vec<String> = Vec::new();
    for l in &raw_labels {
        if !class_names.contains(l) {
            class_names.push(l.clone());
        }
    }
    if class_names.iter().all(|l| l.parse::<i64>().is_ok()) {
        class_names.sort_by_key(|l| l.parse::<i64>().unwrap_or(0));
    }
    let index: HashMap<&str, usize> = class_names.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let labels = raw_labels.iter().map(|l| index[l.as_str()]).collect();
    Ok(LabeledDataset {
        feature_names,
        features,
        labels,
        class_names,
        normalization: None,
        provenance: Provenance { source: source.to_string(), sha256: sha256_hex(bytes) },
    })
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == class).collect()
    }

    pub fn rows(&self, indices: &[usize]) -> Vec<Vec<f64>> {
        indices.iter().map(|&i| self.features[i].clone()).collect()
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Fits `method` on the dataset and transforms every row.
pub fn normalize(dataset: &LabeledDataset, method: NormalizationMethod) -> Result<LabeledDataset> {
    let norm = Normalization::fit(&dataset.features, method)?;
    let features = dataset
        .features
        .iter()
        .map(|x| norm.apply(x).map(|(v, _)| v))
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledDataset { features, normalization: Some(norm), ..dataset.clone() })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRecord {
    /// Training indices, one list per class.
    pub train: Vec<Vec<usize>>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub description: String,
}

impl SplitRecord {
    /// All training indices, class by class.
    pub fn train_indices(&self) -> Vec<usize> {
        self.train.iter().flatten().copied().collect()
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Draws `per_class_counts[j]` samples of class `j` without replacement;
/// everything else is test data. Class `j` is shuffled with a seed derived
/// from `(seed, j)`.
pub fn sample_split(dataset: &LabeledDataset, per_class_counts: &[usize], seed: u64) -> Result<SplitRecord> {
    if per_class_counts.len() != dataset.n_classes() {
        return Err(validation(format!(
            "{} counts for {} classes",
            per_class_counts.len(),
            dataset.n_classes()
        )));
    }
    let mut train = Vec::with_capacity(per_class_counts.len());
    for (j, &count) in per_class_counts.iter().enumerate() {
        let mut members = dataset.class_indices(j);
        if count > members.len() {
            return Err(validation(format!("class {j} has {} samples, {count} requested", members.len())));
        }
        members.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, &[j as u64])));
        let mut chosen = members[..count].to_vec();
        chosen.sort_unstable();
        train.push(chosen);
    }
    let in_train: std::collections::HashSet<usize> = train.iter().flatten().copied().collect();
    let test: Vec<usize> = (0..dataset.len()).filter(|i| !in_train.contains(i)).collect();
    if test.is_empty() {
        log::warn!("split leaves no test samples");
    }
    let description = format!("per-class counts {per_class_counts:?}, seed {seed}");
    Ok(SplitRecord { train, test, seed, description })
}

/// `+1` for `positive_class`, `-1` otherwise.
pub fn binary_relabel(labels: &[usize], positive_class: usize) -> Vec<i8> {
    labels.iter().map(|&l| if l == positive_class { 1 } else { -1 }).collect()
}
