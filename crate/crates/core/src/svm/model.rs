use std::path::Path;

use serde::{Deserialize, Serialize};

use super::variational::check_support;
use crate::error::{structural, validation, Result};
use crate::feature_map::{argmax, MapSpec, ParameterVector};
use crate::kernel::check_binary_labels;
use crate::sim::ShotSampler;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    Variational,
    Direct,
}

/// Trained dual weights plus everything needed to classify.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaModel {
    pub mode: AlphaMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<ParameterVector>,
    /// Register slot to sample index (None for padding). Empty in direct mode.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub register: Vec<Option<usize>>,
    pub alpha: Vec<f64>,
    pub labels: Vec<i8>,
    pub support_mask: Vec<bool>,
    pub m_s: usize,
    pub bias: f64,
    pub gamma: f64,
    #[serde(rename = "C")]
    pub penalty: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    pub power: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_map: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ParameterVector>,
}

/// Result of thresholding measured frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportExtraction {
    pub mask: Vec<bool>,
    pub m_s: usize,
    pub frequencies: Vec<f64>,
    pub fallback: bool,
}

impl AlphaModel {
    /// Wraps nonnegative weights, e.g. a rescaled classical solution. Every
    /// sample starts as a support vector.
    pub fn direct(alpha: Vec<f64>, labels: Vec<i8>, gamma: f64, penalty: f64) -> Result<Self> {
        check_binary_labels(&labels)?;
        if alpha.len() != labels.len() {
            return Err(structural("α and labels differ in length"));
        }
        if alpha.iter().any(|a| !(*a >= 0.0)) {
            return Err(validation("α must be nonnegative"));
        }
        let m = alpha.len();
        Ok(AlphaModel {
            mode: AlphaMode::Direct,
            xi: None,
            register: Vec::new(),
            alpha,
            labels,
            support_mask: vec![true; m],
            m_s: m,
            bias: 0.0,
            gamma,
            penalty,
            objective: None,
            power: 2,
            feature_map: None,
            theta: None,
        })
    }

    /// Sets `c_i = 1` where the frequency of outcome `i` exceeds `tau`.
    /// Frequencies are `α_i²` without a sampler, shot frequencies with one.
    /// If nothing passes, the most frequent outcomes are kept and a warning
    /// is logged.
    pub fn extract_support_vectors(&mut self, tau: f64, sampler: Option<&ShotSampler>) -> Result<SupportExtraction> {
        let m = self.alpha.len();
        if m == 0 {
            return Err(validation("empty model"));
        }
        let probs: Vec<f64> = self.alpha.iter().map(|a| a * a).collect();
        let frequencies = match sampler {
            None => probs,
            Some(s) => {
                // Mass outside the samples (padding, rounding) is its own outcome.
                let mut with_rest = probs.clone();
                with_rest.push((1.0 - probs.iter().sum::<f64>()).max(0.0));
                let counts = s.sample_counts(&with_rest);
                counts[..m].iter().map(|&c| c as f64 / s.shots as f64).collect()
            }
        };
        let mut mask: Vec<bool> = frequencies.iter().map(|&f| f > tau).collect();
        let mut fallback = false;
        if !mask.iter().any(|&c| c) {
            let top = frequencies[argmax(&frequencies)];
            mask = frequencies.iter().map(|&f| (top - f).abs() <= 1e-12).collect();
            fallback = true;
            log::warn!("no outcome above threshold {tau}; keeping the {} most frequent", mask.iter().filter(|&&c| c).count());
        }
        self.m_s = mask.iter().filter(|&&c| c).count();
        self.support_mask = mask.clone();
        Ok(SupportExtraction { mask, m_s: self.m_s, frequencies, fallback })
    }

    /// `f(x) = Σ c_i α_i y_i k(x_i, x) / √m_s + b`.
    pub fn decision_value(&self, kernel_row: &[f64]) -> Result<f64> {
        check_support(self)?;
        if kernel_row.len() != self.alpha.len() {
            return Err(structural(format!(
                "kernel row has {} entries for {} training samples",
                kernel_row.len(),
                self.alpha.len()
            )));
        }
        let sum: f64 = (0..self.alpha.len())
            .filter(|&i| self.support_mask[i])
            .map(|i| self.alpha[i] * f64::from(self.labels[i]) * kernel_row[i])
            .sum();
        Ok(sum / (self.m_s as f64).sqrt() + self.bias)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        let mut m = AlphaModel::direct(vec![1.0, 0.0, 0.0, 0.0], vec![1, 1, -1, -1], 10.0, 10.0).unwrap();
        let e = m.extract_support_vectors(0.01, None).unwrap();
        assert_eq!(e.mask, vec![true, false, false, false]);
        assert_eq!(m.m_s, 1);
        assert!(!e.fallback);

        let mut m = AlphaModel::direct(vec![0.5; 4], vec![1, 1, -1, -1], 10.0, 10.0).unwrap();
        let e = m.extract_support_vectors(0.3, None).unwrap();
        assert!(e.fallback);
        assert_eq!(m.m_s, 4);
    }

    #[test]
    fn lone_support_vector_decision() {
        let mut m = AlphaModel::direct(vec![1.0, 0.0], vec![1, -1], 10.0, 10.0).unwrap();
        m.extract_support_vectors(0.01, None).unwrap();
        assert_eq!(m.decision_value(&[1.0, 0.0]).unwrap(), 1.0);
        assert!(m.decision_value(&[1.0]).is_err());
    }

    #[test]
    fn no_support_is_contract_error() {
        let mut m = AlphaModel::direct(vec![1.0, 0.0], vec![1, -1], 10.0, 10.0).unwrap();
        m.m_s = 0;
        assert!(matches!(m.decision_value(&[1.0, 0.0]), Err(crate::Error::Contract(_))));
    }

    #[test]
    fn json_round_trip() {
        let m = AlphaModel::direct(vec![0.6, 0.8], vec![1, -1], 10.0, 5.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("model.json");
        m.save_json(&p).unwrap();
        assert_eq!(AlphaModel::load_json(&p).unwrap(), m);
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(v["mode"], "direct");
        assert_eq!(v["C"], 5.0);
    }
}
