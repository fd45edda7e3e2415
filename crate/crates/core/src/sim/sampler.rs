use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::statevector::Statevector;
use crate::error::{validation, Result};

/// Seeded shot source. Copies are independent and replay identically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotSampler {
    pub seed: u64,
    pub shots: u64,
}

/// Outcome counts keyed by bitstring. The last character of each key is
/// the first measured qubit.
pub type Histogram = BTreeMap<String, u64>;

impl ShotSampler {
    pub fn new(seed: u64, shots: u64) -> Result<Self> {
        if shots == 0 {
            return Err(validation("shot count must be positive"));
        }
        Ok(ShotSampler { seed, shots })
    }

    /// Same shot count, seed mixed with `stream` components.
    pub fn fork(&self, stream: &[u64]) -> ShotSampler {
        ShotSampler { seed: derive_seed(self.seed, stream), shots: self.shots }
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Draws `shots` outcomes from `probabilities` by inverse-CDF lookup and
    /// returns per-outcome counts.
    pub fn sample_counts(&self, probabilities: &[f64]) -> Vec<u64> {
        let mut cdf = Vec::with_capacity(probabilities.len());
        let mut acc = 0.0;
        for p in probabilities {
            acc += p.max(0.0);
            cdf.push(acc);
        }
        let total = acc;
        let mut counts = vec![0u64; probabilities.len()];
        let mut rng = self.rng();
        for _ in 0..self.shots {
            let u: f64 = rng.random::<f64>() * total;
            let idx = cdf.partition_point(|&c| c <= u).min(probabilities.len() - 1);
            counts[idx] += 1;
        }
        counts
    }

    /// Fraction of shots landing on an outcome of probability `p`.
    pub fn estimate_probability(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let counts = self.sample_counts(&[1.0 - p, p]);
        counts[1] as f64 / self.shots as f64
    }
}

/// SplitMix64-style mixing of a master seed with stream identifiers, so
/// per-item seeds do not depend on evaluation order.
pub fn derive_seed(master: u64, stream: &[u64]) -> u64 {
    let mut z = master;
    for &s in stream {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(s.wrapping_mul(0xD1B5_4A32_D192_ED03));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// Measures `measured_qubits` of `state` `sampler.shots` times.
pub fn sample_measurement(
    state: &Statevector,
    sampler: &ShotSampler,
    measured_qubits: &[usize],
) -> Result<Histogram> {
    if measured_qubits.is_empty() {
        return Err(validation("no qubits to measure"));
    }
    let marginal = state.marginal_probabilities(measured_qubits)?;
    let counts = sampler.sample_counts(&marginal);
    let width = measured_qubits.len();
    Ok(counts
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c > 0)
        .map(|(outcome, c)| (format!("{outcome:0width$b}"), c))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::GateOp;

    #[test]
    fn deterministic_state_puts_all_counts_on_zero() {
        let s = Statevector::zero(2).unwrap();
        let h = sample_measurement(&s, &ShotSampler::new(1, 500).unwrap(), &[0]).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h["0"], 500);
    }

    #[test]
    fn plus_state_frequency_within_binomial_band() {
        let s = Statevector::zero(1).unwrap().apply_gate(&GateOp::H { qubit: 0 }).unwrap();
        let h = sample_measurement(&s, &ShotSampler::new(2024, 1_000_000).unwrap(), &[0]).unwrap();
        let f0 = h["0"] as f64 / 1e6;
        // 2.576 sigma at p = 0.5, n = 1e6 is 0.0013; the band below is wider.
        assert!((0.497..=0.503).contains(&f0), "frequency {f0}");
        assert_eq!(h.values().sum::<u64>(), 1_000_000);
    }

    #[test]
    fn seeded_repeat_is_identical() {
        let s = Statevector::from_real(&[0.6, 0.0, 0.0, 0.8]).unwrap();
        let sampler = ShotSampler::new(99, 4096).unwrap();
        let a = sample_measurement(&s, &sampler, &[0, 1]).unwrap();
        let b = sample_measurement(&s, &sampler, &[0, 1]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.keys().cloned().collect::<Vec<_>>(), vec!["00", "11"]);
    }

    #[test]
    fn bitstring_order_puts_first_qubit_last() {
        let s = Statevector::basis(3, 0b001).unwrap();
        let h = sample_measurement(&s, &ShotSampler::new(0, 10).unwrap(), &[0, 2]).unwrap();
        assert_eq!(h["01"], 10);
    }

    #[test]
    fn rejects_empty_measurement_and_zero_shots() {
        let s = Statevector::zero(1).unwrap();
        assert!(sample_measurement(&s, &ShotSampler { seed: 0, shots: 10 }, &[]).is_err());
        assert!(ShotSampler::new(0, 0).is_err());
    }

    #[test]
    fn derived_seeds_differ_per_stream() {
        assert_ne!(derive_seed(7, &[0, 1]), derive_seed(7, &[1, 0]));
        assert_eq!(derive_seed(7, &[3, 4]), derive_seed(7, &[3, 4]));
    }
}
