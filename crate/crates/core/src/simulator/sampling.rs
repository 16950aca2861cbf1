use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DensityMatrix, SimError, PROBABILITY_TOLERANCE};

/// Measured bitstrings and their occurrence counts. Bitstrings list qubits
/// in register order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    counts: BTreeMap<String, u64>,
    shots: u64,
    width: usize,
}

impl Counts {
    /// Builds counts, checking bitstring width and the shot total.
    pub fn new(counts: BTreeMap<String, u64>) -> Result<Self, SimError> {
        let shots: u64 = counts.values().sum();
        if shots == 0 {
            return Err(SimError::NoShots);
        }
        let width = counts.keys().next().map_or(0, String::len);
        if let Some(bad) = counts
            .keys()
            .find(|k| k.len() != width || !k.bytes().all(|b| b == b'0' || b == b'1'))
        {
            return Err(SimError::Unphysical(format!("malformed bitstring '{bad}'")));
        }
        Ok(Self {
            counts,
            shots,
            width,
        })
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, bits: &str) -> u64 {
        self.counts.get(bits).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

/// Draws `shots` basis outcomes from the diagonal of `rho`, then flips each
/// bit independently with its readout error. Deterministic in `seed`.
pub fn sample_counts(
    rho: &DensityMatrix,
    readout_errors: &[f64],
    shots: u64,
    seed: u64,
) -> Result<Counts, SimError> {
    if shots == 0 {
        return Err(SimError::NoShots);
    }
    let n = rho.n_qubits();
    if readout_errors.len() != n {
        return Err(SimError::RegisterMismatch {
            register: readout_errors.len(),
            state: n,
        });
    }
    let probs = rho.probabilities();
    if let Some((x, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, &p)| p < -PROBABILITY_TOLERANCE || !p.is_finite())
    {
        return Err(SimError::Unphysical(format!(
            "probability of basis state {x} is {p:e}"
        )));
    }
    let weights: Vec<f64> = probs.iter().map(|p| p.max(0.0)).collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| SimError::Unphysical(format!("cannot sample diagonal: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw: BTreeMap<usize, u64> = BTreeMap::new();
    for _ in 0..shots {
        let mut x = dist.sample(&mut rng);
        for (pos, &e) in readout_errors.iter().enumerate() {
            if e > 0.0 && rng.random::<f64>() < e {
                x ^= 1 << (n - 1 - pos);
            }
        }
        *raw.entry(x).or_default() += 1;
    }
    let counts = raw
        .into_iter()
        .map(|(x, c)| (format!("{x:0n$b}"), c))
        .collect();
    Counts::new(counts)
}

/// Parity expected from `rho` under independent readout flips:
/// `Π(1 − 2 e_k) · Σ_x (−1)^{|x|} ρ_xx`.
pub fn exact_parity(rho: &DensityMatrix, readout_errors: &[f64]) -> f64 {
    let attenuation: f64 = readout_errors.iter().map(|e| 1.0 - 2.0 * e).product();
    attenuation * rho.parity()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn ground_state_always_reads_zero() {
        let rho = DensityMatrix::zero_state(1);
        let c = sample_counts(&rho, &[0.0], 500, 1).unwrap();
        assert_eq!(c.get("0"), 500);
        assert_eq!(c.shots(), 500);
    }

    #[test]
    fn certain_readout_error_flips_every_shot() {
        let rho = DensityMatrix::zero_state(1);
        let c = sample_counts(&rho, &[1.0], 300, 9).unwrap();
        assert_eq!(c.get("1"), 300);
    }

    #[test]
    fn plus_state_frequency_within_binomial_bounds() {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let rho = DensityMatrix::from_pure(&[s, s]).unwrap();
        let n = 1_000_000u64;
        let c = sample_counts(&rho, &[0.0], n, 2024).unwrap();
        let freq = c.get("0") as f64 / n as f64;
        let sigma = (0.25 / n as f64).sqrt();
        assert!((freq - 0.5).abs() < 5.0 * sigma, "freq {freq}");
    }

    #[test]
    fn sampling_is_deterministic_in_seed() {
        let rho = DensityMatrix::maximally_mixed(3);
        let a = sample_counts(&rho, &[0.1; 3], 1000, 5).unwrap();
        let b = sample_counts(&rho, &[0.1; 3], 1000, 5).unwrap();
        let c = sample_counts(&rho, &[0.1; 3], 1000, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|(k, _)| k.len() == 3));
    }

    #[test]
    fn rejects_negative_probabilities_and_zero_shots() {
        let z = Complex64::new(0.0, 0.0);
        let rho = DensityMatrix::from_entries(
            1,
            vec![Complex64::new(1.1, 0.0), z, z, Complex64::new(-0.1, 0.0)],
        )
        .unwrap();
        assert!(matches!(
            sample_counts(&rho, &[0.0], 10, 0),
            Err(SimError::Unphysical(_))
        ));
        assert_eq!(
            sample_counts(&DensityMatrix::zero_state(1), &[0.0], 0, 0),
            Err(SimError::NoShots)
        );
    }

    #[test]
    fn counts_validation() {
        let mut m = BTreeMap::new();
        m.insert("01".to_string(), 3);
        m.insert("1".to_string(), 1);
        assert!(Counts::new(m).is_err());
        assert!(Counts::new(BTreeMap::new()).is_err());
    }

    #[test]
    fn exact_parity_attenuated_by_readout() {
        let rho = DensityMatrix::zero_state(2);
        assert!((exact_parity(&rho, &[0.1, 0.2]) - 0.8 * 0.6).abs() < 1e-15);
    }
}
