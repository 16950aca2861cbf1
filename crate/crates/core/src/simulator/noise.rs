use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::Unitary2;
use crate::QubitLabel;

use super::{DensityMatrix, SimError};

/// Relaxation, dephasing and readout parameters of one physical qubit.
///
/// Times are in microseconds; `f64::INFINITY` disables the process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitNoise {
    pub t1_us: f64,
    pub t2_us: f64,
    #[serde(default)]
    pub readout_error: f64,
}

impl QubitNoise {
    pub const NOISELESS: Self = Self {
        t1_us: f64::INFINITY,
        t2_us: f64::INFINITY,
        readout_error: 0.0,
    };

    /// Pure dephasing, no relaxation.
    pub fn dephasing(t2_us: f64) -> Self {
        Self {
            t1_us: f64::INFINITY,
            t2_us,
            readout_error: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidNoise(msg));
        if !(self.t1_us > 0.0) || !(self.t2_us > 0.0) {
            return bad(format!(
                "coherence times must be positive (t1 = {} us, t2 = {} us)",
                self.t1_us, self.t2_us
            ));
        }
        if self.t2_us > 2.0 * self.t1_us {
            return bad(format!(
                "t2 = {} us exceeds 2·t1 = {} us",
                self.t2_us,
                2.0 * self.t1_us
            ));
        }
        check_probability("readout_error", self.readout_error)
    }

    /// Pure-dephasing time, `1/Tφ = 1/T2 − 1/(2 T1)`; infinite when T2 = 2 T1.
    pub fn t_phi_us(&self) -> f64 {
        let rate = 1.0 / self.t2_us - 0.5 / self.t1_us;
        if rate <= 0.0 {
            f64::INFINITY
        } else {
            1.0 / rate
        }
    }

    /// Amplitude-damping γ and phase-flip p for an idle of `duration_ns`.
    pub fn idle_parameters(&self, duration_ns: f64) -> (f64, f64) {
        let t_us = duration_ns * 1e-3;
        let gamma = -(-t_us / self.t1_us).exp_m1();
        let flip = -0.5 * (-t_us / self.t_phi_us()).exp_m1();
        (gamma, flip)
    }
}

fn check_probability(name: &str, p: f64) -> Result<(), SimError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(SimError::InvalidNoise(format!(
            "{name} = {p} is not in [0, 1]"
        )))
    }
}

/// Noise applied during circuit evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    default_qubit: QubitNoise,
    #[serde(default)]
    qubits: BTreeMap<QubitLabel, QubitNoise>,
    #[serde(default)]
    collective_t2c_us: Option<f64>,
    #[serde(default)]
    p1: f64,
    #[serde(default)]
    p2: f64,
    #[serde(default)]
    gate_time_noise: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            default_qubit: QubitNoise::NOISELESS,
            qubits: BTreeMap::new(),
            collective_t2c_us: None,
            p1: 0.0,
            p2: 0.0,
            gate_time_noise: false,
        }
    }

    /// Same parameters on every qubit.
    pub fn uniform(qubit: QubitNoise) -> Result<Self, SimError> {
        qubit.validate()?;
        Ok(Self {
            default_qubit: qubit,
            ..Self::noiseless()
        })
    }

    /// Overrides the parameters of one qubit.
    pub fn with_qubit(mut self, label: QubitLabel, qubit: QubitNoise) -> Result<Self, SimError> {
        qubit
            .validate()
            .map_err(|e| SimError::InvalidNoise(format!("qubit {label}: {e}")))?;
        self.qubits.insert(label, qubit);
        Ok(self)
    }

    /// Register-wide correlated dephasing with single-qubit time `t2c_us`.
    pub fn with_collective_dephasing(mut self, t2c_us: f64) -> Result<Self, SimError> {
        if !(t2c_us > 0.0) {
            return Err(SimError::InvalidNoise(format!(
                "collective t2c = {t2c_us} us must be positive"
            )));
        }
        self.collective_t2c_us = Some(t2c_us);
        Ok(self)
    }

    /// Depolarizing probabilities after single- and two-qubit gates.
    pub fn with_gate_errors(mut self, p1: f64, p2: f64) -> Result<Self, SimError> {
        check_probability("p1", p1)?;
        check_probability("p2", p2)?;
        self.p1 = p1;
        self.p2 = p2;
        Ok(self)
    }

    pub fn with_readout_error(mut self, p: f64) -> Result<Self, SimError> {
        check_probability("readout_error", p)?;
        self.default_qubit.readout_error = p;
        for q in self.qubits.values_mut() {
            q.readout_error = p;
        }
        Ok(self)
    }

    /// Idle decoherence of non-operand qubits while a gate runs.
    pub fn with_gate_time_noise(mut self, enabled: bool) -> Self {
        self.gate_time_noise = enabled;
        self
    }

    /// Re-checks every invariant (for models built by deserialisation).
    pub fn validate(&self) -> Result<(), SimError> {
        self.default_qubit.validate()?;
        for (label, q) in &self.qubits {
            q.validate()
                .map_err(|e| SimError::InvalidNoise(format!("qubit {label}: {e}")))?;
        }
        if let Some(t) = self.collective_t2c_us {
            if !(t > 0.0) {
                return Err(SimError::InvalidNoise(format!(
                    "collective t2c = {t} us must be positive"
                )));
            }
        }
        check_probability("p1", self.p1)?;
        check_probability("p2", self.p2)
    }

    pub fn qubit(&self, label: QubitLabel) -> &QubitNoise {
        self.qubits.get(&label).unwrap_or(&self.default_qubit)
    }

    pub fn collective_t2c_us(&self) -> Option<f64> {
        self.collective_t2c_us
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn gate_time_noise(&self) -> bool {
        self.gate_time_noise
    }

    pub fn readout_errors(&self, register: &[QubitLabel]) -> Vec<f64> {
        register
            .iter()
            .map(|&q| self.qubit(q).readout_error)
            .collect()
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Kraus operators `{[[1, 0], [0, √(1−γ)]], [[0, √γ], [0, 0]]}`.
pub fn amplitude_damping_kraus(gamma: f64) -> [Unitary2; 2] {
    let z = real(0.0);
    [
        Unitary2::new(real(1.0), z, z, real((1.0 - gamma).sqrt())),
        Unitary2::new(z, real(gamma.sqrt()), z, z),
    ]
}

/// Kraus operators `{√(1−p) I, √p Z}`.
pub fn phase_flip_kraus(p: f64) -> [Unitary2; 2] {
    let z = real(0.0);
    let s = real(p.sqrt());
    [
        Unitary2::identity() * real((1.0 - p).sqrt()),
        Unitary2::new(s, z, z, -s),
    ]
}

/// `Σ K†K − I`, largest entry magnitude.
pub fn completeness_error(ops: &[Unitary2]) -> f64 {
    let sum: Unitary2 = ops.iter().map(|k| k.adjoint() * k).sum();
    (sum - Unitary2::identity())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Amplitude damping with `γ = 1 − exp(−t/T1)` followed by a phase flip with
/// `p = (1 − exp(−t/Tφ))/2`; off-diagonals decay by `exp(−t/T2)`.
pub fn apply_idle_noise(
    rho: &mut DensityMatrix,
    position: usize,
    duration_ns: f64,
    qubit: &QubitNoise,
) -> Result<(), SimError> {
    if !(duration_ns >= 0.0) {
        return Err(SimError::NegativeDuration(duration_ns));
    }
    if duration_ns == 0.0 {
        return Ok(());
    }
    let (gamma, flip) = qubit.idle_parameters(duration_ns);
    if gamma > 0.0 {
        rho.apply_kraus(&amplitude_damping_kraus(gamma), position)?;
    }
    if flip > 0.0 {
        rho.apply_kraus(&phase_flip_kraus(flip), position)?;
    }
    Ok(())
}

/// Correlated dephasing: `ρ_xy ← ρ_xy · exp(−(m_x − m_y)² t / T2c)` with
/// `m_z = (#zeros − #ones)/2`.
///
/// This is the average of a global Z rotation `exp(−iθ Σ Z/2)` over a
/// Gaussian phase θ with variance `2t/T2c`.
pub fn apply_collective_dephasing(
    rho: &mut DensityMatrix,
    duration_ns: f64,
    t2c_us: f64,
) -> Result<(), SimError> {
    if !(duration_ns >= 0.0) {
        return Err(SimError::NegativeDuration(duration_ns));
    }
    if duration_ns == 0.0 || t2c_us.is_infinite() {
        return Ok(());
    }
    let n = rho.n_qubits();
    let rate = duration_ns * 1e-3 / t2c_us;
    // 2·m_z = n − 2·popcount(z), so (m_x − m_y)² = (popcount(y) − popcount(x))².
    let factors: Vec<f64> = (0..=n).map(|d| (-((d * d) as f64) * rate).exp()).collect();
    rho.scale_entries(|x, y| {
        let d = (x.count_ones() as i64 - y.count_ones() as i64).unsigned_abs() as usize;
        factors[d]
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

    fn plus() -> DensityMatrix {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        DensityMatrix::from_pure(&[s, s]).unwrap()
    }

    #[test]
    fn validation_rules() {
        assert!(QubitNoise {
            t1_us: 10.0,
            t2_us: 20.0,
            readout_error: 0.0
        }
        .validate()
        .is_ok());
        assert!(QubitNoise {
            t1_us: 10.0,
            t2_us: 20.1,
            readout_error: 0.0
        }
        .validate()
        .is_err());
        assert!(QubitNoise {
            t1_us: 0.0,
            t2_us: 0.0,
            readout_error: 0.0
        }
        .validate()
        .is_err());
        assert!(QubitNoise {
            t1_us: f64::NAN,
            t2_us: 1.0,
            readout_error: 0.0
        }
        .validate()
        .is_err());
        assert!(QubitNoise {
            t1_us: 1.0,
            t2_us: 1.0,
            readout_error: 1.5
        }
        .validate()
        .is_err());
        assert!(QubitNoise::dephasing(48.34).validate().is_ok());
        assert!(NoiseModel::noiseless().with_gate_errors(-0.1, 0.0).is_err());
        assert!(NoiseModel::noiseless()
            .with_collective_dephasing(0.0)
            .is_err());
    }

    #[test]
    fn tphi_infinite_at_t2_equal_2t1() {
        let q = QubitNoise {
            t1_us: 30.0,
            t2_us: 60.0,
            readout_error: 0.0,
        };
        assert!(q.t_phi_us().is_infinite());
        assert_eq!(q.idle_parameters(1000.0).1, 0.0);
    }

    #[test]
    fn kraus_sets_are_complete() {
        for x in [0.0, 0.1, 0.5, 1.0] {
            assert!(completeness_error(&amplitude_damping_kraus(x)) < 1e-15);
            assert!(completeness_error(&phase_flip_kraus(x)) < 1e-15);
        }
    }

    #[test]
    fn zero_duration_is_identity() {
        let mut rho = plus();
        apply_idle_noise(&mut rho, 0, 0.0, &QubitNoise::dephasing(1.0)).unwrap();
        assert_eq!(rho, plus());
        apply_collective_dephasing(&mut rho, 0.0, 1.0).unwrap();
        assert_eq!(rho, plus());
        assert!(apply_idle_noise(&mut rho, 0, -1.0, &QubitNoise::dephasing(1.0)).is_err());
    }

    #[test]
    fn dephasing_halves_coherence_at_t2_ln2() {
        let t2 = 12.5;
        let mut rho = plus();
        apply_idle_noise(&mut rho, 0, t2 * LN_2 * 1e3, &QubitNoise::dephasing(t2)).unwrap();
        assert!((rho.get(0, 1).norm() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn amplitude_damping_limit_decays_at_half_rate() {
        let t1 = 20.0;
        let q = QubitNoise {
            t1_us: t1,
            t2_us: 2.0 * t1,
            readout_error: 0.0,
        };
        let t_ns = 7300.0;
        let mut rho = plus();
        apply_idle_noise(&mut rho, 0, t_ns, &q).unwrap();
        let expected = 0.5 * (-(t_ns * 1e-3) / (2.0 * t1)).exp();
        assert!((rho.get(0, 1).norm() - expected).abs() < 1e-12);
        let pop1 = 0.5 * (-(t_ns * 1e-3) / t1).exp();
        assert!((rho.get(1, 1).re - pop1).abs() < 1e-12);
    }

    #[test]
    fn general_idle_decays_at_t2() {
        let q = QubitNoise {
            t1_us: 50.0,
            t2_us: 35.0,
            readout_error: 0.0,
        };
        let mut rho = plus();
        apply_idle_noise(&mut rho, 0, 10_000.0, &q).unwrap();
        assert!((rho.get(0, 1).norm() - 0.5 * (-10.0f64 / 35.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn collective_single_qubit_at_t2c() {
        let mut rho = plus();
        apply_collective_dephasing(&mut rho, 4000.0, 4.0).unwrap();
        assert!((rho.get(0, 1).norm() - 0.5 * (-1.0f64).exp()).abs() < 1e-14);
    }
}
