//! Published hardware values used as inputs and as comparison targets.

use super::scaling::{ScalingModel, T2Estimate};

/// Fitted coherence times of N-qubit GHZ states on ibmqx5, in µs, with
/// their errors.
pub const MEASURED_T2: [(usize, f64, f64); 8] = [
    (1, 48.34, 1.56),
    (2, 26.15, 1.67),
    (3, 16.11, 0.89),
    (4, 12.25, 0.62),
    (5, 10.83, 0.75),
    (6, 7.63, 0.36),
    (7, 6.32, 0.83),
    (8, 5.49, 0.38),
];

/// Coherence times predicted from per-qubit calibration data, in µs.
pub const CALIBRATION_PREDICTED_T2: [(usize, f64); 8] = [
    (1, 44.4),
    (2, 24.52),
    (3, 17.21),
    (4, 14.75),
    (5, 10.97),
    (6, 9.88),
    (7, 5.99),
    (8, 5.40),
];

/// Reported statistics of one scaling model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedScaling {
    pub model: ScalingModel,
    pub r_squared: f64,
    /// 99% intervals for the coefficients this model reports, named as in
    /// [`ScalingModel::coefficient_names`].
    pub intervals: &'static [(&'static str, f64, f64)],
}

pub const PUBLISHED_SCALING: [PublishedScaling; 3] = [
    PublishedScaling {
        model: ScalingModel::Linear,
        r_squared: 0.996,
        intervals: &[("beta", 0.968, 1.148)],
    },
    PublishedScaling {
        model: ScalingModel::QuadNoLinear,
        r_squared: 0.983,
        intervals: &[("gamma", 0.113, 0.160)],
    },
    PublishedScaling {
        model: ScalingModel::QuadNoConst,
        r_squared: 0.998,
        intervals: &[("gamma", -0.007, 0.075), ("beta", 0.561, 1.103)],
    },
];

/// Reported initial-coherence trend `C(N,0) ≈ 1 − 0.12 N`.
pub const INITIAL_COHERENCE_TREND: (f64, f64) = (1.0, -0.12);

pub fn measured_t2() -> Vec<T2Estimate> {
    MEASURED_T2
        .iter()
        .map(|&(n_qubits, t2_us, sigma_us)| T2Estimate {
            n_qubits,
            t2_us,
            sigma_us,
        })
        .collect()
}
