//! Fits that turn parity scans into coherence amplitudes, amplitudes into
//! coherence times, and coherence times into scaling laws.

mod decay;
mod linear;
mod pipeline;
pub mod reference;
mod scaling;
mod sinusoid;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{run_delay_sweep, ExperimentPlan, ProtocolError};
use crate::topology::QubitChain;
use crate::QubitLabel;

pub use decay::{fit_decay, DecayFit, DecayPoint, MAX_C_INIT};
pub use pipeline::{
    analyze, AnalysisOptions, AnalysisReport, CoherenceSeriesPoint, DecayEntry, ParitySeriesPoint,
};
pub use scaling::{
    fit_scaling, fit_scaling_model, propagate_ratios, Coefficient, RatioPoint, ScalingFit,
    ScalingModel, T2Estimate, Weighting, CI_LEVEL,
};
pub use sinusoid::{fit_parity, wrap_phase, SinusoidFit, SinusoidOptions};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("all fit weights are zero")]
    ZeroWeights,
    #[error("fit basis is singular on the given points")]
    Singular,
    #[error("{points} points cannot determine {parameters} parameters")]
    Underdetermined { points: usize, parameters: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("decay fit did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("fitted T2 of {0} µs is not positive")]
    NonPositiveT2N(f64),
    #[error("fitted initial coherence {0} is outside [0, 1.05]")]
    CoherenceOutOfRange(f64),
    #[error("no single-qubit (N = 1) entry to normalise by")]
    MissingReference,
    #[error("calibration has no T2 for qubit {0}")]
    MissingCalibration(QubitLabel),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<AnalysisError>,
    },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

impl AnalysisError {
    pub(crate) fn context(self, context: impl Into<String>) -> Self {
        AnalysisError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

/// `a + b·N` fitted by ordinary least squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearTrend {
    pub intercept: f64,
    pub slope: f64,
    /// Not defined (NaN) with only two distinct N.
    pub intercept_se: f64,
    pub slope_se: f64,
}

impl LinearTrend {
    pub fn evaluate(&self, n: f64) -> f64 {
        self.intercept + self.slope * n
    }
}

/// Straight-line trend of the initial coherence `C(N, 0)` against N.
pub fn fit_initial_coherence(points: &[(usize, f64)]) -> Result<LinearTrend, AnalysisError> {
    let mut distinct: Vec<usize> = points.iter().map(|p| p.0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(AnalysisError::TooFewPoints {
            needed: 2,
            got: distinct.len(),
        });
    }
    let design = DMatrix::from_fn(points.len(), 2, |i, j| {
        if j == 0 {
            1.0
        } else {
            points[i].0 as f64
        }
    });
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let sol = linear::solve(&design, &y, &vec![1.0; points.len()], &[])?;
    let cov = sol.cov_scaled();
    Ok(LinearTrend {
        intercept: sol.coef[0],
        slope: sol.coef[1],
        intercept_se: cov[(0, 0)].sqrt(),
        slope_se: cov[(1, 1)].sqrt(),
    })
}

/// Coherence time of an N-qubit GHZ state under independent dephasing:
/// the decay rates of the chain qubits add, so `1/T2^(N) = Σ 1/T2_i`.
pub fn predict_t2n_from_calibration(
    calibration_t2_us: &BTreeMap<QubitLabel, f64>,
    chain: &QubitChain,
) -> Result<f64, AnalysisError> {
    let mut rate = 0.0;
    for &q in chain.qubits() {
        let t2 = *calibration_t2_us
            .get(&q)
            .ok_or(AnalysisError::MissingCalibration(q))?;
        if !(t2 > 0.0) {
            return Err(AnalysisError::InvalidInput(format!(
                "T2 of qubit {q} is {t2} µs"
            )));
        }
        rate += 1.0 / t2;
    }
    Ok(1.0 / rate)
}

/// The simulate-then-fit path: runs the plan's delay sweep, fits every
/// scan and then the decay of the fitted amplitudes.
pub fn simulate_t2n(plan: &ExperimentPlan) -> Result<DecayFit, AnalysisError> {
    let sweep = run_delay_sweep(plan)?;
    let mut points = Vec::with_capacity(sweep.len());
    for ds in &sweep {
        let fit = fit_parity(ds, SinusoidOptions::default())?;
        points.push(DecayPoint {
            tau_us: ds.tau_ns / 1000.0,
            coherence: fit.amplitude,
            sigma: if ds.is_exact() { 0.0 } else { fit.amplitude_se },
        });
    }
    fit_decay(&points)
}
