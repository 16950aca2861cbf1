use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linear;
use super::AnalysisError;
use crate::protocol::ParityDataset;

/// Result of fitting `P(φ) = C·sin(Nφ + δ) [+ c₀]` at fixed frequency N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit {
    pub n_qubits: usize,
    pub tau_ns: f64,
    pub amplitude: f64,
    /// In (−π, π].
    pub phase_offset: f64,
    pub offset: Option<f64>,
    pub amplitude_se: f64,
    pub phase_offset_se: f64,
    pub offset_se: Option<f64>,
    /// Weighted residual sum of squares.
    pub rss: f64,
    /// Whether the points carried statistical weights (sampled data).
    pub weighted: bool,
}

impl SinusoidFit {
    pub fn evaluate(&self, phi: f64) -> f64 {
        self.amplitude * (self.n_qubits as f64 * phi + self.phase_offset).sin()
            + self.offset.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinusoidOptions {
    /// Adds a free constant term.
    pub with_offset: bool,
}

/// Maps an angle to (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Linear projection onto `{sin Nφ, cos Nφ}`.
///
/// Exact-mode datasets (every `delta_p = 0`) use unit weights and report
/// standard errors scaled by the residual variance. Sampled datasets use
/// weights `1/δ²`, with δ floored at `1/shots` so that points at `|P| = 1`
/// keep a finite weight, and report the unscaled covariance since δ are
/// already absolute errors.
pub fn fit_parity(
    dataset: &ParityDataset,
    options: SinusoidOptions,
) -> Result<SinusoidFit, AnalysisError> {
    let pts = &dataset.points;
    let p = if options.with_offset { 3 } else { 2 };
    let needed = p + 1;
    if pts.len() < needed {
        return Err(AnalysisError::TooFewPoints {
            needed,
            got: pts.len(),
        });
    }
    let nf = dataset.n_qubits as f64;
    let design = DMatrix::from_fn(pts.len(), p, |i, j| match j {
        0 => (nf * pts[i].phi).sin(),
        1 => (nf * pts[i].phi).cos(),
        _ => 1.0,
    });
    let y: Vec<f64> = pts.iter().map(|pt| pt.parity).collect();
    let weighted = !dataset.is_exact();
    let weights: Vec<f64> = if weighted {
        pts.iter()
            .map(|pt| {
                let floor = if pt.shots > 0 {
                    1.0 / pt.shots as f64
                } else {
                    0.0
                };
                let d = pt.delta_p.max(floor);
                if d > 0.0 {
                    1.0 / (d * d)
                } else {
                    0.0
                }
            })
            .collect()
    } else {
        vec![1.0; pts.len()]
    };
    let sol = linear::solve(&design, &y, &weights, &[])?;
    let cov = if weighted {
        sol.cov_unscaled.clone()
    } else {
        sol.cov_scaled()
    };
    let (a, b) = (sol.coef[0], sol.coef[1]);
    let amplitude = a.hypot(b);
    let (va, vb, cab) = (cov[(0, 0)], cov[(1, 1)], cov[(0, 1)]);
    let (amplitude_se, phase_offset_se) = if amplitude > 0.0 {
        let c2 = amplitude * amplitude;
        let var_c = (a * a * va + b * b * vb + 2.0 * a * b * cab) / c2;
        let var_d = (b * b * va + a * a * vb - 2.0 * a * b * cab) / (c2 * c2);
        (var_c.max(0.0).sqrt(), var_d.max(0.0).sqrt())
    } else {
        (((va + vb) / 2.0).max(0.0).sqrt(), f64::INFINITY)
    };
    Ok(SinusoidFit {
        n_qubits: dataset.n_qubits,
        tau_ns: dataset.tau_ns,
        amplitude,
        phase_offset: wrap_phase(b.atan2(a)),
        offset: options.with_offset.then(|| sol.coef[2]),
        amplitude_se,
        phase_offset_se,
        offset_se: options.with_offset.then(|| cov[(2, 2)].max(0.0).sqrt()),
        rss: sol.rss,
        weighted,
    })
}
