use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linear;
use super::AnalysisError;

/// Confidence level of the reported intervals.
pub const CI_LEVEL: f64 = 0.99;

/// A coherence time with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T2Estimate {
    pub n_qubits: usize,
    pub t2_us: f64,
    pub sigma_us: f64,
}

/// `r_N = T2^(1) / T2^(N)` with its propagated error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub n_qubits: usize,
    pub ratio: f64,
    pub sigma: f64,
}

/// Decoherence-rate ratios relative to the single-qubit entry.
///
/// `σ_r = sqrt((σ_1/T_N)² + (T_1 σ_N / T_N²)²)` for N > 1. The N = 1 ratio
/// divides a quantity by itself, so it is exactly 1 with zero error.
pub fn propagate_ratios(t2: &[T2Estimate]) -> Result<Vec<RatioPoint>, AnalysisError> {
    for e in t2 {
        if !(e.t2_us > 0.0) || !(e.sigma_us >= 0.0) {
            return Err(AnalysisError::InvalidInput(format!(
                "T2 for N = {} must be positive with nonnegative error, got {} ± {}",
                e.n_qubits, e.t2_us, e.sigma_us
            )));
        }
    }
    let reference = t2
        .iter()
        .find(|e| e.n_qubits == 1)
        .ok_or(AnalysisError::MissingReference)?;
    let (t1, s1) = (reference.t2_us, reference.sigma_us);
    Ok(t2
        .iter()
        .map(|e| {
            if e.n_qubits == 1 {
                RatioPoint {
                    n_qubits: 1,
                    ratio: 1.0,
                    sigma: 0.0,
                }
            } else {
                let tn = e.t2_us;
                RatioPoint {
                    n_qubits: e.n_qubits,
                    ratio: t1 / tn,
                    sigma: ((s1 / tn).powi(2) + (t1 * e.sigma_us / (tn * tn)).powi(2)).sqrt(),
                }
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingModel {
    /// βN + α
    Linear,
    /// γN² + α
    QuadNoLinear,
    /// γN² + βN
    QuadNoConst,
}

impl ScalingModel {
    pub const ALL: [ScalingModel; 3] = [
        ScalingModel::Linear,
        ScalingModel::QuadNoLinear,
        ScalingModel::QuadNoConst,
    ];

    pub fn coefficient_names(self) -> [&'static str; 2] {
        match self {
            ScalingModel::Linear => ["beta", "alpha"],
            ScalingModel::QuadNoLinear => ["gamma", "alpha"],
            ScalingModel::QuadNoConst => ["gamma", "beta"],
        }
    }

    pub fn has_intercept(self) -> bool {
        !matches!(self, ScalingModel::QuadNoConst)
    }

    fn basis(self, n: f64) -> [f64; 2] {
        match self {
            ScalingModel::Linear => [n, 1.0],
            ScalingModel::QuadNoLinear => [n * n, 1.0],
            ScalingModel::QuadNoConst => [n * n, n],
        }
    }
}

impl fmt::Display for ScalingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalingModel::Linear => "beta*N + alpha",
            ScalingModel::QuadNoLinear => "gamma*N^2 + alpha",
            ScalingModel::QuadNoConst => "gamma*N^2 + beta*N",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Every ratio counts equally.
    Unweighted,
    /// Weights `1/σ_r²`; ratios with σ_r = 0 are fitted exactly.
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub value: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: ScalingModel,
    pub weighting: Weighting,
    pub coefficients: Vec<Coefficient>,
    pub r_squared: f64,
    /// True when R² is measured about the (weighted) mean; models without a
    /// constant term use the uncentered total sum of squares.
    pub r_squared_centered: bool,
    pub dof: usize,
    pub reduced_chi2: f64,
    pub ci_level: f64,
}

impl ScalingFit {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn evaluate(&self, n: f64) -> f64 {
        let b = self.model.basis(n);
        b[0] * self.coefficients[0].value + b[1] * self.coefficients[1].value
    }
}

/// Fits all three models.
pub fn fit_scaling(
    ratios: &[RatioPoint],
    weighting: Weighting,
) -> Result<Vec<ScalingFit>, AnalysisError> {
    ScalingModel::ALL
        .iter()
        .map(|&m| fit_scaling_model(ratios, m, weighting))
        .collect()
}

/// Weighted linear least squares for one model, with covariance scaled by
/// the reduced χ² and Student-t intervals on `dof` degrees of freedom.
///
/// In the weighted variant a ratio with σ = 0 cannot carry a finite weight;
/// it is imposed as an exact constraint and does not count towards `dof`
/// or R².
pub fn fit_scaling_model(
    ratios: &[RatioPoint],
    model: ScalingModel,
    weighting: Weighting,
) -> Result<ScalingFit, AnalysisError> {
    if ratios.len() < 3 {
        return Err(AnalysisError::TooFewPoints {
            needed: 3,
            got: ratios.len(),
        });
    }
    if let Some(r) = ratios
        .iter()
        .find(|r| !r.ratio.is_finite() || !(r.sigma >= 0.0))
    {
        return Err(AnalysisError::InvalidInput(format!(
            "ratio for N = {} is {} ± {}",
            r.n_qubits, r.ratio, r.sigma
        )));
    }
    let design = DMatrix::from_fn(ratios.len(), 2, |i, j| {
        model.basis(ratios[i].n_qubits as f64)[j]
    });
    let y: Vec<f64> = ratios.iter().map(|r| r.ratio).collect();
    let (weights, exact): (Vec<f64>, Vec<usize>) = match weighting {
        Weighting::Unweighted => (vec![1.0; ratios.len()], Vec::new()),
        Weighting::Weighted => (
            ratios
                .iter()
                .map(|r| {
                    if r.sigma > 0.0 {
                        1.0 / (r.sigma * r.sigma)
                    } else {
                        0.0
                    }
                })
                .collect(),
            (0..ratios.len())
                .filter(|&i| ratios[i].sigma == 0.0)
                .collect(),
        ),
    };
    let sol = linear::solve(&design, &y, &weights, &exact)?;
    if sol.dof == 0 {
        return Err(AnalysisError::Underdetermined {
            points: ratios.len(),
            parameters: 2,
        });
    }
    let cov = sol.cov_scaled();
    let t = linear::t_quantile(CI_LEVEL, sol.dof);
    let coefficients = model
        .coefficient_names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let value = sol.coef[j];
            let se = cov[(j, j)].max(0.0).sqrt();
            Coefficient {
                name: (*name).to_string(),
                value,
                se,
                ci_low: value - t * se,
                ci_high: value + t * se,
            }
        })
        .collect();

    let free: Vec<usize> = (0..ratios.len())
        .filter(|i| weights[*i] > 0.0 && !exact.contains(i))
        .collect();
    let centered = model.has_intercept();
    let wsum: f64 = free.iter().map(|&i| weights[i]).sum();
    let mean = free.iter().map(|&i| weights[i] * y[i]).sum::<f64>() / wsum;
    let center = if centered { mean } else { 0.0 };
    let ss_tot: f64 = free
        .iter()
        .map(|&i| weights[i] * (y[i] - center).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - sol.rss / ss_tot
    } else if sol.rss == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    Ok(ScalingFit {
        model,
        weighting,
        coefficients,
        r_squared,
        r_squared_centered: centered,
        dof: sol.dof,
        reduced_chi2: sol.reduced_chi2(),
        ci_level: CI_LEVEL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratios(f: impl Fn(f64) -> f64) -> Vec<RatioPoint> {
        (1..=8)
            .map(|n| RatioPoint {
                n_qubits: n,
                ratio: f(n as f64),
                sigma: 0.1 * n as f64,
            })
            .collect()
    }

    #[test]
    fn perfect_linear_data() {
        for w in [Weighting::Unweighted, Weighting::Weighted] {
            let fit = fit_scaling_model(&ratios(|n| n), ScalingModel::Linear, w).unwrap();
            let beta = fit.coefficient("beta").unwrap();
            assert!((beta.value - 1.0).abs() < 1e-12);
            assert!(fit.coefficient("alpha").unwrap().value.abs() < 1e-12);
            assert!((fit.r_squared - 1.0).abs() < 1e-12);
            assert!(beta.ci_high - beta.ci_low < 1e-6);
        }
    }

    #[test]
    fn perfect_quadratic_data() {
        let fit = fit_scaling_model(
            &ratios(|n| n * n),
            ScalingModel::QuadNoLinear,
            Weighting::Unweighted,
        )
        .unwrap();
        assert!((fit.coefficient("gamma").unwrap().value - 1.0).abs() < 1e-12);
        assert!(fit.coefficient("alpha").unwrap().value.abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_propagation() {
        let r = propagate_ratios(&[
            T2Estimate {
                n_qubits: 1,
                t2_us: 48.34,
                sigma_us: 1.56,
            },
            T2Estimate {
                n_qubits: 8,
                t2_us: 5.49,
                sigma_us: 0.38,
            },
        ])
        .unwrap();
        assert_eq!(r[0].ratio, 1.0);
        assert_eq!(r[0].sigma, 0.0);
        assert!((r[1].ratio - 8.805).abs() < 1e-3);
        let expected =
            ((1.56f64 / 5.49).powi(2) + (48.34 * 0.38 / (5.49f64 * 5.49)).powi(2)).sqrt();
        assert!((r[1].sigma - expected).abs() < 1e-12);
    }

    #[test]
    fn ratio_errors() {
        assert!(matches!(
            propagate_ratios(&[T2Estimate {
                n_qubits: 2,
                t2_us: 1.0,
                sigma_us: 0.1
            }]),
            Err(AnalysisError::MissingReference)
        ));
        assert!(propagate_ratios(&[T2Estimate {
            n_qubits: 1,
            t2_us: 0.0,
            sigma_us: 0.1
        }])
        .is_err());
    }

    #[test]
    fn too_few_points() {
        let r = ratios(|n| n);
        assert!(matches!(
            fit_scaling(&r[..2], Weighting::Unweighted),
            Err(AnalysisError::TooFewPoints { .. })
        ));
    }
}
