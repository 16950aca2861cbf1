use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::linear;
use super::AnalysisError;

/// Upper bound accepted for the fitted initial coherence.
pub const MAX_C_INIT: f64 = 1.05;
const MAX_ITERATIONS: usize = 100;
const STEP_TOLERANCE: f64 = 1e-10;

/// One coherence amplitude at delay τ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub tau_us: f64,
    pub coherence: f64,
    /// Zero when the amplitude has no statistical error (exact mode).
    pub sigma: f64,
}

/// `C(τ) = c_init · exp(−τ / T2N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub c_init: f64,
    pub t2n_us: f64,
    pub c_init_se: f64,
    pub t2n_se_us: f64,
    pub iterations: usize,
    pub rss: f64,
    pub weighted: bool,
}

impl DecayFit {
    pub fn evaluate(&self, tau_us: f64) -> f64 {
        self.c_init * (-tau_us / self.t2n_us).exp()
    }
}

/// Fits an exponential decay to coherence amplitudes.
///
/// Points are weighted by `1/σ²` when every σ is positive and equally
/// otherwise. The log-linear regression seeds a Gauss–Newton refinement in
/// the parameters `(c_init, k = 1/T2N)`; standard errors come from the
/// Jacobian at the optimum scaled by the reduced χ².
pub fn fit_decay(points: &[DecayPoint]) -> Result<DecayFit, AnalysisError> {
    if points.len() < 3 {
        return Err(AnalysisError::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    for p in points {
        if !(p.coherence > 0.0) || !p.tau_us.is_finite() || !(p.sigma >= 0.0) {
            return Err(AnalysisError::InvalidInput(format!(
                "decay point (τ = {} µs, C = {}, σ = {}) needs C > 0 and σ ≥ 0",
                p.tau_us, p.coherence, p.sigma
            )));
        }
    }
    let weighted = points.iter().all(|p| p.sigma > 0.0);
    let w: Vec<f64> = points
        .iter()
        .map(|p| {
            if weighted {
                1.0 / (p.sigma * p.sigma)
            } else {
                1.0
            }
        })
        .collect();

    // Seed: ln C = ln c − k τ, with σ_lnC = σ / C.
    let design = DMatrix::from_fn(points.len(), 2, |i, j| {
        if j == 0 {
            1.0
        } else {
            -points[i].tau_us
        }
    });
    let logs: Vec<f64> = points.iter().map(|p| p.coherence.ln()).collect();
    let log_w: Vec<f64> = points
        .iter()
        .zip(&w)
        .map(|(p, wi)| wi * p.coherence * p.coherence)
        .collect();
    let seed = linear::solve(&design, &logs, &log_w, &[])?;
    let tau_span = points
        .iter()
        .map(|p| p.tau_us)
        .fold(0.0f64, |m, t| m.max(t.abs()))
        .max(f64::MIN_POSITIVE);
    let mut c = seed.coef[0].exp();
    let mut k = seed.coef[1];
    if !(k > 0.0) {
        k = 1.0 / (10.0 * tau_span);
    }

    let rss_of = |c: f64, k: f64| -> f64 {
        points
            .iter()
            .zip(&w)
            .map(|(p, wi)| wi * (p.coherence - c * (-k * p.tau_us).exp()).powi(2))
            .sum()
    };
    let mut rss = rss_of(c, k);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (jtj, jtr) = normal_equations(points, &w, c, k);
        let Some(step) = jtj.try_inverse().map(|inv| inv * jtr) else {
            return Err(AnalysisError::Singular);
        };
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let (nc, nk) = (c + scale * step[0], k + scale * step[1]);
            let nrss = rss_of(nc, nk);
            if nrss <= rss {
                accepted = Some((nc, nk, nrss));
                break;
            }
            scale *= 0.5;
        }
        let Some((nc, nk, nrss)) = accepted else {
            // No descent along the Gauss–Newton direction: numerical minimum.
            converged = true;
            break;
        };
        let rel = ((nc - c) / c.abs().max(f64::MIN_POSITIVE))
            .abs()
            .max(((nk - k) / k.abs().max(f64::MIN_POSITIVE)).abs());
        c = nc;
        k = nk;
        rss = nrss;
        if rel < STEP_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(AnalysisError::NotConverged { iterations });
    }
    if !(k > 0.0) {
        return Err(AnalysisError::NonPositiveT2N(1.0 / k));
    }
    if !(0.0..=MAX_C_INIT).contains(&c) {
        return Err(AnalysisError::CoherenceOutOfRange(c));
    }

    let (jtj, _) = normal_equations(points, &w, c, k);
    let dof = points.len() - 2;
    let cov = jtj.try_inverse().ok_or(AnalysisError::Singular)? * (rss / dof as f64);
    let t2n = 1.0 / k;
    Ok(DecayFit {
        c_init: c,
        t2n_us: t2n,
        c_init_se: cov[(0, 0)].max(0.0).sqrt(),
        t2n_se_us: cov[(1, 1)].max(0.0).sqrt() * t2n * t2n,
        iterations,
        rss,
        weighted,
    })
}

/// `JᵀWJ` and `JᵀW r` for the model `c·exp(−kτ)`.
fn normal_equations(
    points: &[DecayPoint],
    w: &[f64],
    c: f64,
    k: f64,
) -> (Matrix2<f64>, Vector2<f64>) {
    let mut jtj = Matrix2::zeros();
    let mut jtr = Vector2::zeros();
    for (p, &wi) in points.iter().zip(w) {
        let e = (-k * p.tau_us).exp();
        let j = Vector2::new(e, -c * p.tau_us * e);
        let r = p.coherence - c * e;
        jtj += wi * j * j.transpose();
        jtr += wi * r * j;
    }
    (jtj, jtr)
}
