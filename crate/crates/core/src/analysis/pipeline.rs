//! End-to-end reduction of a set of parity datasets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    fit_decay, fit_initial_coherence, fit_parity, fit_scaling, propagate_ratios, AnalysisError,
    DecayFit, DecayPoint, LinearTrend, RatioPoint, ScalingFit, SinusoidFit, SinusoidOptions,
    T2Estimate, Weighting,
};
use crate::protocol::ParityDataset;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub sinusoid: SinusoidOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayEntry {
    pub n_qubits: usize,
    pub fit: DecayFit,
}

/// One row of the coherence-versus-delay plot data, with natural-log
/// columns for the log-scale view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSeriesPoint {
    pub n_qubits: usize,
    pub tau_us: f64,
    pub coherence: f64,
    pub sigma: f64,
    /// NaN when no decay fit exists for this N.
    pub fitted: f64,
    pub ln_coherence: f64,
    pub ln_fitted: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParitySeriesPoint {
    pub n_qubits: usize,
    pub tau_ns: f64,
    pub phi: f64,
    pub parity: f64,
    pub delta_p: f64,
    pub fitted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub sinusoid_fits: Vec<SinusoidFit>,
    /// One entry per N with at least three delays.
    pub decay_fits: Vec<DecayEntry>,
    /// Present when N = 1 has a decay fit.
    pub ratios: Vec<RatioPoint>,
    /// Both weightings of every model, when at least three ratios exist.
    pub scaling: Vec<ScalingFit>,
    /// `(N, C(N, 0))`: the τ = 0 amplitude if scanned, else the fitted
    /// initial coherence.
    pub initial_coherence: Vec<(usize, f64)>,
    pub initial_trend: Option<LinearTrend>,
    pub coherence_series: Vec<CoherenceSeriesPoint>,
    pub parity_series: Vec<ParitySeriesPoint>,
}

impl AnalysisReport {
    pub fn decay_fit(&self, n: usize) -> Option<&DecayFit> {
        self.decay_fits
            .iter()
            .find(|d| d.n_qubits == n)
            .map(|d| &d.fit)
    }

    pub fn scaling_fit(
        &self,
        model: super::ScalingModel,
        weighting: Weighting,
    ) -> Option<&ScalingFit> {
        self.scaling
            .iter()
            .find(|f| f.model == model && f.weighting == weighting)
    }
}

/// Fits every dataset, then the per-N decays, the ratio scaling and the
/// initial-coherence trend.
///
/// Exact-mode amplitudes carry no statistical error, so their decay fits
/// are unweighted; sampled-mode amplitudes are weighted by their fit
/// standard errors.
pub fn analyze(
    datasets: &[ParityDataset],
    options: AnalysisOptions,
) -> Result<AnalysisReport, AnalysisError> {
    let mut sinusoid_fits = Vec::with_capacity(datasets.len());
    let mut parity_series = Vec::new();
    let mut by_n: BTreeMap<usize, Vec<(f64, SinusoidFit, bool)>> = BTreeMap::new();
    for ds in datasets {
        let fit = fit_parity(ds, options.sinusoid).map_err(|e| {
            e.context(format!(
                "parity fit N = {}, tau = {} ns",
                ds.n_qubits, ds.tau_ns
            ))
        })?;
        for p in &ds.points {
            parity_series.push(ParitySeriesPoint {
                n_qubits: ds.n_qubits,
                tau_ns: ds.tau_ns,
                phi: p.phi,
                parity: p.parity,
                delta_p: p.delta_p,
                fitted: fit.evaluate(p.phi),
            });
        }
        by_n.entry(ds.n_qubits)
            .or_default()
            .push((ds.tau_ns, fit.clone(), ds.is_exact()));
        sinusoid_fits.push(fit);
    }

    let mut decay_fits = Vec::new();
    let mut coherence_series = Vec::new();
    let mut initial_coherence = Vec::new();
    for (&n, fits) in by_n.iter_mut() {
        fits.sort_by(|a, b| a.0.total_cmp(&b.0));
        let points: Vec<DecayPoint> = fits
            .iter()
            .map(|(tau_ns, fit, exact)| DecayPoint {
                tau_us: tau_ns / 1000.0,
                coherence: fit.amplitude,
                sigma: if *exact { 0.0 } else { fit.amplitude_se },
            })
            .collect();
        let decay = if points.len() >= 3 {
            let fit = fit_decay(&points).map_err(|e| e.context(format!("decay fit N = {n}")))?;
            decay_fits.push(DecayEntry { n_qubits: n, fit });
            Some(fit)
        } else {
            None
        };
        for p in &points {
            let fitted = decay.map_or(f64::NAN, |d| d.evaluate(p.tau_us));
            coherence_series.push(CoherenceSeriesPoint {
                n_qubits: n,
                tau_us: p.tau_us,
                coherence: p.coherence,
                sigma: p.sigma,
                fitted,
                ln_coherence: p.coherence.ln(),
                ln_fitted: fitted.ln(),
            });
        }
        let c0 = match (fits.first(), decay) {
            (Some((tau, fit, _)), _) if *tau == 0.0 => Some(fit.amplitude),
            (_, Some(d)) => Some(d.c_init),
            _ => None,
        };
        if let Some(c0) = c0 {
            initial_coherence.push((n, c0));
        }
    }

    let estimates: Vec<T2Estimate> = decay_fits
        .iter()
        .map(|d| T2Estimate {
            n_qubits: d.n_qubits,
            t2_us: d.fit.t2n_us,
            sigma_us: d.fit.t2n_se_us,
        })
        .collect();
    let ratios = if estimates.iter().any(|e| e.n_qubits == 1) {
        propagate_ratios(&estimates)?
    } else {
        Vec::new()
    };
    let mut scaling = Vec::new();
    if ratios.len() >= 3 {
        for w in [Weighting::Unweighted, Weighting::Weighted] {
            match fit_scaling(&ratios, w) {
                Ok(fits) => scaling.extend(fits),
                // Exact-mode ratios can have vanishing errors, leaving the
                // weighted variant without free points.
                Err(AnalysisError::ZeroWeights | AnalysisError::Underdetermined { .. })
                    if w == Weighting::Weighted => {}
                Err(e) => return Err(e.context(format!("{w:?} scaling fit"))),
            }
        }
    }
    let initial_trend = if initial_coherence.len() >= 2 {
        Some(fit_initial_coherence(&initial_coherence)?)
    } else {
        None
    };
    Ok(AnalysisReport {
        sinusoid_fits,
        decay_fits,
        ratios,
        scaling,
        initial_coherence,
        initial_trend,
        coherence_series,
        parity_series,
    })
}
