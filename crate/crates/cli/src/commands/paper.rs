use std::fmt;

use ghz_core::analysis::reference::{
    measured_t2, CALIBRATION_PREDICTED_T2, MEASURED_T2, PUBLISHED_SCALING,
};
use ghz_core::analysis::{
    fit_scaling, predict_t2n_from_calibration, propagate_ratios, simulate_t2n, RatioPoint,
    ScalingFit, Weighting,
};
use ghz_core::protocol::DelayRealization;
use ghz_core::topology::{ibmqx5_reference_chain, CouplingGraph, QubitChain};
use ghz_core::{ExperimentPlan, QubitLabel};
use serde::Serialize;

use crate::calibration::CalibrationFile;
use crate::error::{CliError, Result};

/// Tolerances used to decide whether a variant reproduces the published
/// statistics.
pub const R_SQUARED_TOLERANCE: f64 = 0.01;
pub const CI_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct ModelComparison {
    pub model: String,
    pub r_squared_published: f64,
    pub r_squared_computed: f64,
    pub intervals: Vec<IntervalComparison>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalComparison {
    pub coefficient: String,
    pub published: (f64, f64),
    pub computed: (f64, f64),
    pub value: f64,
}

impl IntervalComparison {
    pub fn max_endpoint_delta(&self) -> f64 {
        (self.published.0 - self.computed.0)
            .abs()
            .max((self.published.1 - self.computed.1).abs())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantComparison {
    pub weighting: Weighting,
    pub fits: Vec<ScalingFit>,
    pub models: Vec<ModelComparison>,
    /// Every R² within [`R_SQUARED_TOLERANCE`].
    pub r_squared_match: bool,
    /// Both endpoints of the linear model's β interval within
    /// [`CI_TOLERANCE`].
    pub beta_interval_match: bool,
    /// Sum of every deviation divided by its tolerance.
    pub score: f64,
}

impl VariantComparison {
    pub fn matched(&self) -> bool {
        self.r_squared_match && self.beta_interval_match
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationRow {
    pub n_qubits: usize,
    pub chain: Vec<QubitLabel>,
    pub predicted_us: f64,
    pub reference_us: f64,
    pub simulated_us: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PaperReport {
    pub measured: Vec<(usize, f64, f64)>,
    pub ratios: Vec<RatioPoint>,
    pub variants: Vec<VariantComparison>,
    /// The variant that reproduces the published statistics, or failing
    /// that the one with the lowest score.
    pub closest: Weighting,
    pub calibration: Option<Vec<CalibrationRow>>,
}

impl PaperReport {
    pub fn variant(&self, w: Weighting) -> &VariantComparison {
        self.variants
            .iter()
            .find(|v| v.weighting == w)
            .expect("both variants are computed")
    }

    pub fn any_matched(&self) -> bool {
        self.variants.iter().any(VariantComparison::matched)
    }
}

fn compare(weighting: Weighting, fits: Vec<ScalingFit>) -> VariantComparison {
    let mut models = Vec::new();
    let mut r_squared_match = true;
    let mut beta_interval_match = false;
    let mut score = 0.0;
    for published in PUBLISHED_SCALING {
        let fit = fits
            .iter()
            .find(|f| f.model == published.model)
            .expect("all models fitted");
        let dr = (fit.r_squared - published.r_squared).abs();
        r_squared_match &= dr <= R_SQUARED_TOLERANCE;
        score += dr / R_SQUARED_TOLERANCE;
        let intervals: Vec<IntervalComparison> = published
            .intervals
            .iter()
            .map(|&(name, lo, hi)| {
                let c = fit.coefficient(name).expect("published coefficient exists");
                IntervalComparison {
                    coefficient: name.to_string(),
                    published: (lo, hi),
                    computed: (c.ci_low, c.ci_high),
                    value: c.value,
                }
            })
            .collect();
        for iv in &intervals {
            score += ((iv.published.0 - iv.computed.0).abs()
                + (iv.published.1 - iv.computed.1).abs())
                / CI_TOLERANCE;
            if published.model == ghz_core::analysis::ScalingModel::Linear
                && iv.coefficient == "beta"
            {
                beta_interval_match = iv.max_endpoint_delta() <= CI_TOLERANCE;
            }
        }
        models.push(ModelComparison {
            model: published.model.to_string(),
            r_squared_published: published.r_squared,
            r_squared_computed: fit.r_squared,
            intervals,
        });
    }
    VariantComparison {
        weighting,
        fits,
        models,
        r_squared_match,
        beta_interval_match,
        score,
    }
}

/// Refits the published coherence times with both weightings and, with a
/// calibration file, compares the harmonic-sum prediction against the
/// published calibration-based values. `simulate` adds the
/// simulate-then-fit prediction for each N.
pub fn cmd_reproduce_paper(
    calibration: Option<&CalibrationFile>,
    simulate: bool,
) -> Result<PaperReport> {
    let ratios = propagate_ratios(&measured_t2())?;
    let variants: Vec<VariantComparison> = [Weighting::Unweighted, Weighting::Weighted]
        .into_iter()
        .map(|w| Ok(compare(w, fit_scaling(&ratios, w)?)))
        .collect::<Result<_>>()?;
    let closest = variants
        .iter()
        .find(|v| v.matched())
        .or_else(|| variants.iter().min_by(|a, b| a.score.total_cmp(&b.score)))
        .map(|v| v.weighting)
        .expect("two variants");
    let calibration = calibration
        .map(|cal| calibration_rows(cal, simulate))
        .transpose()?;
    Ok(PaperReport {
        measured: MEASURED_T2.to_vec(),
        ratios,
        variants,
        closest,
        calibration,
    })
}

fn calibration_rows(cal: &CalibrationFile, simulate: bool) -> Result<Vec<CalibrationRow>> {
    let graph = CouplingGraph::ibmqx5();
    let t2 = cal.t2_map();
    let noise = cal.dephasing_model()?;
    CALIBRATION_PREDICTED_T2
        .iter()
        .map(|&(n, reference_us)| {
            let chain = QubitChain::new(&graph, ibmqx5_reference_chain(n).expect("n ≤ 8"))?;
            let predicted_us = predict_t2n_from_calibration(&t2, &chain)?;
            let simulated_us = if simulate {
                let span_ns = 2000.0 * predicted_us;
                let delays = (0..9).map(|i| span_ns * i as f64 / 8.0).collect();
                let plan = ExperimentPlan::new(&graph, &chain, noise.clone())?
                    .with_delay_realization(DelayRealization::Continuous)?
                    .with_delays(delays)?;
                Some(simulate_t2n(&plan)?.t2n_us)
            } else {
                None
            };
            Ok(CalibrationRow {
                n_qubits: n,
                chain: chain.qubits().to_vec(),
                predicted_us,
                reference_us,
                simulated_us,
            })
        })
        .collect::<std::result::Result<_, CliError>>()
}

impl fmt::Display for PaperReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Published coherence times and rate ratios")?;
        writeln!(
            f,
            "{:>3} {:>9} {:>7} {:>9} {:>9}",
            "N", "T2 (us)", "+/-", "r_N", "+/-"
        )?;
        for (&(n, t2, s), r) in self.measured.iter().zip(&self.ratios) {
            writeln!(
                f,
                "{n:>3} {t2:>9.2} {s:>7.2} {:>9.4} {:>9.4}",
                r.ratio, r.sigma
            )?;
        }
        for v in &self.variants {
            writeln!(f)?;
            writeln!(
                f,
                "{:?} fit: R2 {}, beta CI {}",
                v.weighting,
                if v.r_squared_match { "match" } else { "differ" },
                if v.beta_interval_match {
                    "match"
                } else {
                    "differs"
                },
            )?;
            for m in &v.models {
                writeln!(
                    f,
                    "  {:<20} R2 published {:.3} computed {:.4} (delta {:+.4})",
                    m.model,
                    m.r_squared_published,
                    m.r_squared_computed,
                    m.r_squared_computed - m.r_squared_published
                )?;
                for iv in &m.intervals {
                    writeln!(
                        f,
                        "    {:<6} = {:.4}  99% CI published [{:.3}, {:.3}] computed [{:.4}, {:.4}] (deltas {:+.4}, {:+.4})",
                        iv.coefficient,
                        iv.value,
                        iv.published.0,
                        iv.published.1,
                        iv.computed.0,
                        iv.computed.1,
                        iv.computed.0 - iv.published.0,
                        iv.computed.1 - iv.published.1
                    )?;
                }
            }
        }
        writeln!(f)?;
        if self.any_matched() {
            writeln!(
                f,
                "Variant reproducing the published statistics: {:?}",
                self.closest
            )?;
        } else {
            writeln!(
                f,
                "No variant reproduces every published statistic; closest: {:?}",
                self.closest
            )?;
        }
        if let Some(rows) = &self.calibration {
            writeln!(f)?;
            writeln!(
                f,
                "Calibration-based prediction (harmonic sum of per-qubit T2)"
            )?;
            writeln!(
                f,
                "{:>3} {:>12} {:>12} {:>12}  chain",
                "N", "pred (us)", "ref (us)", "sim (us)"
            )?;
            for r in rows {
                let sim = r
                    .simulated_us
                    .map_or("-".to_string(), |s| format!("{s:.3}"));
                let chain: Vec<String> = r.chain.iter().map(|q| q.to_string()).collect();
                writeln!(
                    f,
                    "{:>3} {:>12.3} {:>12.2} {:>12}  {}",
                    r.n_qubits,
                    r.predicted_us,
                    r.reference_us,
                    sim,
                    chain.join(" ")
                )?;
            }
        }
        Ok(())
    }
}
