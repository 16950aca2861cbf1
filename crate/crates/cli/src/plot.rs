//! Static SVG renderings of the analysis plot data.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use ghz_core::analysis::{AnalysisReport, ScalingModel, Weighting};
use plotters::prelude::*;

const SIZE: (u32, u32) = (800, 560);

type Series = Vec<(f64, f64)>;

struct Curve {
    label: String,
    points: Series,
    fitted: Series,
}

fn bounds(curves: &[Curve]) -> ((f64, f64), (f64, f64)) {
    let all = curves
        .iter()
        .flat_map(|c| c.points.iter().chain(&c.fitted))
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        return ((0.0, 1.0), (0.0, 1.0));
    }
    let pad = |lo: f64, hi: f64| {
        let d = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
        (lo - d, hi + d)
    };
    (pad(x0, x1), pad(y0, y1))
}

fn chart(title: &str, x_desc: &str, y_desc: &str, curves: &[Curve]) -> String {
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).expect("svg fill");
        let ((x0, x1), (y0, y1)) = bounds(curves);
        let mut ch = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 22))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(x0..x1, y0..y1)
            .expect("chart layout");
        ch.configure_mesh()
            .x_desc(x_desc)
            .y_desc(y_desc)
            .draw()
            .expect("mesh");
        for (i, c) in curves.iter().enumerate() {
            let color = Palette99::pick(i).to_rgba();
            ch.draw_series(
                c.points
                    .iter()
                    .filter(|(x, y)| x.is_finite() && y.is_finite())
                    .map(|&p| Circle::new(p, 3, color.filled())),
            )
            .expect("points")
            .label(c.label.clone())
            .legend(move |(x, y)| Circle::new((x + 10, y), 3, color.filled()));
            let fitted: Series = c
                .fitted
                .iter()
                .copied()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .collect();
            if fitted.len() > 1 {
                ch.draw_series(LineSeries::new(fitted, color.stroke_width(2)))
                    .expect("line");
            }
        }
        ch.configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .expect("legend");
        root.present().expect("svg present");
    }
    svg
}

fn coherence_curves(report: &AnalysisReport, log: bool) -> Vec<Curve> {
    let mut by_n: BTreeMap<usize, Curve> = BTreeMap::new();
    for p in &report.coherence_series {
        let c = by_n.entry(p.n_qubits).or_insert_with(|| Curve {
            label: format!("N = {}", p.n_qubits),
            points: Vec::new(),
            fitted: Vec::new(),
        });
        let (y, fy) = if log {
            (p.ln_coherence, p.ln_fitted)
        } else {
            (p.coherence, p.fitted)
        };
        c.points.push((p.tau_us, y));
        c.fitted.push((p.tau_us, fy));
    }
    by_n.into_values().collect()
}

fn parity_curves(report: &AnalysisReport) -> Vec<Curve> {
    // The shortest delay of each N, with the fitted sinusoid on a fine grid.
    let mut curves = Vec::new();
    let mut fits: Vec<_> = report.sinusoid_fits.iter().collect();
    fits.sort_by(|a, b| {
        a.n_qubits
            .cmp(&b.n_qubits)
            .then(a.tau_ns.total_cmp(&b.tau_ns))
    });
    fits.dedup_by_key(|f| f.n_qubits);
    for fit in fits {
        let points = report
            .parity_series
            .iter()
            .filter(|p| p.n_qubits == fit.n_qubits && p.tau_ns == fit.tau_ns)
            .map(|p| (p.phi, p.parity))
            .collect();
        let fitted = (0..=200)
            .map(|i| {
                let phi = PI * i as f64 / 200.0;
                (phi, fit.evaluate(phi))
            })
            .collect();
        curves.push(Curve {
            label: format!("N = {}, tau = {} ns", fit.n_qubits, fit.tau_ns),
            points,
            fitted,
        });
    }
    curves
}

fn ratio_curves(report: &AnalysisReport) -> Vec<Curve> {
    let points: Series = report
        .ratios
        .iter()
        .map(|r| (r.n_qubits as f64, r.ratio))
        .collect();
    let max_n = points.iter().map(|p| p.0).fold(1.0, f64::max);
    let mut curves = vec![Curve {
        label: "T2(1)/T2(N)".into(),
        points,
        fitted: Vec::new(),
    }];
    for model in ScalingModel::ALL {
        if let Some(fit) = report.scaling_fit(model, Weighting::Unweighted) {
            curves.push(Curve {
                label: model.to_string(),
                points: Vec::new(),
                fitted: (0..=50)
                    .map(|i| {
                        let n = 1.0 + (max_n - 1.0) * i as f64 / 50.0;
                        (n, fit.evaluate(n))
                    })
                    .collect(),
            });
        }
    }
    curves
}

/// File name and SVG text of every plot the report supports.
pub fn render_all(report: &AnalysisReport) -> Vec<(String, String)> {
    let mut out = Vec::new();
    if !report.coherence_series.is_empty() {
        out.push((
            "coherence_linear.svg".into(),
            chart(
                "Coherence vs delay",
                "tau (us)",
                "C(N, tau)",
                &coherence_curves(report, false),
            ),
        ));
        out.push((
            "coherence_log.svg".into(),
            chart(
                "Coherence vs delay (log scale)",
                "tau (us)",
                "ln C(N, tau)",
                &coherence_curves(report, true),
            ),
        ));
    }
    if !report.parity_series.is_empty() {
        out.push((
            "parity.svg".into(),
            chart(
                "Parity oscillations",
                "phi (rad)",
                "P",
                &parity_curves(report),
            ),
        ));
    }
    if !report.ratios.is_empty() {
        out.push((
            "ratios.svg".into(),
            chart(
                "Decoherence-rate ratios",
                "N",
                "T2(1)/T2(N)",
                &ratio_curves(report),
            ),
        ));
    }
    out
}
