use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use ghz_core::analysis::{analyze, AnalysisOptions, AnalysisReport, SinusoidOptions};
use ghz_core::protocol::read_datasets_csv;
use ghz_core::ParityDataset;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::output::{ensure_dir, num, read_file, read_hash, write_file, Table};
use crate::plot;

#[derive(Debug, Clone, Copy, Default)]
pub struct AnalyzeOptions {
    /// Accept datasets produced by different configurations.
    pub force: bool,
    pub svg: bool,
    pub sinusoid_offset: bool,
}

#[derive(Debug, Clone)]
pub struct AnalyzeOutcome {
    pub report: AnalysisReport,
    pub config_hash: String,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    config_hash: &'a str,
    input_hashes: &'a BTreeSet<String>,
    sinusoid_offset: bool,
    #[serde(flatten)]
    report: &'a AnalysisReport,
}

/// Loads every `parity_*.csv` in `input_dir`, checking that they share one
/// config hash and do not repeat an (N, τ) cell.
pub fn load_datasets(
    input_dir: &Path,
    force: bool,
) -> Result<(Vec<ParityDataset>, BTreeSet<String>)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(input_dir)
        .map_err(|e| CliError::io(input_dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("parity_") && n.ends_with(".csv"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Data(format!(
            "no parity_*.csv datasets in {}",
            input_dir.display()
        )));
    }
    let mut hashes = BTreeSet::new();
    let mut datasets: Vec<ParityDataset> = Vec::new();
    for path in &paths {
        let text = read_file(path)?;
        hashes.insert(read_hash(&text).unwrap_or("none").to_string());
        let parsed = read_datasets_csv(text.as_bytes())
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        for ds in parsed {
            if datasets
                .iter()
                .any(|d| d.n_qubits == ds.n_qubits && d.tau_ns == ds.tau_ns)
            {
                return Err(CliError::Data(format!(
                    "{}: N = {}, tau = {} ns appears in more than one file",
                    path.display(),
                    ds.n_qubits,
                    ds.tau_ns
                )));
            }
            datasets.push(ds);
        }
    }
    if hashes.len() > 1 && !force {
        return Err(CliError::Data(format!(
            "datasets come from different configurations ({}); pass --force to analyse them together",
            hashes.iter().cloned().collect::<Vec<_>>().join(", ")
        )));
    }
    Ok((datasets, hashes))
}

pub fn cmd_analyze(
    input_dir: &Path,
    out_dir: &Path,
    opts: AnalyzeOptions,
) -> Result<AnalyzeOutcome> {
    let (datasets, hashes) = load_datasets(input_dir, opts.force)?;
    let report = analyze(
        &datasets,
        AnalysisOptions {
            sinusoid: SinusoidOptions {
                with_offset: opts.sinusoid_offset,
            },
        },
    )?;
    let hash = if hashes.len() == 1 {
        hashes.iter().next().cloned().unwrap_or_default()
    } else {
        "mixed".to_string()
    };
    ensure_dir(out_dir)?;
    let mut files = Vec::new();
    let mut put = |name: &str, bytes: Vec<u8>| -> Result<()> {
        files.push(write_file(&out_dir.join(name), &bytes)?);
        Ok(())
    };

    let mut t = Table::new(
        &hash,
        &[
            "n_qubits",
            "tau_ns",
            "amplitude",
            "amplitude_se",
            "phase_offset",
            "phase_offset_se",
            "offset",
            "offset_se",
            "rss",
            "weighted",
        ],
    );
    for f in &report.sinusoid_fits {
        t.row([
            f.n_qubits.to_string(),
            num(f.tau_ns),
            num(f.amplitude),
            num(f.amplitude_se),
            num(f.phase_offset),
            num(f.phase_offset_se),
            f.offset.map_or(String::new(), num),
            f.offset_se.map_or(String::new(), num),
            num(f.rss),
            f.weighted.to_string(),
        ]);
    }
    put("sinusoid_fits.csv", t.into_bytes())?;

    let mut t = Table::new(
        &hash,
        &[
            "n_qubits",
            "c_init",
            "c_init_se",
            "t2n_us",
            "t2n_se_us",
            "iterations",
            "rss",
            "weighted",
        ],
    );
    for d in &report.decay_fits {
        let f = &d.fit;
        t.row([
            d.n_qubits.to_string(),
            num(f.c_init),
            num(f.c_init_se),
            num(f.t2n_us),
            num(f.t2n_se_us),
            f.iterations.to_string(),
            num(f.rss),
            f.weighted.to_string(),
        ]);
    }
    put("decay_fits.csv", t.into_bytes())?;

    let mut t = Table::new(&hash, &["n_qubits", "ratio", "sigma"]);
    for r in &report.ratios {
        t.row([r.n_qubits.to_string(), num(r.ratio), num(r.sigma)]);
    }
    put("ratios.csv", t.into_bytes())?;

    put("scaling_fits.csv", scaling_table(&hash, &report.scaling))?;

    let mut t = Table::new(&hash, &["n_qubits", "initial_coherence"]);
    for &(n, c) in &report.initial_coherence {
        t.row([n.to_string(), num(c)]);
    }
    put("initial_coherence.csv", t.into_bytes())?;

    let mut t = Table::new(
        &hash,
        &[
            "n_qubits",
            "tau_us",
            "coherence",
            "sigma",
            "fitted",
            "ln_coherence",
            "ln_fitted",
        ],
    );
    for p in &report.coherence_series {
        t.row([
            p.n_qubits.to_string(),
            num(p.tau_us),
            num(p.coherence),
            num(p.sigma),
            num(p.fitted),
            num(p.ln_coherence),
            num(p.ln_fitted),
        ]);
    }
    put("plot_coherence.csv", t.into_bytes())?;

    let mut t = Table::new(
        &hash,
        &[
            "n_qubits", "tau_ns", "phi_rad", "parity", "delta_p", "fitted",
        ],
    );
    for p in &report.parity_series {
        t.row([
            p.n_qubits.to_string(),
            num(p.tau_ns),
            num(p.phi),
            num(p.parity),
            num(p.delta_p),
            num(p.fitted),
        ]);
    }
    put("plot_parity.csv", t.into_bytes())?;

    let doc = ReportDocument {
        config_hash: &hash,
        input_hashes: &hashes,
        sinusoid_offset: opts.sinusoid_offset,
        report: &report,
    };
    let mut json = serde_json::to_string_pretty(&doc).expect("report serialises");
    json.push('\n');
    put("report.json", json.into_bytes())?;

    if opts.svg {
        for (name, svg) in plot::render_all(&report) {
            put(&name, svg.into_bytes())?;
        }
    }
    Ok(AnalyzeOutcome {
        report,
        config_hash: hash,
        files,
    })
}

pub fn scaling_table(hash: &str, fits: &[ghz_core::analysis::ScalingFit]) -> Vec<u8> {
    let mut t = Table::new(
        hash,
        &[
            "weighting",
            "model",
            "coefficient",
            "value",
            "se",
            "ci_low",
            "ci_high",
            "r_squared",
            "r_squared_centered",
            "dof",
        ],
    );
    for f in fits {
        for c in &f.coefficients {
            t.row([
                format!("{:?}", f.weighting).to_lowercase(),
                format!("{:?}", f.model),
                c.name.clone(),
                num(c.value),
                num(c.se),
                num(c.ci_low),
                num(c.ci_high),
                num(f.r_squared),
                f.r_squared_centered.to_string(),
                f.dof.to_string(),
            ]);
        }
    }
    t.into_bytes()
}
