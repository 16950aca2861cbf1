use std::path::{Path, PathBuf};

use ghz_core::protocol::{derive_seed, run_delay_sweep, write_datasets_csv, Mode};
use ghz_core::{ParityDataset, QubitLabel};
use serde::Serialize;

use crate::config::ResolvedRun;
use crate::error::{CliError, Result};
use crate::output::{ensure_dir, write_file, HASH_PREFIX};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub config_hash: String,
    pub master_seed: u64,
    pub mode: Mode,
    pub files: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub n_qubits: usize,
    pub chain: Vec<QubitLabel>,
    pub tau_index: usize,
    pub tau_ns: f64,
    /// Sampling seed of each φ cell, in grid order.
    pub phi_seeds: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub config_hash: String,
}

pub fn dataset_file_name(n: usize, tau_index: usize) -> String {
    format!("parity_n{n:02}_tau{tau_index:03}.csv")
}

/// Runs every (N, τ) scan of the configuration and writes one CSV per scan
/// plus a manifest. Scans run on `run.workers` threads; results do not
/// depend on the thread count.
pub fn cmd_simulate(run: &ResolvedRun, out_dir: &Path) -> Result<SimulateOutcome> {
    ensure_dir(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.workers)
        .build()
        .map_err(|e| CliError::config("workers", e.to_string()))?;
    let sweeps: Vec<Vec<ParityDataset>> = pool.install(|| {
        run.plans
            .iter()
            .map(run_delay_sweep)
            .collect::<std::result::Result<_, _>>()
    })?;

    let mut files = Vec::new();
    let mut entries = Vec::new();
    for (plan, sweep) in run.plans.iter().zip(&sweeps) {
        let n = plan.n_qubits();
        for (tau_index, ds) in sweep.iter().enumerate() {
            let name = dataset_file_name(n, tau_index);
            let mut bytes = format!("{HASH_PREFIX}{}\n", run.config_hash).into_bytes();
            write_datasets_csv(std::slice::from_ref(ds), &mut bytes)?;
            files.push(write_file(&out_dir.join(&name), &bytes)?);
            entries.push(ManifestEntry {
                file: name,
                n_qubits: n,
                chain: plan.chain().qubits().to_vec(),
                tau_index,
                tau_ns: ds.tau_ns,
                phi_seeds: (0..ds.points.len())
                    .map(|j| derive_seed(plan.seed(), n, tau_index, j))
                    .collect(),
            });
        }
    }
    let manifest = Manifest {
        config_hash: run.config_hash.clone(),
        master_seed: run.plans.first().map_or(0, |p| p.seed()),
        mode: run.plans.first().map_or(Mode::Exact, |p| p.mode()),
        files: entries,
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    json.push('\n');
    let manifest_path = write_file(&out_dir.join(MANIFEST), json.as_bytes())?;
    Ok(SimulateOutcome {
        files,
        manifest: manifest_path,
        config_hash: run.config_hash.clone(),
    })
}
