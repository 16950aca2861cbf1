//! Run configuration: a TOML file resolved into one experiment plan per N.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ghz_core::circuit::GateDurations;
use ghz_core::protocol::{DelayRealization, Mode};
use ghz_core::simulator::QubitNoise;
use ghz_core::topology::{find_chain, ibmqx5_reference_chain, CouplingGraph, QubitChain};
use ghz_core::{ExperimentPlan, NoiseModel, QubitLabel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::CalibrationFile;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Coupling-graph TOML; the bundled ibmqx5 map when absent.
    pub graph: Option<PathBuf>,
    pub n_min: usize,
    pub n_max: usize,
    #[serde(default)]
    pub chains: BTreeMap<String, Vec<QubitLabel>>,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub delays: DelayConfig,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_realization")]
    pub delay_realization: DelayRealization,
    /// Overrides the 4N+1 analysis-angle grid.
    pub phi_points: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

fn default_shots() -> u64 {
    1000
}

fn default_mode() -> Mode {
    Mode::Exact
}

fn default_realization() -> DelayRealization {
    DelayRealization::IdentityGates
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub t1_us: Option<f64>,
    pub t2_us: Option<f64>,
    #[serde(default)]
    pub readout_error: f64,
    pub collective_t2c_us: Option<f64>,
    #[serde(default)]
    pub p1: f64,
    #[serde(default)]
    pub p2: f64,
    #[serde(default)]
    pub gate_time_noise: bool,
    /// Per-qubit overrides.
    #[serde(default)]
    pub qubit: Vec<QubitOverride>,
    /// Calibration file supplying per-qubit T1, T2 and readout errors.
    pub calibration: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitOverride {
    pub label: QubitLabel,
    pub t1_us: Option<f64>,
    pub t2_us: Option<f64>,
    #[serde(default)]
    pub readout_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanScaling {
    /// Same span for every N.
    Constant,
    /// Span divided by N, for uncorrelated noise.
    InverseN,
    /// Span divided by N², for collective noise.
    InverseNSquared,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayConfig {
    /// Explicit delays in ns keyed by N; take precedence over the span.
    #[serde(default)]
    pub per_n_ns: BTreeMap<String, Vec<f64>>,
    pub points: Option<usize>,
    pub span_us: Option<f64>,
    #[serde(default = "default_scaling")]
    pub scaling: SpanScaling,
}

fn default_scaling() -> SpanScaling {
    SpanScaling::InverseN
}

/// A validated configuration with everything needed to run.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub graph: CouplingGraph,
    pub plans: Vec<ExperimentPlan>,
    pub workers: usize,
    pub output_dir: Option<PathBuf>,
    pub config_hash: String,
}

/// The hashed description of a run: every input that affects the data.
#[derive(Serialize)]
struct HashInput<'a> {
    format: u32,
    graph: &'a CouplingGraph,
    plans: &'a [ExperimentPlan],
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let span = e.span().map(|s| format!(" (bytes {}..{})", s.start, s.end));
            CliError::config(
                "config",
                format!("{}{}", e.message(), span.unwrap_or_default()),
            )
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config { path: p, message } => {
                CliError::config(format!("{}: {p}", path.display()), message)
            }
            other => other,
        })
    }

    /// Validates the configuration and builds a plan per N. Relative file
    /// paths are resolved against `base_dir`.
    pub fn resolve(&self, base_dir: &Path) -> Result<ResolvedRun> {
        let graph = match &self.graph {
            Some(p) => CouplingGraph::from_file(base_dir.join(p))
                .map_err(|e| CliError::config("graph", e.to_string()))?,
            None => CouplingGraph::ibmqx5(),
        };
        if self.n_min < 1 || self.n_min > self.n_max {
            return Err(CliError::config(
                "n_min",
                format!("need 1 ≤ n_min ≤ n_max, got {}..{}", self.n_min, self.n_max),
            ));
        }
        if self.n_max > graph.node_count() {
            return Err(CliError::config(
                "n_max",
                format!(
                    "{} exceeds the {} qubits of the graph",
                    self.n_max,
                    graph.node_count()
                ),
            ));
        }
        if self.shots == 0 {
            return Err(CliError::config("shots", "must be at least 1"));
        }
        for key in self.chains.keys().chain(self.delays.per_n_ns.keys()) {
            key.parse::<usize>().map_err(|_| {
                CliError::config(
                    format!("chains/delays key '{key}'"),
                    "keys must be qubit counts",
                )
            })?;
        }
        let noise = self.noise.build(base_dir)?;
        let durations = GateDurations::default();
        let mut plans = Vec::new();
        for n in self.n_min..=self.n_max {
            let chain = self.chain_for(&graph, n)?;
            let delays = self
                .delays
                .for_n(n, self.delay_realization, durations.id_ns)?;
            let field = |f: &str| format!("{f} (N = {n})");
            let mut plan = ExperimentPlan::new(&graph, &chain, noise.clone())
                .map_err(|e| CliError::config(field("noise"), e.to_string()))?
                .with_mode(self.mode)
                .with_seed(self.seed)
                .with_shots(self.shots)
                .map_err(|e| CliError::config("shots", e.to_string()))?
                .with_delay_realization(self.delay_realization)
                .map_err(|e| CliError::config("delay_realization", e.to_string()))?
                .with_delays(delays)
                .map_err(|e| CliError::config(field("delays"), e.to_string()))?;
            if let Some(points) = self.phi_points {
                plan = plan
                    .with_phi_grid_size(points)
                    .map_err(|e| CliError::config("phi_points", e.to_string()))?;
            }
            plans.push(plan);
        }
        let config_hash = hash_run(&graph, &plans);
        Ok(ResolvedRun {
            graph,
            plans,
            workers: self.workers,
            output_dir: self.output_dir.as_ref().map(|p| base_dir.join(p)),
            config_hash,
        })
    }

    fn chain_for(&self, graph: &CouplingGraph, n: usize) -> Result<QubitChain> {
        let path = format!("chains.{n}");
        if let Some(qubits) = self.chains.get(&n.to_string()) {
            if qubits.len() != n {
                return Err(CliError::config(
                    path,
                    format!("expected {n} qubits, got {}", qubits.len()),
                ));
            }
            return QubitChain::new(graph, qubits.clone())
                .map_err(|e| CliError::config(path, e.to_string()));
        }
        if graph.name() == Some("ibmqx5") {
            if let Some(q) = ibmqx5_reference_chain(n) {
                return QubitChain::new(graph, q)
                    .map_err(|e| CliError::config(path, e.to_string()));
            }
        }
        find_chain(graph, n, None).map_err(|e| CliError::config(path, e.to_string()))
    }
}

impl NoiseConfig {
    fn build(&self, base_dir: &Path) -> Result<NoiseModel> {
        let default = QubitNoise {
            t1_us: self.t1_us.unwrap_or(f64::INFINITY),
            t2_us: self.t2_us.unwrap_or(f64::INFINITY),
            readout_error: self.readout_error,
        };
        let mut model =
            NoiseModel::uniform(default).map_err(|e| CliError::config("noise", e.to_string()))?;
        if let Some(cal) = &self.calibration {
            let file = CalibrationFile::from_file(&base_dir.join(cal))?;
            for q in &file.qubit {
                model = model
                    .with_qubit(q.label, q.noise())
                    .map_err(|e| CliError::config("noise.calibration", e.to_string()))?;
            }
        }
        for (i, q) in self.qubit.iter().enumerate() {
            let noise = QubitNoise {
                t1_us: q.t1_us.unwrap_or(default.t1_us),
                t2_us: q.t2_us.unwrap_or(default.t2_us),
                readout_error: q.readout_error,
            };
            model = model
                .with_qubit(q.label, noise)
                .map_err(|e| CliError::config(format!("noise.qubit[{i}]"), e.to_string()))?;
        }
        if let Some(t2c) = self.collective_t2c_us {
            model = model
                .with_collective_dephasing(t2c)
                .map_err(|e| CliError::config("noise.collective_t2c_us", e.to_string()))?;
        }
        model = model
            .with_gate_errors(self.p1, self.p2)
            .map_err(|e| CliError::config("noise.p1/p2", e.to_string()))?
            .with_gate_time_noise(self.gate_time_noise);
        Ok(model)
    }
}

impl DelayConfig {
    fn for_n(&self, n: usize, realization: DelayRealization, id_ns: f64) -> Result<Vec<f64>> {
        if let Some(list) = self.per_n_ns.get(&n.to_string()) {
            for (i, &t) in list.iter().enumerate() {
                let path = format!("delays.per_n_ns.{n}[{i}]");
                if !t.is_finite() || t < 0.0 {
                    return Err(CliError::config(
                        path,
                        format!("{t} ns is not a valid delay"),
                    ));
                }
                if realization == DelayRealization::IdentityGates
                    && ((t / id_ns).round() * id_ns - t).abs() > 1e-9 * id_ns.max(t)
                {
                    return Err(CliError::config(
                        path,
                        format!("{t} ns is not a multiple of the {id_ns} ns identity gate"),
                    ));
                }
            }
            return Ok(list.clone());
        }
        let (Some(points), Some(span_us)) = (self.points, self.span_us) else {
            return Err(CliError::config(
                format!("delays.per_n_ns.{n}"),
                "no explicit delays and no points/span_us to generate them",
            ));
        };
        if points < 1 {
            return Err(CliError::config("delays.points", "must be at least 1"));
        }
        if !span_us.is_finite() || span_us < 0.0 {
            return Err(CliError::config(
                "delays.span_us",
                "must be finite and nonnegative",
            ));
        }
        let nf = n as f64;
        let span_ns = 1000.0
            * match self.scaling {
                SpanScaling::Constant => span_us,
                SpanScaling::InverseN => span_us / nf,
                SpanScaling::InverseNSquared => span_us / (nf * nf),
            };
        let step = if points > 1 {
            span_ns / (points - 1) as f64
        } else {
            0.0
        };
        Ok((0..points)
            .map(|i| {
                let t = step * i as f64;
                match realization {
                    DelayRealization::IdentityGates => (t / id_ns).round() * id_ns,
                    DelayRealization::Continuous => t,
                }
            })
            .collect())
    }
}

/// SHA-256 of the canonical JSON form of the resolved run.
pub fn hash_run(graph: &CouplingGraph, plans: &[ExperimentPlan]) -> String {
    let input = HashInput {
        format: 1,
        graph,
        plans,
    };
    let json = serde_json::to_string(&input).expect("plans serialise");
    hex::encode(Sha256::digest(json.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        n_min = 1
        n_max = 3
        [noise]
        t2_us = 48.34
        [delays]
        points = 5
        span_us = 10.0
    "#;

    #[test]
    fn resolves_reference_chains_and_rounded_delays() {
        let run = RunConfig::from_toml_str(BASE)
            .unwrap()
            .resolve(Path::new("."))
            .unwrap();
        assert_eq!(run.plans.len(), 3);
        assert_eq!(run.plans[2].chain().qubits(), &[1, 2, 3]);
        for plan in &run.plans {
            for t in plan.delays_ns() {
                assert_eq!((t / 90.0).fract(), 0.0);
            }
        }
        // Span 10 µs / 2 = 5 µs, 4 steps of 1250 ns rounded to 90 ns multiples.
        assert_eq!(
            run.plans[1].delays_ns(),
            &[0.0, 1260.0, 2520.0, 3780.0, 5040.0]
        );
        assert_eq!(run.config_hash.len(), 64);
    }

    #[test]
    fn hash_ignores_workers_but_not_seed() {
        let a = RunConfig::from_toml_str(BASE).unwrap();
        let mut b = a.clone();
        b.workers = 3;
        let mut c = a.clone();
        c.seed = 1;
        let h = |cfg: &RunConfig| cfg.resolve(Path::new(".")).unwrap().config_hash;
        assert_eq!(h(&a), h(&b));
        assert_ne!(h(&a), h(&c));
    }

    #[test]
    fn errors_name_the_field() {
        let bad = BASE.replace("t2_us = 48.34", "t2_us = -1.0");
        let e = RunConfig::from_toml_str(&bad)
            .unwrap()
            .resolve(Path::new("."))
            .unwrap_err();
        assert!(e.to_string().starts_with("noise:"), "{e}");

        let bad = format!("{BASE}\n[delays.per_n_ns]\n2 = [0.0, 100.0]\n");
        let e = RunConfig::from_toml_str(&bad)
            .unwrap()
            .resolve(Path::new("."))
            .unwrap_err();
        assert!(e.to_string().starts_with("delays.per_n_ns.2[1]:"), "{e}");

        let bad = format!("{BASE}\n[chains]\n2 = [1, 9]\n");
        let e = RunConfig::from_toml_str(&bad)
            .unwrap()
            .resolve(Path::new("."))
            .unwrap_err();
        assert!(e.to_string().starts_with("chains.2:"), "{e}");

        let bad = BASE.replace("n_max = 3", "n_max = 17");
        let e = RunConfig::from_toml_str(&bad)
            .unwrap()
            .resolve(Path::new("."))
            .unwrap_err();
        assert!(e.to_string().starts_with("n_max:"), "{e}");

        let e = RunConfig::from_toml_str(&format!("{BASE}\nbogus = 1\n")).unwrap_err();
        assert_eq!(e.category(), "config");
    }
}
