//! The four-stage experiment: generate a GHZ state, wait τ, rotate every
//! qubit by U(φ), measure. Parity scans cover φ ∈ [0, π]; delay sweeps
//! repeat the scan for each τ.

use std::f64::consts::PI;
use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{build_ghz, Circuit, CircuitError, GateDurations};
use crate::simulator::{
    apply_delay, evolve, exact_parity, sample_counts, Counts, DensityMatrix, Layout, NoiseModel,
    SimError,
};
use crate::topology::{CouplingGraph, QubitChain, TopologyError};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("delay {0} ns is not part of the plan")]
    UnknownDelay(f64),
    #[error("dataset CSV: {0}")]
    Csv(String),
}

impl From<csv::Error> for ProtocolError {
    fn from(e: csv::Error) -> Self {
        ProtocolError::Csv(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Parity computed from ρ directly.
    Exact,
    /// Parity estimated from seeded shots.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayRealization {
    /// τ is a whole number of identity gates on every qubit.
    IdentityGates,
    /// τ is applied as one continuous idle of arbitrary length.
    Continuous,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentPlan {
    graph: CouplingGraph,
    chain: QubitChain,
    delays_ns: Vec<f64>,
    phi_grid_size: usize,
    shots: u64,
    mode: Mode,
    noise: NoiseModel,
    seed: u64,
    delay_realization: DelayRealization,
    durations: GateDurations,
}

impl ExperimentPlan {
    /// Defaults: τ = 0 only, 4N+1 angles, 1000 shots, exact mode, seed 0,
    /// identity-gate delays.
    pub fn new(
        graph: &CouplingGraph,
        chain: &QubitChain,
        noise: NoiseModel,
    ) -> Result<Self, ProtocolError> {
        let chain = QubitChain::new(graph, chain.qubits().to_vec())?;
        noise.validate()?;
        let n = chain.len();
        Ok(Self {
            graph: graph.clone(),
            chain,
            delays_ns: vec![0.0],
            phi_grid_size: 4 * n + 1,
            shots: 1000,
            mode: Mode::Exact,
            noise,
            seed: 0,
            delay_realization: DelayRealization::IdentityGates,
            durations: GateDurations::default(),
        })
    }

    /// Sets the delays; they are sorted and deduplicated.
    pub fn with_delays(mut self, delays_ns: Vec<f64>) -> Result<Self, ProtocolError> {
        if let Some(bad) = delays_ns.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
            return Err(ProtocolError::InvalidPlan(format!(
                "delay {bad} ns must be finite and nonnegative"
            )));
        }
        let mut delays = delays_ns;
        delays.sort_by(f64::total_cmp);
        delays.dedup();
        if delays.is_empty() {
            return Err(ProtocolError::InvalidPlan("no delays".into()));
        }
        self.delays_ns = delays;
        self.check_delays()?;
        Ok(self)
    }

    pub fn with_phi_grid_size(mut self, size: usize) -> Result<Self, ProtocolError> {
        if size < 2 {
            return Err(ProtocolError::InvalidPlan(format!(
                "phi grid needs at least 2 points, got {size}"
            )));
        }
        self.phi_grid_size = size;
        Ok(self)
    }

    pub fn with_shots(mut self, shots: u64) -> Result<Self, ProtocolError> {
        if shots == 0 {
            return Err(ProtocolError::InvalidPlan(
                "shots must be at least 1".into(),
            ));
        }
        self.shots = shots;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_delay_realization(
        mut self,
        realization: DelayRealization,
    ) -> Result<Self, ProtocolError> {
        self.delay_realization = realization;
        self.check_delays()?;
        Ok(self)
    }

    pub fn with_durations(mut self, durations: GateDurations) -> Result<Self, ProtocolError> {
        self.durations = durations;
        self.check_delays()?;
        Ok(self)
    }

    fn check_delays(&self) -> Result<(), ProtocolError> {
        if self.delay_realization == DelayRealization::IdentityGates {
            for &t in &self.delays_ns {
                identity_count(t, self.durations.id_ns)?;
            }
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.chain.len()
    }

    pub fn chain(&self) -> &QubitChain {
        &self.chain
    }

    pub fn graph(&self) -> &CouplingGraph {
        &self.graph
    }

    pub fn delays_ns(&self) -> &[f64] {
        &self.delays_ns
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    /// Uniform grid on [0, π], endpoints included.
    pub fn phi_grid(&self) -> Vec<f64> {
        phi_grid(self.phi_grid_size)
    }

    /// Generation plus delay, without the analysis stage. In continuous
    /// mode the delay is not part of the gate list.
    pub fn preparation_circuit(&self, tau_ns: f64) -> Result<Circuit, ProtocolError> {
        let mut c = build_ghz(&self.graph, &self.chain, self.durations)?;
        if self.delay_realization == DelayRealization::IdentityGates {
            c.append_delay(identity_count(tau_ns, self.durations.id_ns)?);
        }
        Ok(c)
    }

    /// The complete circuit for one (τ, φ) cell.
    pub fn circuit(&self, tau_ns: f64, phi: f64) -> Result<Circuit, ProtocolError> {
        let mut c = self.preparation_circuit(tau_ns)?;
        c.append_analysis_and_measure(phi);
        Ok(c)
    }
}

/// `size` uniformly spaced angles covering [0, π].
pub fn phi_grid(size: usize) -> Vec<f64> {
    match size {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..size)
            .map(|i| PI * i as f64 / (size - 1) as f64)
            .collect(),
    }
}

fn identity_count(tau_ns: f64, id_ns: f64) -> Result<usize, ProtocolError> {
    let k = (tau_ns / id_ns).round();
    if (k * id_ns - tau_ns).abs() > 1e-9 * id_ns.max(tau_ns) {
        return Err(ProtocolError::InvalidPlan(format!(
            "delay {tau_ns} ns is not a multiple of the {id_ns} ns identity gate"
        )));
    }
    Ok(k as usize)
}

/// Seed of one (N, τ, φ) cell, derived from the master seed by SplitMix64
/// mixing so that every cell is reproducible on its own.
pub fn derive_seed(master: u64, n_qubits: usize, tau_index: usize, phi_index: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    [n_qubits as u64, tau_index as u64, phi_index as u64]
        .into_iter()
        .fold(mix(master), |acc, v| mix(acc ^ mix(v)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityPoint {
    pub phi: f64,
    pub parity: f64,
    pub delta_p: f64,
    /// Zero for exact-mode points.
    pub shots: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityDataset {
    pub n_qubits: usize,
    pub tau_ns: f64,
    pub points: Vec<ParityPoint>,
}

impl ParityDataset {
    /// True when every point came from exact evaluation.
    pub fn is_exact(&self) -> bool {
        self.points.iter().all(|p| p.shots == 0 && p.delta_p == 0.0)
    }

    /// CSV with header `n_qubits,tau_ns,phi_rad,parity,delta_p,shots`.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), ProtocolError> {
        write_datasets_csv(std::slice::from_ref(self), writer)
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    n_qubits: usize,
    tau_ns: f64,
    phi_rad: f64,
    parity: f64,
    delta_p: f64,
    shots: u64,
}

pub fn write_datasets_csv<W: io::Write>(
    datasets: &[ParityDataset],
    writer: W,
) -> Result<(), ProtocolError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "n_qubits", "tau_ns", "phi_rad", "parity", "delta_p", "shots",
    ])?;
    for ds in datasets {
        for p in &ds.points {
            w.write_record([
                ds.n_qubits.to_string(),
                fmt_f64(ds.tau_ns),
                fmt_f64(p.phi),
                fmt_f64(p.parity),
                fmt_f64(p.delta_p),
                p.shots.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| ProtocolError::Csv(e.to_string()))?;
    Ok(())
}

const PARITY_ROUNDING: f64 = 1e-9;

/// Reads one or more datasets; rows are grouped by `(n_qubits, tau_ns)` in
/// order of first appearance and sorted by φ. Lines starting with `#` are
/// skipped.
pub fn read_datasets_csv<R: io::Read>(reader: R) -> Result<Vec<ParityDataset>, ProtocolError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out: Vec<ParityDataset> = Vec::new();
    for row in r.deserialize::<CsvRow>() {
        let row = row?;
        let point = ParityPoint {
            phi: row.phi_rad,
            parity: row.parity,
            delta_p: row.delta_p,
            shots: row.shots,
        };
        // Exact expectation values may exceed unity by rounding.
        if !(point.parity.abs() <= 1.0 + PARITY_ROUNDING) || !(point.delta_p >= 0.0) {
            return Err(ProtocolError::Csv(format!(
                "row with parity {} and delta_p {} is out of range",
                point.parity, point.delta_p
            )));
        }
        match out
            .iter_mut()
            .find(|d| d.n_qubits == row.n_qubits && d.tau_ns == row.tau_ns)
        {
            Some(ds) => ds.points.push(point),
            None => out.push(ParityDataset {
                n_qubits: row.n_qubits,
                tau_ns: row.tau_ns,
                points: vec![point],
            }),
        }
    }
    for ds in &mut out {
        ds.points.sort_by(|a, b| a.phi.total_cmp(&b.phi));
    }
    Ok(out)
}

/// `P = P_even − P_odd` and its error `2·sqrt(P_even (1 − P_even) / n)`.
///
/// `P_odd = 1 − P_even`, so the per-probability errors coincide and the
/// error of the difference is twice either.
pub fn parity_of_counts(counts: &Counts) -> Result<(f64, f64), SimError> {
    let n = counts.shots();
    if n == 0 {
        return Err(SimError::NoShots);
    }
    let even: u64 = counts
        .iter()
        .filter(|(bits, _)| bits.bytes().filter(|&b| b == b'1').count() % 2 == 0)
        .map(|(_, c)| c)
        .sum();
    let p_even = even as f64 / n as f64;
    let parity = 2.0 * p_even - 1.0;
    let delta = 2.0 * (p_even * (1.0 - p_even) / n as f64).sqrt();
    Ok((parity, delta))
}

/// Parity scan at delay `tau_ns` over the plan's φ grid.
///
/// The generation and delay stages do not depend on φ, so they are evolved
/// once; each φ cell then evolves its own copy through the analysis stage.
pub fn run_parity_scan(plan: &ExperimentPlan, tau_ns: f64) -> Result<ParityDataset, ProtocolError> {
    let tau_index = plan
        .delays_ns
        .iter()
        .position(|&t| t == tau_ns)
        .ok_or(ProtocolError::UnknownDelay(tau_ns))?;
    scan_at(plan, tau_index)
}

fn scan_at(plan: &ExperimentPlan, tau_index: usize) -> Result<ParityDataset, ProtocolError> {
    let tau_ns = plan.delays_ns[tau_index];
    let prep = plan.preparation_circuit(tau_ns)?;
    let layout = Layout::new(prep.register());
    let mut rho = DensityMatrix::zero_state(layout.len());
    evolve(&mut rho, &layout, prep.gates(), &plan.noise)?;
    if plan.delay_realization == DelayRealization::Continuous {
        apply_delay(&mut rho, &layout, tau_ns, &plan.noise)?;
    }
    let readout = plan.noise.readout_errors(layout.labels());
    let n = plan.n_qubits();
    let points = plan
        .phi_grid()
        .into_par_iter()
        .enumerate()
        .map(|(phi_index, phi)| -> Result<ParityPoint, ProtocolError> {
            let mut analysis = Circuit::with_durations(prep.register().to_vec(), plan.durations)?;
            analysis.append_analysis_and_measure(phi);
            let mut state = rho.clone();
            evolve(&mut state, &layout, analysis.gates(), &plan.noise)?;
            Ok(match plan.mode {
                Mode::Exact => ParityPoint {
                    phi,
                    parity: exact_parity(&state, &readout),
                    delta_p: 0.0,
                    shots: 0,
                },
                Mode::Sampled => {
                    let seed = derive_seed(plan.seed, n, tau_index, phi_index);
                    let counts = sample_counts(&state, &readout, plan.shots, seed)?;
                    let (parity, delta_p) = parity_of_counts(&counts)?;
                    ParityPoint {
                        phi,
                        parity,
                        delta_p,
                        shots: plan.shots,
                    }
                }
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ParityDataset {
        n_qubits: n,
        tau_ns,
        points,
    })
}

/// One parity scan per planned delay, ordered by τ.
pub fn run_delay_sweep(plan: &ExperimentPlan) -> Result<Vec<ParityDataset>, ProtocolError> {
    (0..plan.delays_ns.len())
        .map(|i| scan_at(plan, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn counts(pairs: &[(&str, u64)]) -> Counts {
        Counts::new(
            pairs
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect::<BTreeMap<_, _>>(),
        )
        .unwrap()
    }

    fn plan(n: usize) -> ExperimentPlan {
        let g = CouplingGraph::ibmqx5();
        let chain = crate::topology::find_chain(&g, n, None).unwrap();
        ExperimentPlan::new(&g, &chain, NoiseModel::noiseless()).unwrap()
    }

    #[test]
    fn balanced_counts_give_zero_parity() {
        let (p, dp) = parity_of_counts(&counts(&[("0", 500), ("1", 500)])).unwrap();
        assert_eq!(p, 0.0);
        assert!((dp - 2.0 * (0.25f64 / 1000.0).sqrt()).abs() < 1e-15);
        assert!((dp - 0.0316).abs() < 1e-4);
    }

    #[test]
    fn all_even_counts_give_unit_parity() {
        let (p, dp) = parity_of_counts(&counts(&[("00", 10), ("11", 30)])).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(dp, 0.0);
        let (p, _) = parity_of_counts(&counts(&[("01", 7)])).unwrap();
        assert_eq!(p, -1.0);
    }

    #[test]
    fn grid_has_4n_plus_1_points_on_closed_interval() {
        let p = plan(3);
        let grid = p.phi_grid();
        assert_eq!(grid.len(), 13);
        assert_eq!(grid[0], 0.0);
        assert_eq!(*grid.last().unwrap(), PI);
        let ds = run_parity_scan(&p, 0.0).unwrap();
        assert_eq!(ds.points.len(), 13);
        assert!(ds.is_exact());
    }

    #[test]
    fn plan_validation() {
        let p = plan(2);
        assert!(p.clone().with_delays(vec![100.0]).is_err());
        assert!(p.clone().with_delays(vec![-90.0]).is_err());
        assert!(p.clone().with_delays(vec![]).is_err());
        assert!(p.clone().with_shots(0).is_err());
        assert!(p.clone().with_phi_grid_size(1).is_err());
        let cont = p
            .clone()
            .with_delay_realization(DelayRealization::Continuous)
            .unwrap()
            .with_delays(vec![100.0, 0.0])
            .unwrap();
        assert_eq!(cont.delays_ns(), &[0.0, 100.0]);
        assert!(cont
            .with_delay_realization(DelayRealization::IdentityGates)
            .is_err());
        assert!(matches!(
            run_parity_scan(&p, 90.0),
            Err(ProtocolError::UnknownDelay(_))
        ));
    }

    #[test]
    fn full_circuit_contains_every_stage() {
        let p = plan(2).with_delays(vec![0.0, 360.0]).unwrap();
        let c = p.circuit(360.0, 0.3).unwrap();
        use crate::circuit::GateKind::*;
        assert_eq!(c.count(Id), 8);
        assert_eq!(c.count(U3), 2);
        assert_eq!(c.count(Measure), 2);
        assert_eq!(c.delay_ns(c.register()[0]), 360.0);
    }

    #[test]
    fn seeds_differ_per_cell() {
        let a = derive_seed(1, 2, 0, 0);
        assert_ne!(a, derive_seed(1, 2, 0, 1));
        assert_ne!(a, derive_seed(1, 2, 1, 0));
        assert_ne!(a, derive_seed(1, 3, 0, 0));
        assert_ne!(a, derive_seed(2, 2, 0, 0));
        assert_eq!(a, derive_seed(1, 2, 0, 0));
    }

    #[test]
    fn csv_round_trip_and_header() {
        let p = plan(2)
            .with_mode(Mode::Sampled)
            .with_delays(vec![0.0, 90.0])
            .unwrap();
        let sweep = run_delay_sweep(&p).unwrap();
        let mut buf = Vec::new();
        write_datasets_csv(&sweep, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n_qubits,tau_ns,phi_rad,parity,delta_p,shots\n"));
        let back = read_datasets_csv(format!("# comment\n{text}").as_bytes()).unwrap();
        assert_eq!(back, sweep);
    }

    #[test]
    fn csv_rejects_bad_rows() {
        let text = "n_qubits,tau_ns,phi_rad,parity,delta_p,shots\n1,0,0,1.5,0,0\n";
        assert!(read_datasets_csv(text.as_bytes()).is_err());
        let text = "n_qubits,tau_ns,phi_rad,parity\n1,0,0,0.5\n";
        assert!(read_datasets_csv(text.as_bytes()).is_err());
    }
}
