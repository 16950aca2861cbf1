//! Simulation and analysis of GHZ-state decoherence on a directed-coupling
//! superconducting processor.
//!
//! The crate is organised along the experiment pipeline:
//!
//! - [`topology`]: directed coupling graphs and GHZ chain selection.
//! - [`circuit`]: generation / delay / analysis / measurement circuits and
//!   their OpenQASM 2.0 form.
//! - [`simulator`]: exact density-matrix evolution under T1/T2, collective
//!   dephasing, depolarizing gate errors and readout errors, plus seeded shot
//!   sampling.
//! - [`protocol`]: parity scans over the analysis angle and delay sweeps.
//! - [`analysis`]: sinusoid, exponential-decay and scaling-law fits.

// Range checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod circuit;
pub mod protocol;
pub mod simulator;
pub mod topology;

pub use analysis::AnalysisError;
pub use circuit::{Circuit, CircuitError, Gate, GateKind};
pub use protocol::{ExperimentPlan, ParityDataset, ParityPoint, ProtocolError};
pub use simulator::{DensityMatrix, NoiseModel, SimError};
pub use topology::{CouplingGraph, QubitChain, TopologyError};

/// Opaque physical qubit label, as used in the coupling-graph file.
pub type QubitLabel = u32;
