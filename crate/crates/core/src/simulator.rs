//! Exact density-matrix evolution under T1/T2 relaxation, collective
//! dephasing and depolarizing gate errors, plus seeded shot sampling with
//! readout error.

mod density;
mod noise;
mod sampling;

use std::collections::HashMap;

use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::QubitLabel;

pub use density::DensityMatrix;
pub use noise::{
    amplitude_damping_kraus, apply_collective_dephasing, apply_idle_noise, completeness_error,
    phase_flip_kraus, NoiseModel, QubitNoise,
};
pub use sampling::{exact_parity, sample_counts, Counts};

/// Tolerance for negative diagonal entries before sampling refuses a state.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("qubit {0} is not in the simulated register")]
    UnknownQubit(QubitLabel),
    #[error("register position {position} out of range for {n_qubits} qubits")]
    PositionOutOfRange { position: usize, n_qubits: usize },
    #[error("two-qubit operation on the same position {0}")]
    SameOperands(usize),
    #[error("dimension {0} is not a valid density-matrix size")]
    Dimension(usize),
    #[error("Kraus channel has no operators")]
    EmptyChannel,
    #[error("negative duration {0} ns")]
    NegativeDuration(f64),
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("numerical state error: {0}")]
    Unphysical(String),
    #[error("shot count must be at least 1")]
    NoShots,
    #[error("register has {register} qubits but state has {state}")]
    RegisterMismatch { register: usize, state: usize },
}

/// Maps physical labels to register positions.
#[derive(Debug, Clone)]
pub struct Layout {
    labels: Vec<QubitLabel>,
    positions: HashMap<QubitLabel, usize>,
}

impl Layout {
    pub fn new(register: &[QubitLabel]) -> Self {
        Self {
            labels: register.to_vec(),
            positions: register.iter().enumerate().map(|(i, &q)| (q, i)).collect(),
        }
    }

    pub fn position(&self, q: QubitLabel) -> Result<usize, SimError> {
        self.positions
            .get(&q)
            .copied()
            .ok_or(SimError::UnknownQubit(q))
    }

    pub fn labels(&self) -> &[QubitLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Applies one gate: its unitary, then depolarizing noise on the operands.
///
/// An identity gate only accrues idle noise (and collective dephasing) for
/// its duration. With `gate_time_noise`, every other gate also idles the
/// non-operand qubits for its duration. MEASURE leaves ρ unchanged; readout
/// is modelled by [`sample_counts`] / [`exact_parity`].
pub fn apply_gate(
    rho: &mut DensityMatrix,
    gate: &Gate,
    layout: &Layout,
    noise: &NoiseModel,
) -> Result<(), SimError> {
    check_layout(rho, layout)?;
    let positions = gate
        .qubits
        .iter()
        .map(|&q| layout.position(q))
        .collect::<Result<Vec<_>, _>>()?;
    match gate.kind {
        GateKind::Id => {
            let q = gate.qubits[0];
            apply_idle_noise(rho, positions[0], gate.duration_ns, noise.qubit(q))?;
            if let Some(t2c) = noise.collective_t2c_us() {
                apply_collective_dephasing(rho, gate.duration_ns, t2c)?;
            }
            return Ok(());
        }
        GateKind::H | GateKind::U3 => {
            let u = gate.unitary().expect("single-qubit gate has a matrix");
            rho.apply_unitary(&u, positions[0])?;
            rho.depolarize(noise.p1(), positions[0])?;
        }
        GateKind::Cnot => {
            rho.apply_cnot(positions[0], positions[1])?;
            rho.depolarize_pair(noise.p2(), positions[0], positions[1])?;
        }
        GateKind::Measure => return Ok(()),
    }
    if noise.gate_time_noise() && gate.duration_ns > 0.0 {
        for (pos, &label) in layout.labels().iter().enumerate() {
            if !positions.contains(&pos) {
                apply_idle_noise(rho, pos, gate.duration_ns, noise.qubit(label))?;
            }
        }
        if let Some(t2c) = noise.collective_t2c_us() {
            apply_collective_dephasing(rho, gate.duration_ns, t2c)?;
        }
    }
    Ok(())
}

/// Idles the whole register for `duration_ns`: per-qubit T1/T2 noise plus
/// collective dephasing.
pub fn apply_delay(
    rho: &mut DensityMatrix,
    layout: &Layout,
    duration_ns: f64,
    noise: &NoiseModel,
) -> Result<(), SimError> {
    check_layout(rho, layout)?;
    for (pos, &label) in layout.labels().iter().enumerate() {
        apply_idle_noise(rho, pos, duration_ns, noise.qubit(label))?;
    }
    if let Some(t2c) = noise.collective_t2c_us() {
        apply_collective_dephasing(rho, duration_ns, t2c)?;
    }
    Ok(())
}

fn check_layout(rho: &DensityMatrix, layout: &Layout) -> Result<(), SimError> {
    if rho.n_qubits() != layout.len() {
        return Err(SimError::RegisterMismatch {
            register: layout.len(),
            state: rho.n_qubits(),
        });
    }
    Ok(())
}

/// Evolves `rho` through `gates`.
///
/// A maximal run of consecutive identity gates forms one delay block: each
/// qubit idles for the sum of its identity durations, and collective
/// dephasing acts for the block's wall time (the longest per-qubit total).
/// The idle channels of one qubit form a semigroup and commute with
/// collective dephasing, so this equals gate-by-gate application of the
/// identity layers.
pub fn evolve(
    rho: &mut DensityMatrix,
    layout: &Layout,
    gates: &[Gate],
    noise: &NoiseModel,
) -> Result<(), SimError> {
    check_layout(rho, layout)?;
    let mut i = 0;
    while i < gates.len() {
        if gates[i].kind != GateKind::Id {
            apply_gate(rho, &gates[i], layout, noise)?;
            i += 1;
            continue;
        }
        let mut idle = vec![0.0; layout.len()];
        while i < gates.len() && gates[i].kind == GateKind::Id {
            let pos = layout.position(gates[i].qubits[0])?;
            if !(gates[i].duration_ns >= 0.0) {
                return Err(SimError::NegativeDuration(gates[i].duration_ns));
            }
            idle[pos] += gates[i].duration_ns;
            i += 1;
        }
        for (pos, &t) in idle.iter().enumerate() {
            apply_idle_noise(rho, pos, t, noise.qubit(layout.labels()[pos]))?;
        }
        if let Some(t2c) = noise.collective_t2c_us() {
            let wall = idle.iter().copied().fold(0.0, f64::max);
            apply_collective_dephasing(rho, wall, t2c)?;
        }
    }
    Ok(())
}

/// Runs `circuit` from `|0…0⟩`.
pub fn run_circuit(circuit: &Circuit, noise: &NoiseModel) -> Result<DensityMatrix, SimError> {
    let layout = Layout::new(circuit.register());
    let mut rho = DensityMatrix::zero_state(layout.len());
    evolve(&mut rho, &layout, circuit.gates(), noise)?;
    Ok(rho)
}
