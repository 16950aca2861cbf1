//! GHZ generation / delay / analysis / measurement circuits.

mod qasm;

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{CouplingGraph, QubitChain};
use crate::QubitLabel;

pub use qasm::{emit_qasm, parse_qasm};

/// 2×2 complex matrix acting on one qubit.
pub type Unitary2 = Matrix2<Complex64>;

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("qubit {0} is not in the circuit register")]
    NotInRegister(QubitLabel),
    #[error("duplicate qubit {0} in register")]
    DuplicateRegisterQubit(QubitLabel),
    #[error("{kind:?} expects {expected} operand(s), got {got}")]
    Arity {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("CNOT control and target are both {0}")]
    CnotSameQubit(QubitLabel),
    #[error("U3 gate is missing its angles")]
    MissingParams,
    #[error("CNOT({control}, {target}) is not a native direction of the coupling graph")]
    NonNativeCnot {
        control: QubitLabel,
        target: QubitLabel,
    },
    #[error("chain is not valid on this graph: {0}")]
    InvalidChain(String),
    #[error("OpenQASM line {line}: {message}")]
    Qasm { line: usize, message: String },
    #[error("circuit document: {0}")]
    Document(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    H,
    Cnot,
    Id,
    U3,
    Measure,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot => 2,
            _ => 1,
        }
    }
}

/// Angles of the device's `u3(θ, φ, λ)` gate, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct U3Params {
    pub theta: f64,
    pub phi: f64,
    pub lambda: f64,
}

impl U3Params {
    /// Angles normalised to (−π, π].
    pub fn new(theta: f64, phi: f64, lambda: f64) -> Self {
        Self {
            theta: normalize_angle(theta),
            phi: normalize_angle(phi),
            lambda: normalize_angle(lambda),
        }
    }

    /// `[[cos θ/2, −e^{iλ} sin θ/2], [e^{iφ} sin θ/2, e^{i(λ+φ)} cos θ/2]]`.
    pub fn matrix(&self) -> Unitary2 {
        let (s, c) = (self.theta / 2.0).sin_cos();
        Unitary2::new(
            Complex64::new(c, 0.0),
            -Complex64::from_polar(s, self.lambda),
            Complex64::from_polar(s, self.phi),
            Complex64::from_polar(c, self.lambda + self.phi),
        )
    }
}

/// Maps an angle into (−π, π]; values already in range are returned as is.
pub fn normalize_angle(x: f64) -> f64 {
    if x > -PI && x <= PI {
        return x;
    }
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        PI
    } else {
        y
    }
}

/// Gate durations in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateDurations {
    pub single_qubit_ns: f64,
    pub cnot_ns: f64,
    /// 80 ns identity pulse plus a 10 ns buffer.
    pub id_ns: f64,
    pub measure_ns: f64,
}

impl Default for GateDurations {
    fn default() -> Self {
        Self {
            single_qubit_ns: 90.0,
            cnot_ns: 250.0,
            id_ns: 90.0,
            measure_ns: 0.0,
        }
    }
}

impl GateDurations {
    pub fn of(&self, kind: GateKind) -> f64 {
        match kind {
            GateKind::H | GateKind::U3 => self.single_qubit_ns,
            GateKind::Cnot => self.cnot_ns,
            GateKind::Id => self.id_ns,
            GateKind::Measure => self.measure_ns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<QubitLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<U3Params>,
    pub duration_ns: f64,
}

impl Gate {
    fn checked(
        kind: GateKind,
        qubits: Vec<QubitLabel>,
        params: Option<U3Params>,
        duration_ns: f64,
    ) -> Result<Self, CircuitError> {
        if qubits.len() != kind.arity() {
            return Err(CircuitError::Arity {
                kind,
                expected: kind.arity(),
                got: qubits.len(),
            });
        }
        if kind == GateKind::Cnot && qubits[0] == qubits[1] {
            return Err(CircuitError::CnotSameQubit(qubits[0]));
        }
        if kind == GateKind::U3 && params.is_none() {
            return Err(CircuitError::MissingParams);
        }
        Ok(Self {
            kind,
            qubits,
            params,
            duration_ns,
        })
    }

    pub fn h(q: QubitLabel, durations: &GateDurations) -> Self {
        Self::checked(GateKind::H, vec![q], None, durations.single_qubit_ns).unwrap()
    }

    pub fn id(q: QubitLabel, durations: &GateDurations) -> Self {
        Self::checked(GateKind::Id, vec![q], None, durations.id_ns).unwrap()
    }

    pub fn measure(q: QubitLabel, durations: &GateDurations) -> Self {
        Self::checked(GateKind::Measure, vec![q], None, durations.measure_ns).unwrap()
    }

    pub fn u3(q: QubitLabel, params: U3Params, durations: &GateDurations) -> Self {
        Self::checked(
            GateKind::U3,
            vec![q],
            Some(params),
            durations.single_qubit_ns,
        )
        .unwrap()
    }

    pub fn cnot(
        control: QubitLabel,
        target: QubitLabel,
        durations: &GateDurations,
    ) -> Result<Self, CircuitError> {
        Self::checked(
            GateKind::Cnot,
            vec![control, target],
            None,
            durations.cnot_ns,
        )
    }

    /// Matrix of a single-qubit gate; `None` for CNOT and MEASURE.
    pub fn unitary(&self) -> Option<Unitary2> {
        match self.kind {
            GateKind::H => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                Some(Unitary2::new(h, h, h, -h))
            }
            GateKind::Id => Some(Unitary2::identity()),
            GateKind::U3 => self.params.map(|p| p.matrix()),
            GateKind::Cnot | GateKind::Measure => None,
        }
    }
}

/// An ordered gate list over a register of physical qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    register: Vec<QubitLabel>,
    gates: Vec<Gate>,
    #[serde(default)]
    durations: GateDurations,
}

impl Circuit {
    pub fn new(register: Vec<QubitLabel>) -> Result<Self, CircuitError> {
        Self::with_durations(register, GateDurations::default())
    }

    pub fn with_durations(
        register: Vec<QubitLabel>,
        durations: GateDurations,
    ) -> Result<Self, CircuitError> {
        for (i, q) in register.iter().enumerate() {
            if register[..i].contains(q) {
                return Err(CircuitError::DuplicateRegisterQubit(*q));
            }
        }
        Ok(Self {
            register,
            gates: Vec::new(),
            durations,
        })
    }

    pub fn register(&self) -> &[QubitLabel] {
        &self.register
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn durations(&self) -> &GateDurations {
        &self.durations
    }

    /// Register position of a label.
    pub fn position(&self, q: QubitLabel) -> Option<usize> {
        self.register.iter().position(|&r| r == q)
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        let gate = Gate::checked(gate.kind, gate.qubits, gate.params, gate.duration_ns)?;
        if let Some(&q) = gate.qubits.iter().find(|&&q| self.position(q).is_none()) {
            return Err(CircuitError::NotInRegister(q));
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    /// Appends `k` identity layers over the whole register.
    pub fn append_delay(&mut self, k: usize) {
        let d = self.durations;
        for _ in 0..k {
            for &q in &self.register {
                self.gates.push(Gate::id(q, &d));
            }
        }
    }

    /// Delay accumulated on `q` by identity gates, in ns.
    pub fn delay_ns(&self, q: QubitLabel) -> f64 {
        self.gates
            .iter()
            .filter(|g| g.kind == GateKind::Id && g.qubits[0] == q)
            .map(|g| g.duration_ns)
            .sum()
    }

    /// Appends the analysis rotation U(φ) (as a U3) and a measurement on
    /// every register qubit.
    pub fn append_analysis_and_measure(&mut self, phi: f64) {
        let d = self.durations;
        let params = analysis_rotation(phi).params;
        for &q in &self.register {
            self.gates.push(Gate::u3(q, params, &d));
        }
        for &q in &self.register {
            self.gates.push(Gate::measure(q, &d));
        }
    }

    /// Errors on the first CNOT that is not a native direction of `graph`.
    pub fn check_native(&self, graph: &CouplingGraph) -> Result<(), CircuitError> {
        for g in self.gates.iter().filter(|g| g.kind == GateKind::Cnot) {
            let (control, target) = (g.qubits[0], g.qubits[1]);
            if !graph.has_edge(control, target) {
                return Err(CircuitError::NonNativeCnot { control, target });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, CircuitError> {
        let raw: Circuit =
            serde_json::from_str(text).map_err(|e| CircuitError::Document(e.to_string()))?;
        let mut circuit = Circuit::with_durations(raw.register, raw.durations)?;
        for g in raw.gates {
            circuit.push(g)?;
        }
        Ok(circuit)
    }
}

/// GHZ preparation along `chain`: H on the head, then one CNOT per link.
///
/// A link (a, b) without a native a→b CNOT is realised as
/// `H(a) H(b) CNOT(b, a) H(a) H(b)`.
pub fn build_ghz(
    graph: &CouplingGraph,
    chain: &QubitChain,
    durations: GateDurations,
) -> Result<Circuit, CircuitError> {
    let chain = QubitChain::new(graph, chain.qubits().to_vec())
        .map_err(|e| CircuitError::InvalidChain(e.to_string()))?;
    let d = durations;
    let mut circuit = Circuit::with_durations(chain.qubits().to_vec(), d)?;
    circuit.push(Gate::h(chain.head(), &d))?;
    for (a, b) in chain.links() {
        if graph.has_edge(a, b) {
            circuit.push(Gate::cnot(a, b, &d)?)?;
        } else {
            circuit.push(Gate::h(a, &d))?;
            circuit.push(Gate::h(b, &d))?;
            circuit.push(Gate::cnot(b, a, &d)?)?;
            circuit.push(Gate::h(a, &d))?;
            circuit.push(Gate::h(b, &d))?;
        }
    }
    Ok(circuit)
}

/// The analysis rotation and its realisation as a device `u3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisRotation {
    pub matrix: Unitary2,
    pub params: U3Params,
}

/// `U(φ) = cos(π/4) I + i sin(π/4) [[0, e^{−iφ}], [e^{iφ}, 0]]`, realised by
/// `u3(θ = π/2, φ_U3 = φ + π/2, λ = −φ − π/2)`.
pub fn analysis_rotation(phi: f64) -> AnalysisRotation {
    let c = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let i_s = Complex64::new(0.0, FRAC_1_SQRT_2);
    let matrix = Unitary2::new(
        c,
        i_s * Complex64::from_polar(1.0, -phi),
        i_s * Complex64::from_polar(1.0, phi),
        c,
    );
    let params = U3Params::new(FRAC_PI_2, phi + FRAC_PI_2, -phi - FRAC_PI_2);
    AnalysisRotation { matrix, params }
}
