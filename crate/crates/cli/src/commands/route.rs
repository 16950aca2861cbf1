use std::fmt;

use ghz_core::circuit::{build_ghz, emit_qasm, GateDurations};
use ghz_core::topology::{find_chain, CouplingGraph};
use ghz_core::QubitLabel;
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct RouteReport {
    pub n_qubits: usize,
    pub chain: Vec<QubitLabel>,
    pub reversals: usize,
    pub gate_count: usize,
    pub qasm: Option<String>,
}

/// Finds the cheapest chain of `n` qubits and, optionally, its GHZ
/// preparation circuit in OpenQASM.
pub fn cmd_route(
    graph: &CouplingGraph,
    n: usize,
    anchor: Option<QubitLabel>,
    with_qasm: bool,
) -> Result<RouteReport> {
    let chain = find_chain(graph, n, anchor)?;
    let qasm = if with_qasm {
        Some(emit_qasm(
            &build_ghz(graph, &chain, GateDurations::default())
                .map_err(|e| crate::error::CliError::Data(format!("building GHZ circuit: {e}")))?,
        ))
    } else {
        None
    };
    Ok(RouteReport {
        n_qubits: n,
        chain: chain.qubits().to_vec(),
        reversals: chain.reversal_count(),
        gate_count: chain.ghz_gate_count(),
        qasm,
    })
}

impl fmt::Display for RouteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let chain: Vec<String> = self.chain.iter().map(|q| q.to_string()).collect();
        writeln!(f, "n_qubits:   {}", self.n_qubits)?;
        writeln!(f, "chain:      {}", chain.join(" -> "))?;
        writeln!(f, "reversals:  {}", self.reversals)?;
        writeln!(f, "gate_count: {}", self.gate_count)?;
        if let Some(q) = &self.qasm {
            write!(f, "\n{q}")?;
        }
        Ok(())
    }
}
