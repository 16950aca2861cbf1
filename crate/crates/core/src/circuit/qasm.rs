//! OpenQASM 2.0 emission and a parser for the emitted subset
//! (`h`, `cx`, `id`, `u3`, `measure`, plus `barrier` which is ignored).

use std::fmt::Write;

use super::{normalize_angle, Circuit, CircuitError, Gate, GateDurations, GateKind, U3Params};
use crate::QubitLabel;

const REGISTER_PRAGMA: &str = "// register:";

/// Emits OpenQASM 2.0 text. Physical labels are used directly as indices
/// into a single `q` register; the circuit register is recorded in a comment
/// so that [`parse_qasm`] can restore it.
pub fn emit_qasm(circuit: &Circuit) -> String {
    let size = circuit
        .register()
        .iter()
        .copied()
        .max()
        .map_or(0, |m| m as usize + 1);
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let labels: Vec<String> = circuit.register().iter().map(|q| q.to_string()).collect();
    writeln!(out, "{REGISTER_PRAGMA} {}", labels.join(" ")).unwrap();
    writeln!(out, "qreg q[{size}];").unwrap();
    writeln!(out, "creg c[{size}];").unwrap();
    for g in circuit.gates() {
        let q = g.qubits[0];
        match g.kind {
            GateKind::H => writeln!(out, "h q[{q}];"),
            GateKind::Id => writeln!(out, "id q[{q}];"),
            GateKind::Cnot => writeln!(out, "cx q[{q}],q[{}];", g.qubits[1]),
            GateKind::Measure => writeln!(out, "measure q[{q}] -> c[{q}];"),
            GateKind::U3 => {
                let p = g.params.expect("validated U3 gate has params");
                writeln!(
                    out,
                    "u3({:?},{:?},{:?}) q[{q}];",
                    normalize_angle(p.theta),
                    normalize_angle(p.phi),
                    normalize_angle(p.lambda)
                )
            }
        }
        .unwrap();
    }
    out
}

/// Parses OpenQASM 2.0 text in the subset produced by [`emit_qasm`].
///
/// Without a register comment, the register is the sorted set of qubits
/// touched by gates.
pub fn parse_qasm(text: &str, durations: GateDurations) -> Result<Circuit, CircuitError> {
    let mut register: Option<Vec<QubitLabel>> = None;
    let mut gates = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| CircuitError::Qasm {
            line: line_no,
            message,
        };
        let trimmed = raw_line.trim();
        if let Some(rest) = trimmed.strip_prefix(REGISTER_PRAGMA) {
            let labels = rest
                .split_whitespace()
                .map(|t| t.parse::<QubitLabel>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| err(format!("bad register label: {e}")))?;
            register = Some(labels);
            continue;
        }
        let code = match trimmed.find("//") {
            Some(pos) => &trimmed[..pos],
            None => trimmed,
        };
        for stmt in code.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            if let Some(gate) = parse_statement(stmt, &durations).map_err(err)? {
                gates.push(gate);
            }
        }
    }
    let register = register.unwrap_or_else(|| {
        let mut all: Vec<QubitLabel> = gates.iter().flat_map(|g: &Gate| g.qubits.clone()).collect();
        all.sort_unstable();
        all.dedup();
        all
    });
    let mut circuit = Circuit::with_durations(register, durations)?;
    for g in gates {
        circuit.push(g)?;
    }
    Ok(circuit)
}

fn parse_statement(stmt: &str, d: &GateDurations) -> Result<Option<Gate>, String> {
    let (head, rest) = match stmt.find(|c: char| c.is_whitespace() || c == '(') {
        Some(pos) => (&stmt[..pos], stmt[pos..].trim()),
        None => (stmt, ""),
    };
    match head {
        "OPENQASM" | "include" | "qreg" | "creg" | "barrier" => Ok(None),
        "h" => Ok(Some(Gate::h(single_operand(rest)?, d))),
        "id" => Ok(Some(Gate::id(single_operand(rest)?, d))),
        "cx" => {
            let ops = operands(rest)?;
            if ops.len() != 2 {
                return Err(format!("cx expects 2 operands, got {}", ops.len()));
            }
            Gate::cnot(ops[0], ops[1], d)
                .map(Some)
                .map_err(|e| e.to_string())
        }
        "measure" => {
            let (lhs, _) = rest
                .split_once("->")
                .ok_or_else(|| "measure without '->' target".to_string())?;
            Ok(Some(Gate::measure(single_operand(lhs)?, d)))
        }
        "u3" => {
            let open = rest.find('(').ok_or("u3 without parameters")?;
            let close = rest.rfind(')').ok_or("u3 with unclosed parameter list")?;
            let args: Vec<f64> = rest[open + 1..close]
                .split(',')
                .map(eval_angle)
                .collect::<Result<_, _>>()?;
            let [theta, phi, lambda] = args[..] else {
                return Err(format!("u3 expects 3 parameters, got {}", args.len()));
            };
            let q = single_operand(&rest[close + 1..])?;
            Ok(Some(Gate::u3(q, U3Params::new(theta, phi, lambda), d)))
        }
        other => Err(format!("unsupported statement '{other}'")),
    }
}

fn single_operand(text: &str) -> Result<QubitLabel, String> {
    let ops = operands(text)?;
    match ops[..] {
        [q] => Ok(q),
        _ => Err(format!("expected one operand, got {}", ops.len())),
    }
}

fn operands(text: &str) -> Result<Vec<QubitLabel>, String> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            let inner = t
                .strip_prefix("q[")
                .and_then(|s| s.strip_suffix(']'))
                .ok_or_else(|| format!("expected operand q[i], got '{t}'"))?;
            inner
                .trim()
                .parse::<QubitLabel>()
                .map_err(|e| format!("bad qubit index '{inner}': {e}"))
        })
        .collect()
}

/// Evaluates a parameter expression: numbers, `pi`, unary minus, `*`, `/`.
fn eval_angle(expr: &str) -> Result<f64, String> {
    let expr = expr.trim();
    if expr.is_empty() {
        return Err("empty parameter".into());
    }
    if let Ok(v) = expr.parse::<f64>() {
        return Ok(v);
    }
    if let Some(rest) = expr.strip_prefix('-') {
        return eval_angle(rest).map(|v| -v);
    }
    // Left-associative product/quotient chain.
    let mut value = None;
    let mut op = '*';
    let mut start = 0;
    for (i, c) in expr
        .char_indices()
        .chain(std::iter::once((expr.len(), '*')))
    {
        if c == '*' || c == '/' {
            let term = expr[start..i].trim();
            let v = match term {
                "pi" => std::f64::consts::PI,
                t => t
                    .parse::<f64>()
                    .map_err(|_| format!("bad parameter '{expr}'"))?,
            };
            value = Some(match (value, op) {
                (None, _) => v,
                (Some(acc), '*') => acc * v,
                (Some(acc), _) => acc / v,
            });
            op = c;
            start = i + 1;
        }
    }
    value.ok_or_else(|| format!("bad parameter '{expr}'"))
}
