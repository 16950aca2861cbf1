//! Directed coupling graphs and GHZ chain selection.
//!
//! A coupling graph lists the physical qubits of a device and the ordered
//! pairs `(control, target)` on which a CNOT is natively available. GHZ
//! states are prepared along a simple path ("chain") of qubits; every link
//! of the chain whose native direction runs against the chain costs four
//! extra Hadamards, so chains are ranked by their reversal count.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::QubitLabel;

/// Text of the bundled ibmqx5 coupling graph.
pub const IBMQX5_TOML: &str = include_str!("../data/ibmqx5.toml");

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("graph file parse error: {0}")]
    Parse(String),
    #[error("graph file I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("nodes[{index}]: duplicate node label {label}")]
    DuplicateNode { index: usize, label: QubitLabel },
    #[error("edges[{index}]: endpoint {label} is not a declared node")]
    DanglingEndpoint { index: usize, label: QubitLabel },
    #[error(
        "edges[{index}]: duplicate edge ({control}, {target}), first declared at edges[{first}]"
    )]
    DuplicateEdge {
        index: usize,
        first: usize,
        control: QubitLabel,
        target: QubitLabel,
    },
    #[error("edges[{index}]: self-loop on node {label}")]
    SelfLoop { index: usize, label: QubitLabel },
    #[error("edges[{index}]: expected [control, target], got {len} entries")]
    MalformedEdge { index: usize, len: usize },
    #[error("no chain of {n} qubits exists{}", anchor.map(|a| format!(" starting at node {a}")).unwrap_or_default())]
    NoChain {
        n: usize,
        anchor: Option<QubitLabel>,
    },
    #[error("invalid chain: {0}")]
    InvalidChain(String),
}

#[derive(Debug, Default, Deserialize)]
struct GraphFile {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    nodes: Vec<QubitLabel>,
    #[serde(default)]
    edges: Vec<Vec<QubitLabel>>,
}

/// Directed qubit adjacency: `(a, b)` present means CNOT(control=a, target=b)
/// is native.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingGraph {
    name: Option<String>,
    nodes: Vec<QubitLabel>,
    edges: BTreeSet<(QubitLabel, QubitLabel)>,
    #[serde(skip)]
    neighbors: BTreeMap<QubitLabel, Vec<QubitLabel>>,
}

impl CouplingGraph {
    /// Builds a graph, validating every node and edge.
    pub fn new(
        nodes: Vec<QubitLabel>,
        edges: impl IntoIterator<Item = (QubitLabel, QubitLabel)>,
    ) -> Result<Self, TopologyError> {
        let mut seen = HashSet::new();
        for (index, &label) in nodes.iter().enumerate() {
            if !seen.insert(label) {
                return Err(TopologyError::DuplicateNode { index, label });
            }
        }
        let mut first_index = BTreeMap::new();
        for (index, (control, target)) in edges.into_iter().enumerate() {
            for label in [control, target] {
                if !seen.contains(&label) {
                    return Err(TopologyError::DanglingEndpoint { index, label });
                }
            }
            if control == target {
                return Err(TopologyError::SelfLoop {
                    index,
                    label: control,
                });
            }
            if let Some(&first) = first_index.get(&(control, target)) {
                return Err(TopologyError::DuplicateEdge {
                    index,
                    first,
                    control,
                    target,
                });
            }
            first_index.insert((control, target), index);
        }
        let edges: BTreeSet<_> = first_index.into_keys().collect();
        Ok(Self::assemble(None, nodes, edges))
    }

    fn assemble(
        name: Option<String>,
        nodes: Vec<QubitLabel>,
        edges: BTreeSet<(QubitLabel, QubitLabel)>,
    ) -> Self {
        let mut neighbors: BTreeMap<QubitLabel, Vec<QubitLabel>> =
            nodes.iter().map(|&n| (n, Vec::new())).collect();
        for &(a, b) in &edges {
            neighbors.get_mut(&a).unwrap().push(b);
            neighbors.get_mut(&b).unwrap().push(a);
        }
        for list in neighbors.values_mut() {
            list.sort_unstable();
            list.dedup();
        }
        Self {
            name,
            nodes,
            edges,
            neighbors,
        }
    }

    /// Parses a graph document (`nodes = [...]`, `edges = [[c, t], ...]`).
    pub fn from_toml_str(text: &str) -> Result<Self, TopologyError> {
        let file: GraphFile =
            toml::from_str(text).map_err(|e| TopologyError::Parse(e.to_string()))?;
        let mut pairs = Vec::with_capacity(file.edges.len());
        for (index, edge) in file.edges.iter().enumerate() {
            match edge.as_slice() {
                &[c, t] => pairs.push((c, t)),
                other => {
                    return Err(TopologyError::MalformedEdge {
                        index,
                        len: other.len(),
                    })
                }
            }
        }
        let mut graph = Self::new(file.nodes, pairs)?;
        graph.name = file.name;
        Ok(graph)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, TopologyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TopologyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// The bundled 16-qubit ibmqx5 device.
    pub fn ibmqx5() -> Self {
        Self::from_toml_str(IBMQX5_TOML).expect("bundled ibmqx5 graph is valid")
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn nodes(&self) -> &[QubitLabel] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (QubitLabel, QubitLabel)> + '_ {
        self.edges.iter().copied()
    }

    pub fn contains_node(&self, label: QubitLabel) -> bool {
        self.neighbors.contains_key(&label)
    }

    /// True when CNOT(control, target) is native.
    pub fn has_edge(&self, control: QubitLabel, target: QubitLabel) -> bool {
        self.edges.contains(&(control, target))
    }

    /// True when the two nodes are coupled in either direction.
    pub fn adjacent(&self, a: QubitLabel, b: QubitLabel) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    /// Undirected neighbours, sorted by label.
    pub fn neighbors(&self, label: QubitLabel) -> &[QubitLabel] {
        self.neighbors.get(&label).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Same nodes with every edge direction flipped.
    pub fn reversed(&self) -> Self {
        let edges = self.edges.iter().map(|&(a, b)| (b, a)).collect();
        Self::assemble(self.name.clone(), self.nodes.clone(), edges)
    }

    /// 1 when the link a→b must be realised by reversing a native b→a CNOT.
    fn link_cost(&self, a: QubitLabel, b: QubitLabel) -> usize {
        usize::from(!self.has_edge(a, b))
    }
}

/// A simple path of qubits along which a GHZ state is fanned out.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QubitChain {
    qubits: Vec<QubitLabel>,
    reversal_count: usize,
}

impl QubitChain {
    /// Validates `qubits` as a simple path on `graph`.
    pub fn new(graph: &CouplingGraph, qubits: Vec<QubitLabel>) -> Result<Self, TopologyError> {
        if qubits.is_empty() {
            return Err(TopologyError::InvalidChain("chain is empty".into()));
        }
        let mut seen = HashSet::new();
        for &q in &qubits {
            if !graph.contains_node(q) {
                return Err(TopologyError::InvalidChain(format!(
                    "qubit {q} is not a node of the graph"
                )));
            }
            if !seen.insert(q) {
                return Err(TopologyError::InvalidChain(format!(
                    "qubit {q} appears more than once"
                )));
            }
        }
        let mut reversal_count = 0;
        for pair in qubits.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if !graph.adjacent(a, b) {
                return Err(TopologyError::InvalidChain(format!(
                    "qubits {a} and {b} are not coupled"
                )));
            }
            reversal_count += graph.link_cost(a, b);
        }
        Ok(Self {
            qubits,
            reversal_count,
        })
    }

    pub fn qubits(&self) -> &[QubitLabel] {
        &self.qubits
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn head(&self) -> QubitLabel {
        self.qubits[0]
    }

    /// Number of links whose native CNOT direction runs against the chain.
    pub fn reversal_count(&self) -> usize {
        self.reversal_count
    }

    /// Consecutive `(a, b)` pairs along the chain.
    pub fn links(&self) -> impl Iterator<Item = (QubitLabel, QubitLabel)> + '_ {
        self.qubits.windows(2).map(|w| (w[0], w[1]))
    }

    /// Gate count of the GHZ preparation circuit along this chain.
    pub fn ghz_gate_count(&self) -> usize {
        1 + (self.len() - 1) + 4 * self.reversal_count
    }
}

struct ChainSearch<'a> {
    graph: &'a CouplingGraph,
    n: usize,
    path: Vec<QubitLabel>,
    on_path: HashSet<QubitLabel>,
    best_cost: usize,
    collect_all: bool,
    found: Vec<Vec<QubitLabel>>,
}

impl ChainSearch<'_> {
    fn extend(&mut self, cost: usize) {
        if cost > self.best_cost || (!self.collect_all && cost == self.best_cost) {
            // Paths are enumerated in lexicographic order, so an equal-cost
            // path found later can never win the tie-break.
            return;
        }
        if self.path.len() == self.n {
            if cost < self.best_cost {
                self.best_cost = cost;
                self.found.clear();
            }
            self.found.push(self.path.clone());
            return;
        }
        let last = *self.path.last().unwrap();
        for &next in self.graph.neighbors(last) {
            if self.on_path.contains(&next) {
                continue;
            }
            self.path.push(next);
            self.on_path.insert(next);
            self.extend(cost + self.graph.link_cost(last, next));
            self.on_path.remove(&next);
            self.path.pop();
        }
    }
}

fn search_chains(
    graph: &CouplingGraph,
    n: usize,
    anchor: Option<QubitLabel>,
    collect_all: bool,
) -> Result<Vec<QubitChain>, TopologyError> {
    let no_chain = TopologyError::NoChain { n, anchor };
    if n == 0 || n > graph.node_count() {
        return Err(no_chain);
    }
    let starts: Vec<QubitLabel> = match anchor {
        Some(a) if graph.contains_node(a) => vec![a],
        Some(_) => return Err(no_chain),
        None => {
            let mut all = graph.nodes().to_vec();
            all.sort_unstable();
            all
        }
    };
    let mut search = ChainSearch {
        graph,
        n,
        path: Vec::with_capacity(n),
        on_path: HashSet::new(),
        best_cost: usize::MAX,
        collect_all,
        found: Vec::new(),
    };
    for start in starts {
        search.path.push(start);
        search.on_path.insert(start);
        search.extend(0);
        search.on_path.clear();
        search.path.clear();
    }
    if search.found.is_empty() {
        return Err(no_chain);
    }
    let reversal_count = search.best_cost;
    Ok(search
        .found
        .into_iter()
        .map(|qubits| QubitChain {
            qubits,
            reversal_count,
        })
        .collect())
}

/// Exhaustive search for an `n`-qubit chain with the fewest reversed links.
///
/// Ties are broken by the lexicographically smallest label sequence. With
/// `anchor`, only chains starting at that node are considered.
pub fn find_chain(
    graph: &CouplingGraph,
    n: usize,
    anchor: Option<QubitLabel>,
) -> Result<QubitChain, TopologyError> {
    search_chains(graph, n, anchor, false).map(|mut v| v.swap_remove(0))
}

/// Every `n`-qubit chain attaining the minimal reversal count, in
/// lexicographic order.
pub fn minimal_chains(
    graph: &CouplingGraph,
    n: usize,
    anchor: Option<QubitLabel>,
) -> Result<Vec<QubitChain>, TopologyError> {
    search_chains(graph, n, anchor, true)
}

/// Physical chains used on ibmqx5 in the reference experiment: qubits
/// 1..=n for n ≤ 6, hand-picked chains for 7 and 8, and the 9-qubit chain
/// whose parity oscillations could not be resolved on hardware.
pub fn ibmqx5_reference_chain(n: usize) -> Option<Vec<QubitLabel>> {
    match n {
        1..=6 => Some((1..=n as QubitLabel).collect()),
        7 => Some(vec![4, 13, 12, 11, 10, 9, 8]),
        8 => Some(vec![3, 4, 13, 12, 11, 10, 9, 8]),
        9 => Some(vec![4, 3, 14, 13, 12, 11, 10, 9, 8]),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_ibmqx5_loads() {
        let g = CouplingGraph::ibmqx5();
        assert_eq!(g.node_count(), 16);
        assert_eq!(g.edges().count(), 22);
        assert!(g.nodes().iter().all(|&n| g.neighbors(n).len() <= 3));
        assert!(g.nodes().iter().all(|&n| g.neighbors(n).len() >= 2));
    }

    #[test]
    fn empty_graph_is_valid() {
        let g = CouplingGraph::from_toml_str("nodes = []\nedges = []\n").unwrap();
        assert_eq!(g.node_count(), 0);
        assert!(CouplingGraph::from_toml_str("").unwrap().nodes().is_empty());
    }

    #[test]
    fn dangling_endpoint_is_reported_with_index() {
        let err =
            CouplingGraph::from_toml_str("nodes = [0, 1]\nedges = [[0, 1], [1, 99]]").unwrap_err();
        assert!(matches!(
            err,
            TopologyError::DanglingEndpoint {
                index: 1,
                label: 99
            }
        ));
        assert!(err.to_string().contains("edges[1]"));
    }

    #[test]
    fn duplicate_and_malformed_edges_rejected() {
        let dup = CouplingGraph::from_toml_str("nodes = [0, 1]\nedges = [[0, 1], [0, 1]]");
        assert!(matches!(
            dup,
            Err(TopologyError::DuplicateEdge {
                index: 1,
                first: 0,
                ..
            })
        ));
        let bad = CouplingGraph::from_toml_str("nodes = [0, 1]\nedges = [[0, 1, 1]]");
        assert!(matches!(
            bad,
            Err(TopologyError::MalformedEdge { index: 0, len: 3 })
        ));
        let lp = CouplingGraph::from_toml_str("nodes = [0]\nedges = [[0, 0]]");
        assert!(matches!(lp, Err(TopologyError::SelfLoop { .. })));
        let parse = CouplingGraph::from_toml_str("nodes = [0, 1\n");
        assert!(matches!(parse, Err(TopologyError::Parse(msg)) if msg.contains("line")));
    }

    #[test]
    fn opposite_directions_are_distinct_edges() {
        let g = CouplingGraph::new(vec![0, 1], [(0, 1), (1, 0)]).unwrap();
        assert_eq!(QubitChain::new(&g, vec![1, 0]).unwrap().reversal_count(), 0);
    }

    #[test]
    fn reference_five_qubit_chain_has_one_reversal_at_4_5() {
        let g = CouplingGraph::ibmqx5();
        let chain = QubitChain::new(&g, vec![1, 2, 3, 4, 5]).unwrap();
        assert_eq!(chain.reversal_count(), 1);
        assert!(!g.has_edge(4, 5) && g.has_edge(5, 4));
        assert_eq!(chain.ghz_gate_count(), 9);
    }

    #[test]
    fn reference_chains_are_legal() {
        let g = CouplingGraph::ibmqx5();
        for n in 1..=9 {
            let qubits = ibmqx5_reference_chain(n).unwrap();
            let chain = QubitChain::new(&g, qubits).unwrap();
            assert_eq!(chain.len(), n);
        }
    }

    #[test]
    fn invalid_chains_rejected() {
        let g = CouplingGraph::ibmqx5();
        assert!(QubitChain::new(&g, vec![1, 3]).is_err());
        assert!(QubitChain::new(&g, vec![1, 2, 1]).is_err());
        assert!(QubitChain::new(&g, vec![1, 42]).is_err());
        assert!(QubitChain::new(&g, vec![]).is_err());
    }

    #[test]
    fn single_node_chain() {
        let g = CouplingGraph::ibmqx5();
        let c = find_chain(&g, 1, None).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.reversal_count(), 0);
        assert_eq!(c.qubits(), &[0]);
        assert_eq!(find_chain(&g, 1, Some(7)).unwrap().qubits(), &[7]);
    }

    #[test]
    fn too_long_chain_is_an_error() {
        let g = CouplingGraph::ibmqx5();
        assert!(matches!(
            find_chain(&g, 17, None),
            Err(TopologyError::NoChain { n: 17, .. })
        ));
        assert!(find_chain(&g, 0, None).is_err());
        assert!(find_chain(&g, 2, Some(99)).is_err());
    }

    #[test]
    fn no_chain_in_disconnected_graph() {
        let g = CouplingGraph::new(vec![0, 1, 2, 3], [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(
            find_chain(&g, 3, None),
            Err(TopologyError::NoChain { n: 3, anchor: None })
        ));
    }

    #[test]
    fn anchored_search_starts_at_anchor() {
        let g = CouplingGraph::ibmqx5();
        let c = find_chain(&g, 5, Some(1)).unwrap();
        assert_eq!(c.head(), 1);
    }

    #[test]
    fn minimal_chains_share_the_cost_of_find_chain() {
        let g = CouplingGraph::ibmqx5();
        for n in 1..=6 {
            let best = find_chain(&g, n, None).unwrap();
            let all = minimal_chains(&g, n, None).unwrap();
            assert_eq!(all[0], best);
            assert!(all
                .iter()
                .all(|c| c.reversal_count() == best.reversal_count()));
            assert!(all.windows(2).all(|w| w[0].qubits() < w[1].qubits()));
        }
    }
}
