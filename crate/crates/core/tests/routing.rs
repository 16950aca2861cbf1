use std::collections::BTreeSet;

use ghz_core::topology::{
    find_chain, ibmqx5_reference_chain, minimal_chains, CouplingGraph, QubitChain,
};
use ghz_core::{QubitLabel, TopologyError};

/// Every simple path with `n` nodes, found by extending paths one node at a
/// time with no pruning, paired with its reversal count.
fn all_paths(g: &CouplingGraph, n: usize) -> Vec<(Vec<QubitLabel>, usize)> {
    let mut layer: Vec<Vec<QubitLabel>> = g.nodes().iter().map(|&q| vec![q]).collect();
    for _ in 1..n {
        let mut next = Vec::new();
        for path in &layer {
            let last = *path.last().unwrap();
            for &q in g.nodes() {
                if !path.contains(&q) && (g.has_edge(last, q) || g.has_edge(q, last)) {
                    let mut p = path.clone();
                    p.push(q);
                    next.push(p);
                }
            }
        }
        layer = next;
    }
    layer
        .into_iter()
        .map(|p| {
            let r = p.windows(2).filter(|w| !g.has_edge(w[0], w[1])).count();
            (p, r)
        })
        .collect()
}

#[test]
fn minimal_chains_match_exhaustive_enumeration() {
    let g = CouplingGraph::ibmqx5();
    for n in 1..=6 {
        let paths = all_paths(&g, n);
        let best = paths.iter().map(|p| p.1).min().unwrap();
        let expected: BTreeSet<Vec<QubitLabel>> = paths
            .into_iter()
            .filter(|p| p.1 == best)
            .map(|p| p.0)
            .collect();
        let found: BTreeSet<Vec<QubitLabel>> = minimal_chains(&g, n, None)
            .unwrap()
            .into_iter()
            .map(|c| c.qubits().to_vec())
            .collect();
        assert_eq!(found, expected, "n = {n}");
        let first = find_chain(&g, n, None).unwrap();
        assert_eq!(first.reversal_count(), best);
        assert_eq!(first.qubits(), expected.iter().next().unwrap().as_slice());
    }
}

#[test]
fn anchored_search_matches_enumeration() {
    let g = CouplingGraph::ibmqx5();
    for anchor in [1, 4, 8] {
        let paths: Vec<_> = all_paths(&g, 5)
            .into_iter()
            .filter(|p| p.0[0] == anchor)
            .collect();
        let best = paths.iter().map(|p| p.1).min().unwrap();
        let c = find_chain(&g, 5, Some(anchor)).unwrap();
        assert_eq!(c.head(), anchor);
        assert_eq!(c.reversal_count(), best);
    }
}

#[test]
fn reversing_every_edge_complements_reversal_counts() {
    let g = CouplingGraph::ibmqx5();
    let rev = g.reversed();
    for (path, r) in all_paths(&g, 4) {
        let c = QubitChain::new(&rev, path).unwrap();
        assert_eq!(c.reversal_count(), 3 - r);
    }
}

#[test]
fn reference_chains_are_legal_and_cheap() {
    let g = CouplingGraph::ibmqx5();
    for n in 1..=9 {
        let c = QubitChain::new(&g, ibmqx5_reference_chain(n).unwrap()).unwrap();
        assert_eq!(c.len(), n);
        assert_eq!(c.ghz_gate_count(), 1 + (n - 1) + 4 * c.reversal_count());
    }
    // The five-qubit line 1..5 needs one reversal: 9 gates.
    let five = QubitChain::new(&g, ibmqx5_reference_chain(5).unwrap()).unwrap();
    assert_eq!(five.reversal_count(), 1);
    assert_eq!(five.ghz_gate_count(), 9);
}

#[test]
fn every_size_up_to_the_graph_has_a_chain() {
    let g = CouplingGraph::ibmqx5();
    for n in 1..=9 {
        assert_eq!(find_chain(&g, n, None).unwrap().len(), n);
    }
    assert!(matches!(
        find_chain(&g, 17, None),
        Err(TopologyError::NoChain { .. })
    ));
}
