//! Two-layer Markov-blanket extraction around a target node.

use serde::{Deserialize, Serialize};

use crate::graph::{check_node, GraphError, Mark, MixedGraph, NodeSet};

/// Edge between the target and a first-layer node, with both endpoint marks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlanketEdge {
    pub node: String,
    pub mark_at_node: Mark,
    pub mark_at_target: Mark,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlanketReport {
    pub target: String,
    pub layer1: Vec<String>,
    pub layer2: Vec<String>,
    pub edges: Vec<BlanketEdge>,
    #[serde(skip)]
    pub target_index: usize,
    #[serde(skip)]
    pub layer1_index: NodeSet,
    #[serde(skip)]
    pub layer2_index: NodeSet,
}

/// Layer 1: nodes adjacent to `target`. Layer 2: nodes adjacent to layer 1,
/// minus the target and layer 1. Adjacency ignores endpoint marks; the marks
/// of target edges are reported alongside.
pub fn markov_blanket_layers(g: &MixedGraph, target: usize) -> Result<BlanketReport, GraphError> {
    check_node(g.len(), target)?;
    let layer1 = g.neighbors(target).clone();
    let mut layer2 = NodeSet::new();
    for &v in &layer1 {
        layer2.extend(g.neighbors(v).iter().copied().filter(|w| *w != target && !layer1.contains(w)));
    }
    let names = g.names();
    let edges = layer1
        .iter()
        .map(|&v| BlanketEdge {
            node: names[v].clone(),
            mark_at_node: g.mark(target, v).expect("adjacent"),
            mark_at_target: g.mark(v, target).expect("adjacent"),
        })
        .collect();
    Ok(BlanketReport {
        target: names[target].clone(),
        layer1: layer1.iter().map(|&v| names[v].clone()).collect(),
        layer2: layer2.iter().map(|&v| names[v].clone()).collect(),
        edges,
        target_index: target,
        layer1_index: layer1,
        layer2_index: layer2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Mark::*;

    fn graph(p: usize, e: &[(usize, usize)]) -> MixedGraph {
        let mut g = MixedGraph::empty(crate::graph::default_names(p));
        for &(u, v) in e {
            g.add_edge(u, v, Tail, Arrow).unwrap();
        }
        g
    }

    #[test]
    fn two_layers() {
        // C = 0, A = 1, B = 2, D = 3
        let r = markov_blanket_layers(&graph(4, &[(0, 1), (0, 2), (1, 3)]), 0).unwrap();
        assert_eq!(r.layer1_index, NodeSet::from([1, 2]));
        assert_eq!(r.layer2_index, NodeSet::from([3]));
        assert_eq!(r.edges[0], BlanketEdge { node: "X1".into(), mark_at_node: Arrow, mark_at_target: Tail });
    }

    #[test]
    fn isolated_and_complete() {
        let r = markov_blanket_layers(&graph(3, &[(1, 2)]), 0).unwrap();
        assert!(r.layer1.is_empty() && r.layer2.is_empty());
        let k4 = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let r = markov_blanket_layers(&k4, 0).unwrap();
        assert_eq!(r.layer1_index.len(), 3);
        assert!(r.layer2.is_empty());
        assert_eq!(markov_blanket_layers(&k4, 4), Err(GraphError::UnknownNode(4)));
    }
}
