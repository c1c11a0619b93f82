use super::{check_node, GraphError, NodeSet};

/// Undirected graph over named nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    names: Vec<String>,
    adj: Vec<NodeSet>,
}

impl Skeleton {
    pub fn empty(names: Vec<String>) -> Self {
        let p = names.len();
        Self { names, adj: vec![NodeSet::new(); p] }
    }

    pub fn complete(names: Vec<String>) -> Self {
        let p = names.len();
        let adj = (0..p).map(|i| (0..p).filter(|&j| j != i).collect()).collect();
        Self { names, adj }
    }

    pub fn from_edges(names: Vec<String>, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut sk = Self::empty(names);
        for &(u, v) in edges {
            sk.add_edge(u, v)?;
        }
        Ok(sk)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Adds `u - v`. Adding an existing edge is a no-op.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<(), GraphError> {
        check_node(self.len(), u)?;
        check_node(self.len(), v)?;
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        self.adj[u].insert(v);
        self.adj[v].insert(u);
        Ok(())
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        let removed = self.adj[u].remove(&v);
        self.adj[v].remove(&u);
        removed
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(&v)
    }

    pub fn neighbors(&self, v: usize) -> &NodeSet {
        &self.adj[v]
    }

    /// Unordered edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, nb) in self.adj.iter().enumerate() {
            out.extend(nb.range(u + 1..).map(|&v| (u, v)));
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(NodeSet::len).sum::<usize>() / 2
    }

    pub fn is_subgraph_of(&self, other: &Skeleton) -> bool {
        self.len() == other.len() && self.edges().iter().all(|&(u, v)| other.adjacent(u, v))
    }
}
