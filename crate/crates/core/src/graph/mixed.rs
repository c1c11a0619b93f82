use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{check_node, GraphError, NodeSet, Skeleton};

/// Endpoint mark of an edge in a mixed graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Tail,
    Arrow,
    Circle,
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mark::Tail => "tail",
            Mark::Arrow => "arrow",
            Mark::Circle => "circle",
        })
    }
}

/// Graph whose edges carry a [`Mark`] at each endpoint (MAG / PAG vocabulary).
///
/// `mark(u, v)` is the mark at `v` on the edge between `u` and `v`, so
/// `mark(a, b) == Some(Arrow)` reads "a *→ b".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedGraph {
    names: Vec<String>,
    marks: Vec<Option<Mark>>,
    adj: Vec<NodeSet>,
}

impl MixedGraph {
    pub fn empty(names: Vec<String>) -> Self {
        let p = names.len();
        Self { names, marks: vec![None; p * p], adj: vec![NodeSet::new(); p] }
    }

    /// Every skeleton edge becomes `∘−∘`.
    pub fn from_skeleton(sk: &Skeleton) -> Self {
        let mut g = Self::empty(sk.names().to_vec());
        for (u, v) in sk.edges() {
            g.set_edge(u, v, Mark::Circle, Mark::Circle);
        }
        g
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

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Inserts or overwrites the edge `u − v` with the given endpoint marks.
    pub fn add_edge(&mut self, u: usize, v: usize, mark_at_u: Mark, mark_at_v: Mark) -> Result<(), GraphError> {
        check_node(self.len(), u)?;
        check_node(self.len(), v)?;
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        self.set_edge(u, v, mark_at_u, mark_at_v);
        Ok(())
    }

    fn set_edge(&mut self, u: usize, v: usize, mark_at_u: Mark, mark_at_v: Mark) {
        let p = self.len();
        self.marks[u * p + v] = Some(mark_at_v);
        self.marks[v * p + u] = Some(mark_at_u);
        self.adj[u].insert(v);
        self.adj[v].insert(u);
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        let p = self.len();
        self.marks[u * p + v] = None;
        self.marks[v * p + u] = None;
        self.adj[v].remove(&u);
        self.adj[u].remove(&v)
    }

    /// Mark at `v` on the edge `u − v`, or `None` if nonadjacent.
    #[inline]
    pub fn mark(&self, u: usize, v: usize) -> Option<Mark> {
        self.marks[u * self.len() + v]
    }

    /// Overwrites the mark at `v` on an existing edge `u − v`.
    pub(crate) fn set_mark(&mut self, u: usize, v: usize, m: Mark) {
        let p = self.len();
        debug_assert!(self.marks[u * p + v].is_some());
        self.marks[u * p + v] = Some(m);
    }

    #[inline]
    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.mark(u, v).is_some()
    }

    pub fn neighbors(&self, v: usize) -> &NodeSet {
        &self.adj[v]
    }

    /// Edges as `(u, v, mark_at_u, mark_at_v)` with `u < v`, lexicographic.
    pub fn edges(&self) -> Vec<(usize, usize, Mark, Mark)> {
        let mut out = Vec::new();
        for (u, nb) in self.adj.iter().enumerate() {
            for &v in nb.range(u + 1..) {
                out.push((u, v, self.mark(v, u).unwrap(), self.mark(u, v).unwrap()));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(NodeSet::len).sum::<usize>() / 2
    }

    pub fn skeleton(&self) -> Skeleton {
        let pairs: Vec<(usize, usize)> = self.edges().iter().map(|e| (e.0, e.1)).collect();
        Skeleton::from_edges(self.names.clone(), &pairs).expect("mixed graph edges are valid")
    }

    /// Sets every endpoint mark to circle.
    pub fn reset_marks(&mut self) {
        for m in self.marks.iter_mut().flatten() {
            *m = Mark::Circle;
        }
    }

    pub fn has_circles(&self) -> bool {
        self.marks.contains(&Some(Mark::Circle))
    }

    /// Possible-D-SEP of `x`: nodes reachable from `x` along a path whose
    /// every interior vertex is a collider on the path or forms a triangle
    /// with its two path neighbours.
    ///
    /// Traversal runs over (previous, current) vertex pairs because both
    /// conditions depend on the edge the path arrived by.
    pub fn possible_d_sep(&self, x: usize) -> Result<NodeSet, GraphError> {
        check_node(self.len(), x)?;
        let p = self.len();
        let mut seen = vec![false; p * p];
        let mut out = NodeSet::new();
        let mut queue = VecDeque::new();
        for &b in &self.adj[x] {
            out.insert(b);
            seen[x * p + b] = true;
            queue.push_back((x, b));
        }
        while let Some((a, b)) = queue.pop_front() {
            for &c in &self.adj[b] {
                if c == a || c == x || seen[b * p + c] {
                    continue;
                }
                let collider = self.mark(a, b) == Some(Mark::Arrow) && self.mark(c, b) == Some(Mark::Arrow);
                if collider || self.adjacent(a, c) {
                    seen[b * p + c] = true;
                    out.insert(c);
                    queue.push_back((b, c));
                }
            }
        }
        Ok(out)
    }
}
