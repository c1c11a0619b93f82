use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use super::{check_node, GraphError, NodeSet, Skeleton};

/// Weighted directed graph; the ground truth of a linear SEM.
///
/// Acyclicity is not enforced on insertion. [`Dag::topological_sort`] is the
/// acyclicity check and every consumer that needs an order goes through it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dag {
    names: Vec<String>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    weights: BTreeMap<(usize, usize), f64>,
}

impl Dag {
    pub fn new(names: Vec<String>) -> Self {
        let p = names.len();
        Self {
            names,
            parents: vec![Vec::new(); p],
            children: vec![Vec::new(); p],
            weights: BTreeMap::new(),
        }
    }

    pub fn empty(p: usize) -> Self {
        Self::new(super::default_names(p))
    }

    /// Builds a graph from `(parent, child)` pairs, all with unit weight.
    pub fn from_edges(p: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = Self::empty(p);
        for &(u, v) in edges {
            g.add_edge(u, v, 1.0)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, parent: usize, child: usize, weight: f64) -> Result<(), GraphError> {
        check_node(self.len(), parent)?;
        check_node(self.len(), child)?;
        if parent == child {
            return Err(GraphError::SelfLoop(parent));
        }
        if self.weights.contains_key(&(parent, child)) || self.weights.contains_key(&(child, parent)) {
            return Err(GraphError::DuplicateEdge(parent, child));
        }
        insert_sorted(&mut self.parents[child], parent);
        insert_sorted(&mut self.children[parent], child);
        self.weights.insert((parent, child), weight);
        Ok(())
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

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn weight(&self, parent: usize, child: usize) -> Option<f64> {
        self.weights.get(&(parent, child)).copied()
    }

    pub fn has_edge(&self, parent: usize, child: usize) -> bool {
        self.weights.contains_key(&(parent, child))
    }

    /// Edges as `(parent, child, weight)` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.weights.iter().map(|(&(u, v), &w)| (u, v, w))
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    /// Kahn's algorithm with the smallest ready index emitted first.
    pub fn topological_sort(&self) -> Result<Vec<usize>, GraphError> {
        let p = self.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<usize>> =
            (0..p).filter(|&v| indegree[v] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(p);
        while let Some(Reverse(v)) = ready.pop() {
            order.push(v);
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(Reverse(c));
                }
            }
        }
        if order.len() == p {
            Ok(order)
        } else {
            Err(GraphError::CycleDetected)
        }
    }

    /// Nodes with a directed path into `v`, excluding `v`.
    pub fn ancestors(&self, v: usize) -> Result<NodeSet, GraphError> {
        check_node(self.len(), v)?;
        Ok(self.reach(&[v], |g, u| g.parents(u)))
    }

    /// Nodes reachable from `v` along directed edges, excluding `v`.
    pub fn descendants(&self, v: usize) -> Result<NodeSet, GraphError> {
        check_node(self.len(), v)?;
        Ok(self.reach(&[v], |g, u| g.children(u)))
    }

    fn reach<'a, F>(&'a self, start: &[usize], step: F) -> NodeSet
    where
        F: Fn(&'a Self, usize) -> &'a [usize],
    {
        let mut seen = vec![false; self.len()];
        let mut queue: VecDeque<usize> = start.iter().copied().collect();
        let mut out = NodeSet::new();
        while let Some(u) = queue.pop_front() {
            for &w in step(self, u) {
                if !seen[w] {
                    seen[w] = true;
                    out.insert(w);
                    queue.push_back(w);
                }
            }
        }
        for s in start {
            out.remove(s);
        }
        out
    }

    /// Reachability ("Bayes-ball") test for d-separation of `i` and `j` given `z`.
    ///
    /// A walk passes a non-collider only when it is outside `z`, and passes a
    /// collider only when the collider or one of its descendants is in `z`.
    pub fn d_separated(&self, i: usize, j: usize, z: &NodeSet) -> Result<bool, GraphError> {
        let p = self.len();
        check_node(p, i)?;
        check_node(p, j)?;
        for &v in z {
            check_node(p, v)?;
        }
        if i == j {
            return Err(GraphError::InvalidQuery(format!("endpoints coincide ({i})")));
        }
        if z.contains(&i) || z.contains(&j) {
            return Err(GraphError::InvalidQuery("conditioning set contains an endpoint".into()));
        }
        Ok(!self.d_connected_set(i, z)[j])
    }

    /// Marks every node d-connected to `source` given `z`.
    pub(crate) fn d_connected_set(&self, source: usize, z: &NodeSet) -> Vec<bool> {
        let p = self.len();
        let mut in_z = vec![false; p];
        for &v in z {
            in_z[v] = true;
        }
        // Nodes that are in z or have a descendant in z.
        let mut opens_collider = in_z.clone();
        let mut stack: Vec<usize> = z.iter().copied().collect();
        while let Some(u) = stack.pop() {
            for &pa in &self.parents[u] {
                if !opens_collider[pa] {
                    opens_collider[pa] = true;
                    stack.push(pa);
                }
            }
        }

        // visited[v][0]: arrived from a child (moving up); [1]: from a parent.
        let mut visited = vec![[false; 2]; p];
        let mut reachable = vec![false; p];
        let mut queue = VecDeque::from([(source, 0usize)]);
        while let Some((v, dir)) = queue.pop_front() {
            if visited[v][dir] {
                continue;
            }
            visited[v][dir] = true;
            if !in_z[v] {
                reachable[v] = true;
            }
            if dir == 0 {
                if !in_z[v] {
                    for &pa in &self.parents[v] {
                        queue.push_back((pa, 0));
                    }
                    for &c in &self.children[v] {
                        queue.push_back((c, 1));
                    }
                }
            } else {
                if !in_z[v] {
                    for &c in &self.children[v] {
                        queue.push_back((c, 1));
                    }
                }
                if opens_collider[v] {
                    for &pa in &self.parents[v] {
                        queue.push_back((pa, 0));
                    }
                }
            }
        }
        reachable[source] = false;
        reachable
    }

    pub fn skeleton(&self) -> Skeleton {
        let mut sk = Skeleton::empty(self.names.clone());
        for (u, v, _) in self.edges() {
            sk.add_edge(u, v).expect("dag edges are valid skeleton edges");
        }
        sk
    }

    /// Dense weighted adjacency `B` with `B[u][v]` the weight of `u → v`.
    pub fn weight_matrix(&self) -> nalgebra::DMatrix<f64> {
        let p = self.len();
        let mut b = nalgebra::DMatrix::zeros(p, p);
        for (u, v, w) in self.edges() {
            b[(u, v)] = w;
        }
        b
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

fn insert_sorted(list: &mut Vec<usize>, v: usize) {
    if let Err(pos) = list.binary_search(&v) {
        list.insert(pos, v);
    }
}
