use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Dag, GraphError, Mark, MixedGraph, Skeleton};

/// On-disk graph document shared by DAGs, skeletons and PAGs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub u: String,
    pub v: String,
    pub mark_at_u: Mark,
    pub mark_at_v: Mark,
    /// SEM coefficient; only written for DAGs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

impl GraphJson {
    pub fn to_string_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph documents always serialize")
    }

    pub fn parse(text: &str) -> Result<Self, GraphError> {
        serde_json::from_str(text).map_err(|e| GraphError::Schema(e.to_string()))
    }

    fn index(&self, name: &str) -> Result<usize, GraphError> {
        self.nodes
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| GraphError::UnknownName(name.to_string()))
    }

    pub fn to_mixed(&self) -> Result<MixedGraph, GraphError> {
        let mut g = MixedGraph::empty(self.nodes.clone());
        for e in &self.edges {
            let (u, v) = (self.index(&e.u)?, self.index(&e.v)?);
            if g.adjacent(u, v) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            g.add_edge(u, v, e.mark_at_u, e.mark_at_v)?;
        }
        Ok(g)
    }

    /// Reads a DAG document; every edge must be `u → v`.
    pub fn to_dag(&self) -> Result<Dag, GraphError> {
        let mut g = Dag::new(self.nodes.clone());
        for e in &self.edges {
            let (u, v) = (self.index(&e.u)?, self.index(&e.v)?);
            match (e.mark_at_u, e.mark_at_v) {
                (Mark::Tail, Mark::Arrow) => g.add_edge(u, v, e.weight.unwrap_or(1.0))?,
                (Mark::Arrow, Mark::Tail) => g.add_edge(v, u, e.weight.unwrap_or(1.0))?,
                _ => return Err(GraphError::Schema(format!("edge {} - {} is not directed", e.u, e.v))),
            }
        }
        g.topological_sort()?;
        Ok(g)
    }
}

impl From<&MixedGraph> for GraphJson {
    fn from(g: &MixedGraph) -> Self {
        let names = g.names();
        let edges = g
            .edges()
            .into_iter()
            .map(|(u, v, mu, mv)| EdgeRecord {
                u: names[u].clone(),
                v: names[v].clone(),
                mark_at_u: mu,
                mark_at_v: mv,
                weight: None,
            })
            .collect();
        Self { nodes: names.to_vec(), edges }
    }
}

impl From<&Dag> for GraphJson {
    fn from(g: &Dag) -> Self {
        let names = g.names();
        let edges = g
            .edges()
            .map(|(u, v, w)| EdgeRecord {
                u: names[u].clone(),
                v: names[v].clone(),
                mark_at_u: Mark::Tail,
                mark_at_v: Mark::Arrow,
                weight: Some(w),
            })
            .collect();
        Self { nodes: names.to_vec(), edges }
    }
}

impl From<&Skeleton> for GraphJson {
    fn from(g: &Skeleton) -> Self {
        let names = g.names();
        let edges = g
            .edges()
            .into_iter()
            .map(|(u, v)| EdgeRecord {
                u: names[u].clone(),
                v: names[v].clone(),
                mark_at_u: Mark::Tail,
                mark_at_v: Mark::Tail,
                weight: None,
            })
            .collect();
        Self { nodes: names.to_vec(), edges }
    }
}

fn dot_arrow(m: Mark) -> &'static str {
    match m {
        Mark::Arrow => "normal",
        Mark::Tail => "none",
        Mark::Circle => "odot",
    }
}

impl MixedGraph {
    /// Graphviz rendering; each endpoint mark becomes an arrowhead style.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph pag {\n");
        for name in self.names() {
            let _ = writeln!(s, "  \"{}\";", escape(name));
        }
        for (u, v, mu, mv) in self.edges() {
            let _ = writeln!(
                s,
                "  \"{}\" -> \"{}\" [dir=both, arrowtail={}, arrowhead={}];",
                escape(&self.names()[u]),
                escape(&self.names()[v]),
                dot_arrow(mu),
                dot_arrow(mv)
            );
        }
        s.push_str("}\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
