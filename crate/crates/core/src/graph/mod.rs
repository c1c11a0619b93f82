//! Graph types shared by every stage of the pipeline.
//!
//! Nodes are dense indices `0..p` with a side table of names. Three graph
//! flavours exist: [`Dag`] (weighted, directed), [`Skeleton`] (undirected)
//! and [`MixedGraph`] (edges carry an endpoint mark at each end).
//!
//! Edge glyphs map onto mark pairs `(mark at u, mark at v)` for an
//! edge written `u ? v`:
//!
//! | glyph | marks |
//! |-------|-------|
//! | `u → v`  | (Tail, Arrow) |
//! | `u ↔ v`  | (Arrow, Arrow) |
//! | `u −∘ v` | (Tail, Circle) |
//! | `u ∘−∘ v`| (Circle, Circle) |
//! | `u ∘→ v` | (Circle, Arrow) |

mod dag;
mod io;
mod mixed;
mod skeleton;

pub use dag::Dag;
pub use io::{EdgeRecord, GraphJson};
pub use mixed::{Mark, MixedGraph};
pub use skeleton::Skeleton;

use std::collections::BTreeSet;

use thiserror::Error;

/// A set of node indices. Ordered so that iteration is deterministic.
pub type NodeSet = BTreeSet<usize>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph contains a directed cycle")]
    CycleDetected,
    #[error("unknown node index {0}")]
    UnknownNode(usize),
    #[error("unknown node name '{0}'")]
    UnknownName(String),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("edge {0} - {1} already present")]
    DuplicateEdge(usize, usize),
    #[error("node sets differ between graphs")]
    NodeMismatch,
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("malformed graph document: {0}")]
    Schema(String),
}

pub(crate) fn check_node(p: usize, v: usize) -> Result<(), GraphError> {
    if v < p {
        Ok(())
    } else {
        Err(GraphError::UnknownNode(v))
    }
}

/// Default node names `X0, X1, ...`.
pub fn default_names(p: usize) -> Vec<String> {
    (0..p).map(|i| format!("X{i}")).collect()
}
