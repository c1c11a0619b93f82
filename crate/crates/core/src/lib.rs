//! Penalized fast causal inference.
//!
//! Stage 1 selects a sparse undirected skeleton with per-node lasso
//! regressions ([`neighborhood`]). Stage 2 runs FCI restricted to that
//! skeleton ([`fci`]) and returns a partial ancestral graph. Simulators,
//! scores and a replicate harness live in [`sim`], [`metrics`] and [`harness`].
//!
//! Heavy loops go through [`exec::Execution`]; with the `parallel` feature
//! (default) they run on rayon, otherwise sequentially. Results are
//! identical either way.

pub mod blanket;
pub mod ci;
pub mod data;
pub mod exec;
pub mod fci;
pub mod graph;
pub mod harness;
pub mod lasso;
pub mod metrics;
pub mod neighborhood;
pub mod sim;

pub use blanket::{markov_blanket_layers, BlanketReport};
pub use data::Dataset;
pub use exec::Execution;
pub use fci::{fci_full, oracle_pag, pfci, FciConfig, LambdaRule, RuleSet};
pub use graph::{Dag, Mark, MixedGraph, NodeSet, Skeleton};
