//! Stage 2: FCI restricted to a starting skeleton.
//!
//! The stages are exposed separately ([`refine_skeleton`],
//! [`orient_v_structures`], [`pds_refine`], [`apply_orientation_rules`])
//! and chained by [`pfci`], [`fci_full`] and [`oracle_pag`].

mod orient;
mod pipeline;
mod rules;
mod search;

pub use orient::orient_v_structures;
pub use pipeline::{fci_full, oracle_pag, oracle_pag_search, pfci, pfci_with_rule, run_fci, FciOutput, LambdaRule, PipelineError, StageMetadata};
pub use rules::apply_orientation_rules;
pub use search::{gap_sepsets, pds_refine, refine_skeleton};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ci::{CiError, DEFAULT_ALPHA};
use crate::exec::Execution;
use crate::graph::{Mark, NodeSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FciError {
    #[error(transparent)]
    Ci(#[from] CiError),
    #[error("no separating set recorded for nonadjacent pair ({0}, {1})")]
    MissingSepset(usize, usize),
    #[error("orientation conflict in {rule}: mark at {at} on edge {from} - {at} is {existing}, rule requires {wanted}")]
    OrientationConflict { rule: &'static str, from: usize, at: usize, existing: Mark, wanted: Mark },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Which orientation rules run after v-structure orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleSet {
    /// R1–R4 and R8–R10 (no selection variables).
    #[default]
    Core,
    /// R1–R10, adding the selection-bias rules R5–R7.
    Full,
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleSet::Core => "core",
            RuleSet::Full => "full",
        })
    }
}

impl FromStr for RuleSet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "core" => Ok(RuleSet::Core),
            "full" => Ok(RuleSet::Full),
            _ => Err(format!("unknown rule set '{s}' (expected core|full)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FciConfig {
    pub alpha: f64,
    /// Largest conditioning set tried during skeleton refinement; `None` is unbounded.
    pub max_cond_size: Option<usize>,
    /// Largest subset of a Possible-D-SEP set tried; `None` is unbounded.
    pub max_pds_size: Option<usize>,
    pub rule_set: RuleSet,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for FciConfig {
    fn default() -> Self {
        Self { alpha: DEFAULT_ALPHA, max_cond_size: None, max_pds_size: None, rule_set: RuleSet::Core, exec: Execution::Parallel }
    }
}

impl FciConfig {
    pub fn validate(&self) -> Result<(), FciError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(FciError::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Separating sets of removed pairs, keyed by the unordered pair.
///
/// Pairs absent from a restricted starting skeleton were judged independent
/// given all remaining variables; they are recorded with
/// [`SepsetMap::insert_rest`] and treated as separated by every other node.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SepsetMap {
    sets: BTreeMap<(usize, usize), NodeSet>,
    rest: BTreeSet<(usize, usize)>,
}

impl SepsetMap {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(i: usize, j: usize) -> (usize, usize) {
        if i < j {
            (i, j)
        } else {
            (j, i)
        }
    }

    /// Records `set` for `(i, j)`; an existing entry is kept.
    pub fn insert(&mut self, i: usize, j: usize, set: NodeSet) {
        debug_assert!(!set.contains(&i) && !set.contains(&j));
        let key = Self::key(i, j);
        if !self.rest.contains(&key) {
            self.sets.entry(key).or_insert(set);
        }
    }

    /// Marks `(i, j)` as separated by all other variables.
    pub fn insert_rest(&mut self, i: usize, j: usize) {
        let key = Self::key(i, j);
        if !self.sets.contains_key(&key) {
            self.rest.insert(key);
        }
    }

    /// Whether `k` lies in the separating set of `(i, j)`; `None` if the
    /// pair has no entry.
    pub fn separates(&self, i: usize, j: usize, k: usize) -> Option<bool> {
        let key = Self::key(i, j);
        match self.sets.get(&key) {
            Some(s) => Some(s.contains(&k)),
            None if self.rest.contains(&key) => Some(k != i && k != j),
            None => None,
        }
    }

    pub fn is_rest(&self, i: usize, j: usize) -> bool {
        self.rest.contains(&Self::key(i, j))
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&NodeSet> {
        self.sets.get(&Self::key(i, j))
    }

    pub fn contains_pair(&self, i: usize, j: usize) -> bool {
        let key = Self::key(i, j);
        self.sets.contains_key(&key) || self.rest.contains(&key)
    }

    /// Number of explicit separating sets.
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &NodeSet)> {
        self.sets.iter()
    }
}
