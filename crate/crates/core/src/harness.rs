//! Replicate-based benchmark runner for the two simulation studies.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::fci::{fci_full, oracle_pag, pfci_with_rule, FciConfig, FciOutput, LambdaRule, PipelineError, RuleSet};
use crate::graph::{Dag, MixedGraph, NodeSet};
use crate::metrics::{aggregate, confusion_counts, f1, mcc, shd, shd_skeleton, AggregateRow, MetricsReport};
use crate::neighborhood::SymmetryRule;
use crate::sim::{derive_seed, generate_grouped_dag, generate_sparse_dag, sample_sem, Noise, Sim1Config, Sim2Config, SimError, DEFAULT_WEIGHT_RANGE};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark config: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("p={p} replicate {replicate} method {method}: {source}")]
    Method { p: usize, replicate: usize, method: Method, source: PipelineError },
    #[error("reference graph for p={p} replicate {replicate}: {source}")]
    Reference { p: usize, replicate: usize, source: PipelineError },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    Sim1,
    Sim2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pfci,
    Fci,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Pfci => "pfci",
            Method::Fci => "fci",
        })
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "pfci" => Ok(Method::Pfci),
            "fci" => Ok(Method::Fci),
            _ => Err(format!("unknown method '{s}' (expected pfci|fci)")),
        }
    }
}

/// What estimated graphs are scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShdRef {
    /// Oracle PAG of the true DAG; SHD counts mark mismatches.
    #[default]
    Pag,
    /// Skeleton of the true DAG; SHD counts adjacency differences only.
    DagSkeleton,
}

impl fmt::Display for ShdRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShdRef::Pag => "pag",
            ShdRef::DagSkeleton => "dag-skeleton",
        })
    }
}

impl FromStr for ShdRef {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pag" => Ok(ShdRef::Pag),
            "dag-skeleton" => Ok(ShdRef::DagSkeleton),
            _ => Err(format!("unknown SHD reference '{s}' (expected pag|dag-skeleton)")),
        }
    }
}

fn default_n() -> usize {
    100
}
fn default_pi() -> f64 {
    0.015
}
fn default_alpha() -> f64 {
    crate::ci::DEFAULT_ALPHA
}
fn default_methods() -> Vec<Method> {
    vec![Method::Pfci, Method::Fci]
}
fn default_lambda() -> LambdaRule {
    LambdaRule::Auto
}
fn default_weights() -> (f64, f64) {
    DEFAULT_WEIGHT_RANGE
}
fn default_within() -> f64 {
    0.6
}
fn default_between() -> f64 {
    0.02
}
fn default_influence() -> f64 {
    0.9
}

/// Benchmark description, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub study: Study,
    pub p: Vec<usize>,
    #[serde(default = "default_n")]
    pub n: usize,
    pub replicates: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_pi")]
    pub pi: f64,
    /// Group size (grouped study only).
    #[serde(default)]
    pub k: Option<usize>,
    /// Causal group count (grouped study only).
    #[serde(default)]
    pub s: Option<usize>,
    #[serde(default = "default_weights")]
    pub weight_range: (f64, f64),
    #[serde(default = "default_within")]
    pub within_density: f64,
    #[serde(default = "default_between")]
    pub between_density: f64,
    #[serde(default = "default_influence")]
    pub y_influence: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_lambda")]
    pub lambda: LambdaRule,
    #[serde(default)]
    pub sym_rule: SymmetryRule,
    #[serde(default)]
    pub rule_set: RuleSet,
    #[serde(default)]
    pub max_cond_size: Option<usize>,
    #[serde(default)]
    pub max_pds_size: Option<usize>,
    #[serde(default)]
    pub shd_ref: ShdRef,
}

impl BenchConfig {
    pub fn sim1(p: Vec<usize>, replicates: usize, seed: u64) -> Self {
        BenchConfig {
            study: Study::Sim1,
            p,
            n: default_n(),
            replicates,
            methods: default_methods(),
            noise: Noise::Gaussian,
            seed,
            pi: default_pi(),
            k: None,
            s: None,
            weight_range: DEFAULT_WEIGHT_RANGE,
            within_density: default_within(),
            between_density: default_between(),
            y_influence: default_influence(),
            alpha: default_alpha(),
            lambda: LambdaRule::Auto,
            sym_rule: SymmetryRule::Or,
            rule_set: RuleSet::Core,
            max_cond_size: None,
            max_pds_size: None,
            shd_ref: ShdRef::Pag,
        }
    }

    pub fn sim2(p: Vec<usize>, k: usize, s: usize, replicates: usize, seed: u64) -> Self {
        BenchConfig { study: Study::Sim2, k: Some(k), s: Some(s), ..Self::sim1(p, replicates, seed) }
    }

    /// The four grouped-study setups `(K, s)`.
    pub const SIM2_SETUPS: [(usize, usize); 4] = [(5, 5), (10, 5), (5, 10), (10, 10)];

    /// The large grid `p = 100, 200, …, 1000` with 20 replicates.
    pub fn full_profile(study: Study, seed: u64) -> Vec<Self> {
        let grid: Vec<usize> = (1..=10).map(|k| 100 * k).collect();
        match study {
            Study::Sim1 => vec![Self::sim1(grid, 20, seed)],
            Study::Sim2 => Self::SIM2_SETUPS.iter().map(|&(k, s)| Self::sim2(grid.clone(), k, s, 20, seed)).collect(),
        }
    }

    pub fn fci_config(&self, exec: Execution) -> FciConfig {
        FciConfig {
            alpha: self.alpha,
            max_cond_size: self.max_cond_size,
            max_pds_size: self.max_pds_size,
            rule_set: self.rule_set,
            exec,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.p.is_empty() {
            return bad("p grid is empty".into());
        }
        if self.methods.is_empty() {
            return bad("no methods listed".into());
        }
        if let Err(e) = self.fci_config(Execution::Sequential).validate() {
            return bad(e.to_string());
        }
        if self.study == Study::Sim2 && (self.k.is_none() || self.s.is_none()) {
            return bad("grouped study needs both k and s".into());
        }
        for &p in &self.p {
            match self.study {
                Study::Sim1 => self.sim1_config(p, 0).validate()?,
                Study::Sim2 => self.sim2_config(p, 0).validate()?,
            }
        }
        Ok(())
    }

    fn sim1_config(&self, p: usize, seed: u64) -> Sim1Config {
        Sim1Config { p, n: self.n, pi: self.pi, weight_range: self.weight_range, noise: self.noise, seed }
    }

    fn sim2_config(&self, p: usize, seed: u64) -> Sim2Config {
        Sim2Config {
            p,
            n: self.n,
            k: self.k.unwrap_or(0),
            s: self.s.unwrap_or(0),
            within_density: self.within_density,
            between_density: self.between_density,
            y_influence: self.y_influence,
            weight_range: self.weight_range,
            noise: self.noise,
            seed,
        }
    }

    /// Seed of replicate `r` at dimension `p`.
    pub fn replicate_seed(&self, p: usize, r: usize) -> u64 {
        derive_seed(derive_seed(self.seed, p as u64), r as u64)
    }

    /// Ground-truth DAG of replicate `r` at dimension `p`.
    pub fn true_dag(&self, p: usize, r: usize) -> Result<Dag, SimError> {
        let seed = self.replicate_seed(p, r);
        match self.study {
            Study::Sim1 => generate_sparse_dag(&self.sim1_config(p, seed)),
            Study::Sim2 => generate_grouped_dag(&self.sim2_config(p, seed)),
        }
    }

    /// Simulated replicate: true DAG and data.
    pub fn replicate(&self, p: usize, r: usize) -> Result<(Dag, crate::data::Dataset), SimError> {
        let g = self.true_dag(p, r)?;
        let d = sample_sem(&g, self.n, self.noise, derive_seed(self.replicate_seed(p, r), 1))?;
        Ok((g, d))
    }
}

/// Runs one method on one dataset.
pub fn run_method(method: Method, d: &crate::data::Dataset, cfg: &BenchConfig, fci: &FciConfig) -> Result<FciOutput, PipelineError> {
    match method {
        Method::Pfci => pfci_with_rule(d, cfg.lambda, cfg.sym_rule, fci),
        Method::Fci => fci_full(d, fci),
    }
}

/// Scores `est` against the true DAG under the configured reference.
pub fn score(est: &MixedGraph, truth: &Dag, reference: Option<&MixedGraph>) -> Result<(usize, crate::metrics::ConfusionCounts), crate::graph::GraphError> {
    let truth_sk = truth.skeleton();
    let est_sk = est.skeleton();
    let counts = confusion_counts(&est_sk, &truth_sk)?;
    let d = match reference {
        Some(pag) => shd(est, pag)?,
        None => shd_skeleton(&est_sk, &truth_sk)?,
    };
    Ok((d, counts))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub rows: Vec<MetricsReport>,
    pub aggregate: Vec<AggregateRow>,
}

fn run_replicate(cfg: &BenchConfig, fci: &FciConfig, p: usize, r: usize) -> Result<Vec<MetricsReport>, BenchError> {
    let (truth, data) = cfg.replicate(p, r)?;
    let reference = match cfg.shd_ref {
        ShdRef::Pag => Some(
            oracle_pag(&truth, &NodeSet::new(), &NodeSet::new(), fci).map_err(|source| BenchError::Reference { p, replicate: r, source })?,
        ),
        ShdRef::DagSkeleton => None,
    };
    let mut rows = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let t = Instant::now();
        let out = run_method(method, &data, cfg, fci).map_err(|source| BenchError::Method { p, replicate: r, method, source })?;
        let runtime_s = t.elapsed().as_secs_f64();
        let (d, c) = score(&out.pag, &truth, reference.as_ref()).expect("estimate and truth share nodes");
        let (f, m) = (f1(&c), mcc(&c));
        rows.push(MetricsReport {
            p,
            method: method.to_string(),
            replicate: r,
            n: cfg.n,
            shd: d,
            f1: f.value,
            mcc: m.value,
            f1_degenerate: f.degenerate,
            mcc_degenerate: m.degenerate,
            tp: c.tp,
            fp: c.fp,
            tn: c.tn,
            fn_: c.fn_,
            edges_ns: out.meta.edges_ns,
            edges_refined: out.meta.edges_refined,
            edges_final: out.meta.edges_final,
            lambda: out.meta.lambda,
            ms_stage1: out.meta.ms_stage1,
            ms_stage2: out.meta.ms_stage2,
            runtime_s,
        });
    }
    Ok(rows)
}

/// Runs every `(p, replicate)` job, possibly in parallel, and returns rows
/// ordered by `p`, then replicate, then method.
pub fn run_benchmark(cfg: &BenchConfig, exec: Execution) -> Result<BenchResult, BenchError> {
    cfg.validate()?;
    let fci = cfg.fci_config(exec);
    let jobs: Vec<(usize, usize)> = cfg.p.iter().flat_map(|&p| (0..cfg.replicates).map(move |r| (p, r))).collect();
    let results = exec.map(&jobs, |&(p, r)| run_replicate(cfg, &fci, p, r));
    let mut rows = Vec::with_capacity(jobs.len() * cfg.methods.len());
    for res in results {
        rows.extend(res?);
    }
    // Aggregate in (p, method) order rather than row order.
    let mut ordered = Vec::with_capacity(rows.len());
    for &p in &cfg.p {
        for m in &cfg.methods {
            ordered.extend(rows.iter().filter(|x| x.p == p && x.method == m.to_string()).cloned());
        }
    }
    let aggregate = aggregate(&ordered);
    Ok(BenchResult { rows, aggregate })
}

/// Writes the per-replicate CSV.
pub fn write_rows_csv<W: Write>(rows: &[MetricsReport], w: W) -> Result<(), BenchError> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes the aggregate CSV.
pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], w: W) -> Result<(), BenchError> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
