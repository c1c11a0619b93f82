use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::search::{gap_sepsets, pds_refine_impl};
use super::{apply_orientation_rules, orient_v_structures, refine_skeleton, FciConfig, FciError, SepsetMap};
use crate::ci::{sample_correlation, CiTest, FisherZ, OracleTest};
use crate::data::Dataset;
use crate::graph::{Dag, MixedGraph, NodeSet, Skeleton};
use crate::sim::derive_seed;
use crate::neighborhood::{cv_lambda, default_lambda, neighborhood_select_per_node, SymmetryRule};

/// Failure of one pipeline stage, tagged with the stage name.
#[derive(Debug, Error)]
#[error("stage '{stage}': {source}")]
pub struct PipelineError {
    pub stage: &'static str,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

fn stage<E: std::error::Error + Send + Sync + 'static>(stage: &'static str) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError { stage, source: Box::new(e) }
}

/// How the neighborhood-selection penalty is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "rule")]
pub enum LambdaRule {
    /// `√(2 ln p / n)`.
    Auto,
    Fixed { value: f64 },
    /// Per-node K-fold cross-validation over a log-spaced grid from the
    /// node's null threshold down to 1% of it.
    Cv { folds: usize, grid_size: usize, seed: u64 },
}

/// Per-run bookkeeping written next to every discovered graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMetadata {
    /// Common penalty, or the mean of per-node penalties under CV; `null` for full FCI.
    pub lambda: Option<f64>,
    pub alpha: f64,
    pub edges_ns: usize,
    pub edges_refined: usize,
    pub edges_final: usize,
    pub ms_stage1: u64,
    pub ms_stage2: u64,
}

#[derive(Debug, Clone)]
pub struct FciOutput {
    pub pag: MixedGraph,
    /// Starting skeleton (neighborhood selection, or complete for full FCI).
    pub start: Skeleton,
    pub refined: Skeleton,
    pub sepsets: SepsetMap,
    pub meta: StageMetadata,
}

/// FCI from an arbitrary starting skeleton: refine, orient colliders,
/// Possible-D-SEP stage, then orientation rules.
pub fn run_fci(start: &Skeleton, test: &dyn CiTest, cfg: &FciConfig) -> Result<(MixedGraph, Skeleton, SepsetMap), PipelineError> {
    cfg.validate().map_err(stage("config"))?;
    let (refined, mut sep) = refine_skeleton(start, test, cfg).map_err(stage("refine_skeleton"))?;
    gap_sepsets(start, &refined, &mut sep, test, cfg).map_err(stage("gap_sepsets"))?;
    let oriented = orient_v_structures(&refined, &sep).map_err(stage("orient_v_structures"))?;
    let (pds_graph, sep) = pds_refine_impl(&oriented, &sep, test, cfg, true).map_err(stage("pds_refine"))?;
    let pag = apply_orientation_rules(&pds_graph, &sep, cfg).map_err(stage("orientation_rules"))?;
    Ok((pag, refined, sep))
}

fn log_grid(top: f64, size: usize) -> Vec<f64> {
    if size <= 1 || top <= 0.0 {
        return vec![top.max(0.0)];
    }
    (0..size).map(|k| top * 0.01f64.powf(k as f64 / (size - 1) as f64)).collect()
}

/// Penalized FCI: standardize, neighborhood selection (OR rule), then FCI
/// restricted to the selected skeleton.
pub fn pfci(d: &Dataset, lambda_rule: LambdaRule, cfg: &FciConfig) -> Result<FciOutput, PipelineError> {
    pfci_with_rule(d, lambda_rule, SymmetryRule::Or, cfg)
}

pub fn pfci_with_rule(d: &Dataset, lambda_rule: LambdaRule, rule: SymmetryRule, cfg: &FciConfig) -> Result<FciOutput, PipelineError> {
    cfg.validate().map_err(stage("config"))?;
    let t0 = Instant::now();
    let std = d.standardize().map_err(stage("standardize"))?;
    let p = std.p();
    let lambdas: Vec<f64> = match lambda_rule {
        LambdaRule::Auto => vec![default_lambda(std.n(), p); p],
        LambdaRule::Fixed { value } => vec![value; p],
        LambdaRule::Cv { folds, grid_size, seed } => {
            let per_node = cfg.exec.map_range(p, |j| {
                let y = std.column(j);
                let top = (0..p)
                    .filter(|&k| k != j)
                    .map(|k| std.column(k).iter().zip(y).map(|(a, b)| a * b).sum::<f64>().abs() / std.n() as f64)
                    .fold(0.0, f64::max);
                cv_lambda(&std, j, folds, &log_grid(top, grid_size), derive_seed(seed, j as u64))
            });
            per_node.into_iter().collect::<Result<_, _>>().map_err(stage("cv_lambda"))?
        }
    };
    let (_, ns) = neighborhood_select_per_node(&std, &lambdas, rule, cfg.exec).map_err(stage("neighborhood_select"))?;
    let ms_stage1 = t0.elapsed().as_millis() as u64;

    let t1 = Instant::now();
    let corr = sample_correlation(&std).map_err(stage("correlation"))?;
    let test = FisherZ::new(corr, cfg.alpha).map_err(stage("config"))?;
    let (pag, refined, sepsets) = run_fci(&ns, &test, cfg)?;
    let ms_stage2 = t1.elapsed().as_millis() as u64;

    let meta = StageMetadata {
        lambda: Some(if lambdas.windows(2).all(|w| w[0] == w[1]) {
            lambdas.first().copied().unwrap_or(0.0)
        } else {
            lambdas.iter().sum::<f64>() / p as f64
        }),
        alpha: cfg.alpha,
        edges_ns: ns.edge_count(),
        edges_refined: refined.edge_count(),
        edges_final: pag.edge_count(),
        ms_stage1,
        ms_stage2,
    };
    Ok(FciOutput { pag, start: ns, refined, sepsets, meta })
}

/// Unpenalized FCI starting from the complete graph.
pub fn fci_full(d: &Dataset, cfg: &FciConfig) -> Result<FciOutput, PipelineError> {
    cfg.validate().map_err(stage("config"))?;
    let t0 = Instant::now();
    let std = d.standardize().map_err(stage("standardize"))?;
    let corr = sample_correlation(&std).map_err(stage("correlation"))?;
    let test = FisherZ::new(corr, cfg.alpha).map_err(stage("config"))?;
    let start = Skeleton::complete(std.names().to_vec());
    let (pag, refined, sepsets) = run_fci(&start, &test, cfg)?;
    let meta = StageMetadata {
        lambda: None,
        alpha: cfg.alpha,
        edges_ns: start.edge_count(),
        edges_refined: refined.edge_count(),
        edges_final: pag.edge_count(),
        ms_stage1: 0,
        ms_stage2: t0.elapsed().as_millis() as u64,
    };
    Ok(FciOutput { pag, start, refined, sepsets, meta })
}

/// Ground-truth PAG of `g` over its observed nodes.
///
/// With latents or selection nodes this runs full FCI with the d-separation
/// oracle. Without them the observed graph is the DAG itself, so FCI's
/// adjacency search is known to return the DAG skeleton; the search is
/// replaced by the skeleton plus local-Markov separating sets (parents of
/// the later endpoint in topological order), and orientation proceeds as usual.
pub fn oracle_pag(g: &Dag, latents: &NodeSet, selection: &NodeSet, cfg: &FciConfig) -> Result<MixedGraph, PipelineError> {
    cfg.validate().map_err(stage("config"))?;
    if latents.is_empty() && selection.is_empty() {
        return oracle_pag_no_latents(g, cfg);
    }
    oracle_pag_search(g, latents, selection, cfg)
}

/// Oracle PAG via the full FCI search from the complete graph.
pub fn oracle_pag_search(g: &Dag, latents: &NodeSet, selection: &NodeSet, cfg: &FciConfig) -> Result<MixedGraph, PipelineError> {
    let test = OracleTest::new(g.clone(), latents.clone(), selection.clone()).map_err(stage("oracle"))?;
    let start = Skeleton::complete(test.observed_names());
    Ok(run_fci(&start, &test, cfg)?.0)
}

fn oracle_pag_no_latents(g: &Dag, cfg: &FciConfig) -> Result<MixedGraph, PipelineError> {
    let order = g.topological_sort().map_err(stage("oracle"))?;
    let mut rank = vec![0usize; g.len()];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    let sk = g.skeleton();
    let mut sep = SepsetMap::new();
    for i in 0..g.len() {
        for j in i + 1..g.len() {
            if sk.adjacent(i, j) {
                continue;
            }
            // The later node is independent of its non-descendants given its parents.
            let later = if rank[i] > rank[j] { i } else { j };
            sep.insert(i, j, g.parents(later).iter().copied().collect());
        }
    }
    let oriented = orient_v_structures(&sk, &sep).map_err(stage("orient_v_structures"))?;
    apply_orientation_rules(&oriented, &sep, cfg).map_err(stage("orientation_rules"))
}

impl From<FciError> for PipelineError {
    fn from(e: FciError) -> Self {
        PipelineError { stage: "fci", source: Box::new(e) }
    }
}
