//! Stage 1: per-node lasso regressions and their symmetrized union/intersection.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::exec::Execution;
use crate::graph::{NodeSet, Skeleton};
use crate::lasso::{self, GramProblem, LassoError, LassoFit, DEFAULT_MAX_ITER, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryRule {
    And,
    #[default]
    Or,
}

impl fmt::Display for SymmetryRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymmetryRule::And => "and",
            SymmetryRule::Or => "or",
        })
    }
}

impl FromStr for SymmetryRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "and" => Ok(SymmetryRule::And),
            "or" => Ok(SymmetryRule::Or),
            _ => Err(format!("unknown symmetrization rule '{s}' (expected and|or)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkeletonError {
    #[error("lasso for node {node}: {source}")]
    Lasso { node: usize, source: LassoError },
    #[error("{0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodResult {
    /// Nonzero-coefficient set of each node's regression, in node indices.
    pub neighbors: Vec<NodeSet>,
    pub rule: SymmetryRule,
    pub lambdas: Vec<f64>,
}

/// `√(2 ln p / n)`.
pub fn default_lambda(n: usize, p: usize) -> f64 {
    (2.0 * (p as f64).ln() / n as f64).sqrt()
}

/// Runs the lasso for every node with a common λ.
pub fn neighborhood_select(
    d: &Dataset,
    lambda: f64,
    rule: SymmetryRule,
    exec: Execution,
) -> Result<(NeighborhoodResult, Skeleton), SkeletonError> {
    neighborhood_select_per_node(d, &vec![lambda; d.p()], rule, exec)
}

/// Runs the lasso for node `j` with `lambdas[j]`.
///
/// The regressions are independent; results are merged in node order so the
/// skeleton does not depend on the degree of parallelism.
pub fn neighborhood_select_per_node(
    d: &Dataset,
    lambdas: &[f64],
    rule: SymmetryRule,
    exec: Execution,
) -> Result<(NeighborhoodResult, Skeleton), SkeletonError> {
    let p = d.p();
    if lambdas.len() != p {
        return Err(SkeletonError::InvalidArgument(format!("{} lambdas for {p} nodes", lambdas.len())));
    }
    let gram = d.values().tr_mul(d.values()) / d.n() as f64;
    let fits = exec.map_range(p, |j| node_fit(&gram, j, lambdas[j]).map_err(|source| SkeletonError::Lasso { node: j, source }));

    let mut neighbors = Vec::with_capacity(p);
    for fit in fits {
        let fit = fit?;
        neighbors.push(fit);
    }
    let neighbors: Vec<NodeSet> = neighbors
        .iter()
        .enumerate()
        .map(|(j, fit)| fit.support().into_iter().map(|m| predictor_node(j, m)).collect())
        .collect();

    let mut sk = Skeleton::empty(d.names().to_vec());
    for j in 0..p {
        for &k in neighbors[j].range(j + 1..) {
            let keep = match rule {
                SymmetryRule::Or => true,
                SymmetryRule::And => neighbors[k].contains(&j),
            };
            if keep {
                sk.add_edge(j, k).expect("indices in range");
            }
        }
        if rule == SymmetryRule::Or {
            for &k in neighbors[j].range(..j) {
                sk.add_edge(j, k).expect("indices in range");
            }
        }
    }
    Ok((NeighborhoodResult { neighbors, rule, lambdas: lambdas.to_vec() }, sk))
}

#[inline]
fn predictor_node(target: usize, m: usize) -> usize {
    if m < target {
        m
    } else {
        m + 1
    }
}

/// Lasso of column `j` on all other columns, read straight off the full Gram matrix.
fn node_fit(gram: &DMatrix<f64>, j: usize, lambda: f64) -> Result<LassoFit, LassoError> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(LassoError::InvalidLambda(lambda));
    }
    let p = gram.nrows();
    let xty: Vec<f64> = (0..p - 1).map(|m| gram[(predictor_node(j, m), j)]).collect();
    let problem = GramProblem { gram: |a, b| gram[(predictor_node(j, a), predictor_node(j, b))], xty: &xty };
    let fit = problem.solve(lambda, DEFAULT_TOL, DEFAULT_MAX_ITER, |_| {});
    if fit.converged {
        Ok(fit)
    } else {
        Err(LassoError::NotConverged { fit: Box::new(fit) })
    }
}

/// K-fold cross-validated λ for node `j`.
///
/// Rows are shuffled with a ChaCha8 stream seeded by `seed` and dealt into
/// folds round-robin. `grid` must be sorted in descending order; ties in
/// mean out-of-fold squared error go to the larger λ.
pub fn cv_lambda(d: &Dataset, node: usize, folds: usize, grid: &[f64], seed: u64) -> Result<f64, SkeletonError> {
    let n = d.n();
    let p = d.p();
    if folds < 2 {
        return Err(SkeletonError::InvalidArgument(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n {
        return Err(SkeletonError::InvalidArgument(format!("{folds} folds for {n} rows")));
    }
    if grid.is_empty() {
        return Err(SkeletonError::InvalidArgument("empty lambda grid".into()));
    }
    if grid.windows(2).any(|w| w[0] < w[1]) {
        return Err(SkeletonError::InvalidArgument("lambda grid must be sorted descending".into()));
    }
    if node >= p || p < 2 {
        return Err(SkeletonError::InvalidArgument(format!("node {node} out of range for {p} columns")));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0usize; n];
    for (pos, &row) in order.iter().enumerate() {
        fold_of[row] = pos % folds;
    }

    let x = d.values();
    let predictors: Vec<usize> = (0..p).filter(|&k| k != node).collect();
    let mut errors = vec![0.0; grid.len()];
    for f in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
        let xt = DMatrix::from_fn(train.len(), predictors.len(), |r, c| x[(train[r], predictors[c])]);
        let yt: Vec<f64> = train.iter().map(|&i| x[(i, node)]).collect();
        for (g, &lambda) in grid.iter().enumerate() {
            let fit = lasso::lasso_cd(&xt, &yt, lambda, DEFAULT_TOL, DEFAULT_MAX_ITER)
                .map_err(|source| SkeletonError::Lasso { node, source })?;
            let sse: f64 = test
                .iter()
                .map(|&i| {
                    let pred: f64 = predictors.iter().zip(&fit.coefficients).map(|(&k, b)| x[(i, k)] * b).sum();
                    (x[(i, node)] - pred).powi(2)
                })
                .sum();
            errors[g] += sse / test.len() as f64 / folds as f64;
        }
    }

    let mut best = 0;
    for g in 1..grid.len() {
        let tol = 1e-12 * errors[best].abs().max(1e-300);
        if errors[g] < errors[best] - tol {
            best = g;
        }
    }
    Ok(grid[best])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(cols: Vec<Vec<f64>>) -> Dataset {
        let n = cols[0].len();
        let flat: Vec<f64> = cols.iter().flatten().copied().collect();
        let names = (0..cols.len()).map(|j| format!("v{j}")).collect();
        Dataset::new(names, DMatrix::from_column_slice(n, cols.len(), &flat)).unwrap()
    }

    #[test]
    fn default_lambda_values() {
        assert!((default_lambda(100, 100) - 0.303_485_0).abs() < 1e-6);
        assert!((default_lambda(2, 2) - 2f64.ln().sqrt()).abs() < 1e-12);
        assert!(default_lambda(50, 20) > default_lambda(50, 10));
    }

    #[test]
    fn huge_lambda_gives_empty_skeleton() {
        let d = dataset(vec![vec![1.0, 2.0, 0.5, -1.0], vec![0.3, -0.4, 2.0, 1.0], vec![2.0, 1.0, 0.0, -3.0]])
            .standardize()
            .unwrap();
        let (res, sk) = neighborhood_select(&d, 10.0, SymmetryRule::Or, Execution::Sequential).unwrap();
        assert_eq!(sk.edge_count(), 0);
        assert!(res.neighbors.iter().all(|s| s.is_empty()));
    }

    #[test]
    fn predictor_index_mapping() {
        assert_eq!(predictor_node(2, 0), 0);
        assert_eq!(predictor_node(2, 1), 1);
        assert_eq!(predictor_node(2, 2), 3);
    }

    #[test]
    fn cv_argument_checks() {
        let d = dataset(vec![vec![1.0, 2.0, 3.0, 4.0], vec![2.0, 1.0, 4.0, 3.0]]).standardize().unwrap();
        assert!(cv_lambda(&d, 0, 1, &[0.1], 0).is_err());
        assert!(cv_lambda(&d, 0, 2, &[], 0).is_err());
        assert!(cv_lambda(&d, 0, 2, &[0.1, 0.2], 0).is_err());
        assert!(cv_lambda(&d, 5, 2, &[0.1], 0).is_err());
    }

    #[test]
    fn rule_parsing() {
        assert_eq!("AND".parse::<SymmetryRule>().unwrap(), SymmetryRule::And);
        assert!("xor".parse::<SymmetryRule>().is_err());
    }
}
