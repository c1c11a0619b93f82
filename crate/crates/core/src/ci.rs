//! Conditional-independence tests behind one contract.
//!
//! [`FisherZ`] tests vanishing partial correlation on Gaussian data;
//! [`OracleTest`] answers from d-separation in a known DAG, optionally with
//! latent and selection nodes.

use nalgebra::{Cholesky, DMatrix};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::data::Dataset;
use crate::graph::{Dag, GraphError, NodeSet};

pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CiError {
    #[error("correlation submatrix over {0:?} is singular")]
    SingularSubmatrix(Vec<usize>),
    #[error("column '{0}' is constant")]
    ConstantColumn(String),
    #[error("node {0} is not observed")]
    NodeNotObserved(usize),
    #[error("invalid test query: {0}")]
    InvalidQuery(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Outcome of one conditional-independence test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiDecision {
    pub independent: bool,
    pub statistic: f64,
    pub p_value: f64,
    pub partial_corr: f64,
    pub cond_size: usize,
    /// Set when the sample is too small for the conditioning set (`n − |S| − 3 ≤ 0`).
    pub degenerate: bool,
}

/// A conditional-independence test over variables `0..num_vars()`.
///
/// Implementations must be symmetric in `(i, j)` and deterministic.
pub trait CiTest: Sync {
    fn num_vars(&self) -> usize;
    fn test(&self, i: usize, j: usize, s: &[usize]) -> Result<CiDecision, CiError>;
}

/// Pearson correlation matrix plus the sample size it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSummary {
    pub corr: DMatrix<f64>,
    pub n: usize,
}

pub fn sample_correlation(d: &Dataset) -> Result<CorrelationSummary, CiError> {
    let n = d.n();
    if n < 2 {
        return Err(CiError::InvalidQuery(format!("need at least 2 rows, found {n}")));
    }
    let p = d.p();
    let mut centered = d.values().clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        let mean = col.iter().sum::<f64>() / n as f64;
        col.iter_mut().for_each(|x| *x -= mean);
        let norm = col.norm();
        if norm == 0.0 {
            return Err(CiError::ConstantColumn(d.names()[j].clone()));
        }
        col /= norm;
    }
    let mut corr = centered.tr_mul(&centered);
    for i in 0..p {
        corr[(i, i)] = 1.0;
        for j in 0..i {
            let r = corr[(i, j)].clamp(-1.0, 1.0);
            corr[(i, j)] = r;
            corr[(j, i)] = r;
        }
    }
    Ok(CorrelationSummary { corr, n })
}

/// Partial correlation of `i` and `j` given `s`, via the inverse of the
/// correlation submatrix on `{i, j} ∪ s`: `−P_ij / √(P_ii P_jj)`.
pub fn partial_correlation(c: &CorrelationSummary, i: usize, j: usize, s: &[usize]) -> Result<f64, CiError> {
    let p = c.corr.nrows();
    if i == j || i >= p || j >= p || s.iter().any(|&k| k >= p || k == i || k == j) {
        return Err(CiError::InvalidQuery(format!("partial correlation of {i}, {j} given {s:?}")));
    }
    if s.is_empty() {
        return Ok(c.corr[(i, j)]);
    }
    let idx: Vec<usize> = [i, j].into_iter().chain(s.iter().copied()).collect();
    let m = idx.len();
    let sub = DMatrix::from_fn(m, m, |a, b| c.corr[(idx[a], idx[b])]);
    let chol = Cholesky::new(sub).ok_or_else(|| CiError::SingularSubmatrix(idx.clone()))?;
    // Only the leading 2×2 block of the inverse is needed.
    let mut rhs = DMatrix::zeros(m, 2);
    rhs[(0, 0)] = 1.0;
    rhs[(1, 1)] = 1.0;
    let cols = chol.solve(&rhs);
    let (pii, pjj, pij) = (cols[(0, 0)], cols[(1, 1)], cols[(0, 1)]);
    if !(pii > 0.0 && pjj > 0.0) || !pij.is_finite() {
        return Err(CiError::SingularSubmatrix(idx));
    }
    Ok((-pij / (pii * pjj).sqrt()).clamp(-1.0, 1.0))
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal parameters are valid")
}

/// Fisher z-transform test of `H0: ρ = 0` for a (partial) correlation `r`.
pub fn fisher_z_test(r: f64, n: usize, s_size: usize, alpha: f64) -> CiDecision {
    let dof = n as f64 - s_size as f64 - 3.0;
    if dof <= 0.0 {
        return CiDecision {
            independent: true,
            statistic: 0.0,
            p_value: 1.0,
            partial_corr: r,
            cond_size: s_size,
            degenerate: true,
        };
    }
    // atanh of |r| keeps the statistic exactly symmetric in the sign of r.
    let z = r.abs().min(1.0 - 1e-12).atanh();
    let statistic = dof.sqrt() * z;
    let normal = std_normal();
    let critical = normal.inverse_cdf(1.0 - alpha / 2.0);
    let p_value = (2.0 * (1.0 - normal.cdf(statistic))).clamp(0.0, 1.0);
    CiDecision { independent: statistic <= critical, statistic, p_value, partial_corr: r, cond_size: s_size, degenerate: false }
}

/// Gaussian CI test from a correlation matrix.
#[derive(Debug, Clone)]
pub struct FisherZ {
    pub summary: CorrelationSummary,
    pub alpha: f64,
}

impl FisherZ {
    pub fn new(summary: CorrelationSummary, alpha: f64) -> Result<Self, CiError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CiError::InvalidQuery(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(Self { summary, alpha })
    }
}

impl CiTest for FisherZ {
    fn num_vars(&self) -> usize {
        self.summary.corr.nrows()
    }

    fn test(&self, i: usize, j: usize, s: &[usize]) -> Result<CiDecision, CiError> {
        // Canonical argument order keeps the decision bit-identical under swaps.
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let r = partial_correlation(&self.summary, a, b, s)?;
        Ok(fisher_z_test(r, self.summary.n, s.len(), self.alpha))
    }
}

fn oracle_decision(independent: bool, cond_size: usize) -> CiDecision {
    CiDecision {
        independent,
        statistic: if independent { 0.0 } else { 1.0 },
        p_value: if independent { 1.0 } else { 0.0 },
        partial_corr: if independent { 0.0 } else { 1.0 },
        cond_size,
        degenerate: false,
    }
}

/// d-separation oracle in DAG node indices: `i ⊥ j | s ∪ selection`.
pub fn oracle_test(
    g: &Dag,
    latents: &NodeSet,
    selection: &NodeSet,
    i: usize,
    j: usize,
    s: &NodeSet,
) -> Result<CiDecision, CiError> {
    let p = g.len();
    for &v in [i, j].iter().chain(s.iter()) {
        if v >= p {
            return Err(GraphError::UnknownNode(v).into());
        }
        if latents.contains(&v) || selection.contains(&v) {
            return Err(CiError::NodeNotObserved(v));
        }
    }
    let z: NodeSet = s.union(selection).copied().collect();
    let sep = g.d_separated(i, j, &z)?;
    Ok(oracle_decision(sep, s.len()))
}

/// Oracle over the observed nodes of a DAG, re-indexed `0..observed.len()`.
#[derive(Debug, Clone)]
pub struct OracleTest {
    dag: Dag,
    selection: NodeSet,
    observed: Vec<usize>,
}

impl OracleTest {
    pub fn new(dag: Dag, latents: NodeSet, selection: NodeSet) -> Result<Self, CiError> {
        for &v in latents.iter().chain(selection.iter()) {
            if v >= dag.len() {
                return Err(GraphError::UnknownNode(v).into());
            }
        }
        let observed = (0..dag.len()).filter(|v| !latents.contains(v) && !selection.contains(v)).collect();
        Ok(Self { dag, selection, observed })
    }

    /// DAG index of each observed variable.
    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn observed_names(&self) -> Vec<String> {
        self.observed.iter().map(|&v| self.dag.names()[v].clone()).collect()
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn selection(&self) -> &NodeSet {
        &self.selection
    }
}

impl CiTest for OracleTest {
    fn num_vars(&self) -> usize {
        self.observed.len()
    }

    fn test(&self, i: usize, j: usize, s: &[usize]) -> Result<CiDecision, CiError> {
        let m = self.observed.len();
        if i >= m || j >= m || s.iter().any(|&k| k >= m) {
            return Err(CiError::InvalidQuery(format!("observed index out of range in ({i}, {j}, {s:?})")));
        }
        let mut z: NodeSet = s.iter().map(|&k| self.observed[k]).collect();
        z.extend(self.selection.iter().copied());
        let sep = self.dag.d_separated(self.observed[i], self.observed[j], &z)?;
        Ok(oracle_decision(sep, s.len()))
    }
}
