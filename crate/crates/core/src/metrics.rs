//! Structure-recovery scores and replicate aggregation.

use serde::{Deserialize, Serialize};

use crate::graph::{GraphError, MixedGraph, Skeleton};

/// Counts over the `p(p−1)/2` unordered node pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// A score together with whether a zero-denominator convention was used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub degenerate: bool,
}

fn same_nodes(a: &[String], b: &[String]) -> Result<(), GraphError> {
    if a == b {
        Ok(())
    } else {
        Err(GraphError::NodeMismatch)
    }
}

pub fn confusion_counts(est: &Skeleton, truth: &Skeleton) -> Result<ConfusionCounts, GraphError> {
    same_nodes(est.names(), truth.names())?;
    let p = est.len();
    let mut c = ConfusionCounts::default();
    for i in 0..p {
        for j in i + 1..p {
            match (est.adjacent(i, j), truth.adjacent(i, j)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    Ok(c)
}

/// `2·tp / (2·tp + fp + fn)`. With `tp = fp = fn = 0` both graphs are empty
/// and the score is 1, flagged as degenerate.
pub fn f1(c: &ConfusionCounts) -> Score {
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        return Score { value: 1.0, degenerate: true };
    }
    Score { value: 2.0 * c.tp as f64 / denom as f64, degenerate: false }
}

/// Matthews correlation; 0 (flagged) when any marginal is empty.
pub fn mcc(c: &ConfusionCounts) -> Score {
    let (tp, fp, tn, fn_) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
    let factors = [tp + fp, tp + fn_, tn + fp, tn + fn_];
    if factors.contains(&0.0) {
        return Score { value: 0.0, degenerate: true };
    }
    let denom = factors.iter().product::<f64>().sqrt();
    Score { value: (tn * tp - fn_ * fp) / denom, degenerate: false }
}

/// Structural Hamming distance between mixed graphs: each unordered pair
/// costs 1 if adjacent in exactly one graph, or 1 if adjacent in both with
/// any endpoint mark differing.
pub fn shd(est: &MixedGraph, reference: &MixedGraph) -> Result<usize, GraphError> {
    same_nodes(est.names(), reference.names())?;
    let p = est.len();
    let mut d = 0;
    for i in 0..p {
        for j in i + 1..p {
            match (est.adjacent(i, j), reference.adjacent(i, j)) {
                (true, true) => {
                    if est.mark(i, j) != reference.mark(i, j) || est.mark(j, i) != reference.mark(j, i) {
                        d += 1;
                    }
                }
                (a, b) if a != b => d += 1,
                _ => {}
            }
        }
    }
    Ok(d)
}

/// Adjacency-only SHD: pairs adjacent in exactly one skeleton.
pub fn shd_skeleton(est: &Skeleton, reference: &Skeleton) -> Result<usize, GraphError> {
    let c = confusion_counts(est, reference)?;
    Ok(c.fp + c.fn_)
}

/// Mean and sample standard deviation (divisor `n − 1`; 0 for fewer than
/// two values; NaN mean for none).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Summary { mean: f64::NAN, sd: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Summary { mean, sd }
    }
}

/// One method on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub p: usize,
    pub method: String,
    pub replicate: usize,
    pub n: usize,
    pub shd: usize,
    pub f1: f64,
    pub mcc: f64,
    pub f1_degenerate: bool,
    pub mcc_degenerate: bool,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub edges_ns: usize,
    pub edges_refined: usize,
    pub edges_final: usize,
    pub lambda: Option<f64>,
    pub ms_stage1: u64,
    pub ms_stage2: u64,
    pub runtime_s: f64,
}

/// Mean/sd of one `(p, method)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub p: usize,
    pub method: String,
    pub shd_mean: f64,
    pub shd_sd: f64,
    pub f1_mean: f64,
    pub f1_sd: f64,
    pub mcc_mean: f64,
    pub mcc_sd: f64,
    pub runtime_mean_s: f64,
    pub runtime_sd_s: f64,
}

/// Groups rows by `(p, method)` in order of first appearance.
pub fn aggregate(rows: &[MetricsReport]) -> Vec<AggregateRow> {
    let mut keys: Vec<(usize, &str)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.p, r.method.as_str())) {
            keys.push((r.p, r.method.as_str()));
        }
    }
    keys.into_iter()
        .map(|(p, method)| {
            let cell: Vec<&MetricsReport> = rows.iter().filter(|r| r.p == p && r.method == method).collect();
            let col = |f: fn(&MetricsReport) -> f64| Summary::of(&cell.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (shd, f1, mcc, rt) = (col(|r| r.shd as f64), col(|r| r.f1), col(|r| r.mcc), col(|r| r.runtime_s));
            AggregateRow {
                p,
                method: method.to_string(),
                shd_mean: shd.mean,
                shd_sd: shd.sd,
                f1_mean: f1.mean,
                f1_sd: f1.sd,
                mcc_mean: mcc.mean,
                mcc_sd: mcc.sd,
                runtime_mean_s: rt.mean,
                runtime_sd_s: rt.sd,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{default_names, Mark};

    fn sk(p: usize, e: &[(usize, usize)]) -> Skeleton {
        Skeleton::from_edges(default_names(p), e).unwrap()
    }

    #[test]
    fn counts_identical_and_empty() {
        let t = sk(5, &[(0, 1), (2, 3)]);
        assert_eq!(confusion_counts(&t, &t).unwrap(), ConfusionCounts { tp: 2, fp: 0, tn: 8, fn_: 0 });
        let e = sk(5, &[]);
        assert_eq!(confusion_counts(&e, &t).unwrap(), ConfusionCounts { tp: 0, fp: 0, tn: 8, fn_: 2 });
        assert_eq!(confusion_counts(&sk(4, &[]), &t), Err(GraphError::NodeMismatch));
    }

    #[test]
    fn f1_values() {
        assert_eq!(f1(&ConfusionCounts::default()), Score { value: 1.0, degenerate: true });
        assert_eq!(f1(&ConfusionCounts { tp: 1, fp: 1, tn: 0, fn_: 1 }).value, 0.5);
        assert_eq!(f1(&ConfusionCounts { tp: 3, fp: 0, tn: 7, fn_: 0 }).value, 1.0);
    }

    #[test]
    fn mcc_values() {
        assert_eq!(mcc(&ConfusionCounts { tp: 3, fp: 0, tn: 7, fn_: 0 }).value, 1.0);
        assert_eq!(mcc(&ConfusionCounts { tp: 0, fp: 7, tn: 0, fn_: 3 }).value, -1.0);
        assert_eq!(mcc(&ConfusionCounts { tp: 0, fp: 0, tn: 10, fn_: 0 }), Score { value: 0.0, degenerate: true });
    }

    #[test]
    fn shd_cases() {
        let mut a = MixedGraph::empty(default_names(3));
        a.add_edge(0, 1, Mark::Tail, Mark::Arrow).unwrap();
        assert_eq!(shd(&a, &a).unwrap(), 0);
        let mut b = a.clone();
        b.add_edge(1, 2, Mark::Circle, Mark::Circle).unwrap();
        assert_eq!(shd(&a, &b).unwrap(), 1);
        let mut c = MixedGraph::empty(default_names(3));
        c.add_edge(0, 1, Mark::Arrow, Mark::Arrow).unwrap();
        assert_eq!(shd(&a, &c).unwrap(), 1);
    }

    #[test]
    fn summary_and_aggregate() {
        let s = Summary::of(&[1.0, 2.0, 3.0]);
        assert_eq!((s.mean, s.sd), (2.0, 1.0));
        assert_eq!(Summary::of(&[4.0]).sd, 0.0);
        let row = |p, m: &str, shd| MetricsReport {
            p,
            method: m.into(),
            replicate: 0,
            n: 10,
            shd,
            f1: 0.5,
            mcc: 0.5,
            f1_degenerate: false,
            mcc_degenerate: false,
            tp: 0,
            fp: 0,
            tn: 0,
            fn_: 0,
            edges_ns: 0,
            edges_refined: 0,
            edges_final: 0,
            lambda: None,
            ms_stage1: 0,
            ms_stage2: 0,
            runtime_s: 0.0,
        };
        let agg = aggregate(&[row(10, "pfci", 2), row(10, "fci", 5), row(10, "pfci", 4)]);
        assert_eq!(agg.len(), 2);
        assert_eq!((agg[0].method.as_str(), agg[0].shd_mean), ("pfci", 3.0));
        assert_eq!(agg[1].shd_sd, 0.0);
    }
}
