//! Ground-truth DAG generators and linear-SEM samplers.
//!
//! All randomness comes from ChaCha8 streams. A stream is identified by a
//! master seed and a stream index through [`derive_seed`]; the DAG, each
//! node's noise and each replicate draw from separate streams, so outputs
//! do not depend on evaluation order or thread count.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::graph::{Dag, GraphError};

/// Identity of the random generator, recorded in run manifests.
pub const GENERATOR_ID: &str = "ChaCha8Rng (rand_chacha 0.9) + rand_distr 0.5, splitmix64 stream derivation";

const STREAM_DAG: u64 = 0x00DA_6000;
const STREAM_NOISE: u64 = 0x0A15_E000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    #[default]
    Gaussian,
    /// Student t with 4 degrees of freedom, unscaled (variance 2).
    StudentT4,
}

impl Noise {
    pub fn variance(self) -> f64 {
        match self {
            Noise::Gaussian => 1.0,
            Noise::StudentT4 => 2.0,
        }
    }
}

impl fmt::Display for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Noise::Gaussian => "gaussian",
            Noise::StudentT4 => "student_t4",
        })
    }
}

impl FromStr for Noise {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Noise::Gaussian),
            "student_t4" | "t4" | "student-t4" => Ok(Noise::StudentT4),
            _ => Err(format!("unknown noise '{s}' (expected gaussian|student_t4)")),
        }
    }
}

/// SplitMix64 finalizer over `(seed, stream)`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream))
}

pub const DEFAULT_WEIGHT_RANGE: (f64, f64) = (0.5, 1.5);

fn check_weights((low, high): (f64, f64)) -> Result<(), SimError> {
    if !(low > 0.0 && low <= high && high.is_finite()) {
        return Err(SimError::Config(format!("weight range must satisfy 0 < low <= high, got ({low}, {high})")));
    }
    Ok(())
}

fn draw_weight(rng: &mut ChaCha8Rng, (low, high): (f64, f64)) -> f64 {
    let magnitude = if high > low { rng.random_range(low..high) } else { low };
    if rng.random_bool(0.5) {
        magnitude
    } else {
        -magnitude
    }
}

/// Configuration of the sparse random-DAG study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sim1Config {
    pub p: usize,
    pub n: usize,
    pub pi: f64,
    pub weight_range: (f64, f64),
    pub noise: Noise,
    pub seed: u64,
}

impl Sim1Config {
    pub fn new(p: usize, n: usize, pi: f64, seed: u64) -> Self {
        Self { p, n, pi, weight_range: DEFAULT_WEIGHT_RANGE, noise: Noise::Gaussian, seed }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.p < 2 || self.n < 2 {
            return Err(SimError::Config(format!("need p >= 2 and n >= 2, got p={} n={}", self.p, self.n)));
        }
        if !(0.0..=1.0).contains(&self.pi) {
            return Err(SimError::Config(format!("edge probability {} outside [0, 1]", self.pi)));
        }
        check_weights(self.weight_range)
    }
}

/// Each pair `i < j` gets `i → j` independently with probability `pi`;
/// weights are uniform on `±[low, high]`.
pub fn generate_sparse_dag(cfg: &Sim1Config) -> Result<Dag, SimError> {
    cfg.validate()?;
    let mut r = rng(cfg.seed, STREAM_DAG);
    let mut g = Dag::empty(cfg.p);
    for i in 0..cfg.p {
        for j in i + 1..cfg.p {
            if r.random::<f64>() < cfg.pi {
                let w = draw_weight(&mut r, cfg.weight_range);
                g.add_edge(i, j, w)?;
            }
        }
    }
    Ok(g)
}

/// Configuration of the grouped study with a root variable `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sim2Config {
    pub p: usize,
    pub n: usize,
    /// Group size.
    pub k: usize,
    /// Number of groups (taken from the front) that `Y` influences.
    pub s: usize,
    pub within_density: f64,
    pub between_density: f64,
    pub y_influence: f64,
    pub weight_range: (f64, f64),
    pub noise: Noise,
    pub seed: u64,
}

impl Sim2Config {
    pub fn new(p: usize, n: usize, k: usize, s: usize, seed: u64) -> Self {
        Self {
            p,
            n,
            k,
            s,
            within_density: 0.6,
            between_density: 0.02,
            y_influence: 0.9,
            weight_range: DEFAULT_WEIGHT_RANGE,
            noise: Noise::Gaussian,
            seed,
        }
    }

    /// Number of groups over the `p − 1` non-root nodes (last may be short).
    pub fn group_count(&self) -> usize {
        if self.k == 0 {
            0
        } else {
            (self.p.saturating_sub(1)).div_ceil(self.k)
        }
    }

    /// Node range of group `g`.
    pub fn group(&self, g: usize) -> std::ops::Range<usize> {
        let start = 1 + g * self.k;
        start..(start + self.k).min(self.p)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.p < 2 || self.n < 2 {
            return Err(SimError::Config(format!("need p >= 2 and n >= 2, got p={} n={}", self.p, self.n)));
        }
        if self.k == 0 {
            return Err(SimError::Config("group size must be positive".into()));
        }
        if self.s > self.group_count() {
            return Err(SimError::Config(format!("{} causal groups requested but only {} groups exist", self.s, self.group_count())));
        }
        for (name, v) in [("within_density", self.within_density), ("between_density", self.between_density), ("y_influence", self.y_influence)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::Config(format!("{name} = {v} outside [0, 1]")));
            }
        }
        check_weights(self.weight_range)
    }
}

/// Names for the grouped study: `Y` then `X1 … X{p−1}`.
pub fn grouped_names(p: usize) -> Vec<String> {
    std::iter::once("Y".to_string()).chain((1..p).map(|i| format!("X{i}"))).collect()
}

/// Node 0 is `Y`. Groups of `k` consecutive nodes follow. Edges:
/// within a group `i → j` (`i < j`) w.p. `within_density`; from group `g`
/// to group `g + 1` w.p. `between_density`; `Y → v` for `v` in the first
/// `s` groups w.p. `y_influence`.
pub fn generate_grouped_dag(cfg: &Sim2Config) -> Result<Dag, SimError> {
    cfg.validate()?;
    let mut r = rng(cfg.seed, STREAM_DAG);
    let mut g = Dag::new(grouped_names(cfg.p));
    let groups = cfg.group_count();
    for gi in 0..groups {
        let members = cfg.group(gi);
        for i in members.clone() {
            for j in i + 1..members.end {
                if r.random::<f64>() < cfg.within_density {
                    let w = draw_weight(&mut r, cfg.weight_range);
                    g.add_edge(i, j, w)?;
                }
            }
        }
        if gi + 1 < groups {
            for u in members.clone() {
                for v in cfg.group(gi + 1) {
                    if r.random::<f64>() < cfg.between_density {
                        let w = draw_weight(&mut r, cfg.weight_range);
                        g.add_edge(u, v, w)?;
                    }
                }
            }
        }
    }
    for gi in 0..cfg.s {
        for v in cfg.group(gi) {
            if r.random::<f64>() < cfg.y_influence {
                let w = draw_weight(&mut r, cfg.weight_range);
                g.add_edge(0, v, w)?;
            }
        }
    }
    Ok(g)
}

/// Draws `n` rows of `X_v = Σ_{u ∈ pa(v)} w_uv X_u + ε_v` in topological order.
/// Node `v`'s noise comes from its own stream.
pub fn sample_sem(g: &Dag, n: usize, noise: Noise, seed: u64) -> Result<Dataset, SimError> {
    let order = g.topological_sort()?;
    let p = g.len();
    let mut x = DMatrix::<f64>::zeros(n, p);
    let t4 = StudentT::new(4.0).expect("valid degrees of freedom");
    for &v in &order {
        let mut r = rng(seed, STREAM_NOISE + v as u64);
        let mut col: Vec<f64> = match noise {
            Noise::Gaussian => (0..n).map(|_| StandardNormal.sample(&mut r)).collect(),
            Noise::StudentT4 => (0..n).map(|_| t4.sample(&mut r)).collect(),
        };
        for &u in g.parents(v) {
            let w = g.weight(u, v).expect("parent edge has a weight");
            for (i, c) in col.iter_mut().enumerate() {
                *c += w * x[(i, u)];
            }
        }
        x.set_column(v, &nalgebra::DVector::from_vec(col));
    }
    Dataset::new(g.names().to_vec(), x).map_err(|e| SimError::Config(e.to_string()))
}

/// Population covariance `(I − B)⁻ᵀ D (I − B)⁻¹` of the SEM on `g`.
pub fn population_covariance(g: &Dag, noise: Noise) -> DMatrix<f64> {
    let p = g.len();
    let b = g.weight_matrix();
    let inv = (DMatrix::<f64>::identity(p, p) - b).try_inverse().expect("I - B is unit triangular up to permutation");
    inv.transpose() * DMatrix::<f64>::identity(p, p) * noise.variance() * inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_probability_extremes() {
        let none = generate_sparse_dag(&Sim1Config::new(6, 10, 0.0, 1)).unwrap();
        assert_eq!(none.edge_count(), 0);
        let all = generate_sparse_dag(&Sim1Config::new(6, 10, 1.0, 1)).unwrap();
        assert_eq!(all.edge_count(), 15);
        assert!(all.edges().all(|(u, v, w)| u < v && (0.5..=1.5).contains(&w.abs())));
    }

    #[test]
    fn same_seed_same_output() {
        let cfg = Sim1Config::new(30, 50, 0.1, 42);
        let a = generate_sparse_dag(&cfg).unwrap();
        assert_eq!(a, generate_sparse_dag(&cfg).unwrap());
        let da = sample_sem(&a, 50, Noise::StudentT4, 7).unwrap();
        let db = sample_sem(&a, 50, Noise::StudentT4, 7).unwrap();
        assert_eq!(da.values().as_slice(), db.values().as_slice());
        assert_ne!(a, generate_sparse_dag(&Sim1Config { seed: 43, ..cfg }).unwrap());
    }

    #[test]
    fn invalid_configs() {
        assert!(Sim1Config::new(1, 10, 0.1, 0).validate().is_err());
        assert!(Sim1Config::new(5, 10, 1.5, 0).validate().is_err());
        assert!(Sim1Config { weight_range: (0.0, 1.0), ..Sim1Config::new(5, 10, 0.1, 0) }.validate().is_err());
        assert!(generate_grouped_dag(&Sim2Config::new(11, 10, 5, 3, 0)).is_err());
    }

    #[test]
    fn grouped_layout() {
        let cfg = Sim2Config::new(100, 100, 5, 5, 3);
        assert_eq!(cfg.group_count(), 20);
        assert_eq!(cfg.group(19), 96..100);
        let s0 = generate_grouped_dag(&Sim2Config { s: 0, ..cfg }).unwrap();
        assert!(s0.children(0).is_empty() && s0.parents(0).is_empty());
        let iso = generate_grouped_dag(&Sim2Config { between_density: 0.0, ..cfg }).unwrap();
        for (u, v, _) in iso.edges() {
            if u != 0 {
                assert_eq!((u - 1) / 5, (v - 1) / 5, "edge {u}->{v} crosses groups");
            }
        }
    }

    #[test]
    fn single_dense_group() {
        let cfg = Sim2Config { within_density: 1.0, ..Sim2Config::new(8, 10, 7, 1, 11) };
        let g = generate_grouped_dag(&cfg).unwrap();
        let within = g.edges().filter(|(u, _, _)| *u != 0).count();
        assert_eq!(within, 21);
        assert_eq!(g.children(0).len(), g.edges().filter(|(u, _, _)| *u == 0).count());
        assert!(g.children(0).len() <= 7);
    }

    #[test]
    fn cyclic_graph_rejected_by_sampler() {
        let g = Dag::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert!(matches!(sample_sem(&g, 5, Noise::Gaussian, 0), Err(SimError::Graph(GraphError::CycleDetected))));
    }

    #[test]
    fn zero_weights_equal_empty_graph() {
        let mut g = Dag::empty(3);
        g.add_edge(0, 1, 0.0).unwrap();
        g.add_edge(1, 2, 0.0).unwrap();
        let a = sample_sem(&g, 20, Noise::Gaussian, 5).unwrap();
        let b = sample_sem(&Dag::empty(3), 20, Noise::Gaussian, 5).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn population_covariance_single_edge() {
        let g = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let c = population_covariance(&g, Noise::Gaussian);
        assert_eq!((c[(0, 0)], c[(0, 1)], c[(1, 1)]), (1.0, 1.0, 2.0));
    }
}
