use super::{FciError, SepsetMap};
use crate::graph::{Mark, MixedGraph, Skeleton};

/// Starts every edge as `∘−∘` and orients each unshielded triple
/// `i − k − j` with `k ∉ sepset(i, j)` as `i *→ k ←* j`.
pub fn orient_v_structures(sk: &Skeleton, sep: &SepsetMap) -> Result<MixedGraph, FciError> {
    let mut g = MixedGraph::from_skeleton(sk);
    for k in 0..sk.len() {
        let nb: Vec<usize> = sk.neighbors(k).iter().copied().collect();
        for (a, &i) in nb.iter().enumerate() {
            for &j in &nb[a + 1..] {
                if sk.adjacent(i, j) {
                    continue;
                }
                if !sep.separates(i, j, k).ok_or(FciError::MissingSepset(i, j))? {
                    g.set_mark(i, k, Mark::Arrow);
                    g.set_mark(j, k, Mark::Arrow);
                }
            }
        }
    }
    Ok(g)
}
