//! Edge-removal stages: level-wise skeleton refinement and the
//! Possible-D-SEP stage. Both test every edge of a snapshot, possibly in
//! parallel, then commit removals in edge order.

use itertools::Itertools;

use super::{orient_v_structures, FciConfig, FciError, SepsetMap};
use crate::ci::CiTest;
use crate::graph::{MixedGraph, NodeSet, Skeleton};

fn find_separator<'a>(
    test: &dyn CiTest,
    i: usize,
    j: usize,
    subsets: impl Iterator<Item = Vec<&'a usize>>,
) -> Result<Option<NodeSet>, FciError> {
    for s in subsets {
        let s: Vec<usize> = s.into_iter().copied().collect();
        if test.test(i, j, &s)?.independent {
            return Ok(Some(s.into_iter().collect()));
        }
    }
    Ok(None)
}

/// Level-wise search for separating sets among subsets of current adjacencies.
///
/// At level `ℓ` every edge `i − j` of the level's starting skeleton is tested
/// against size-`ℓ` subsets of `adj(i) \ {j}`, then `adj(j) \ {i}`, in
/// lexicographic order; the first independence removes the edge. Adjacencies
/// are frozen for the duration of a level, so the result does not depend on
/// edge order or thread count.
pub fn refine_skeleton(start: &Skeleton, test: &dyn CiTest, cfg: &FciConfig) -> Result<(Skeleton, SepsetMap), FciError> {
    cfg.validate()?;
    if test.num_vars() != start.len() {
        return Err(FciError::InvalidConfig(format!(
            "test covers {} variables, skeleton has {}",
            test.num_vars(),
            start.len()
        )));
    }
    let mut sk = start.clone();
    let mut sepsets = SepsetMap::new();
    let mut level = 0usize;
    loop {
        if cfg.max_cond_size.is_some_and(|m| level > m) {
            break;
        }
        let adj: Vec<Vec<usize>> = (0..sk.len()).map(|v| sk.neighbors(v).iter().copied().collect()).collect();
        let edges = sk.edges();
        if !edges.iter().any(|&(i, j)| adj[i].len() > level || adj[j].len() > level) {
            break;
        }
        let found = cfg.exec.map(&edges, |&(i, j)| -> Result<Option<NodeSet>, FciError> {
            let from_i: Vec<usize> = adj[i].iter().copied().filter(|&k| k != j).collect();
            let from_j: Vec<usize> = adj[j].iter().copied().filter(|&k| k != i).collect();
            if from_i.len() >= level {
                if let Some(s) = find_separator(test, i, j, from_i.iter().combinations(level))? {
                    return Ok(Some(s));
                }
            }
            if from_j.len() >= level {
                // Subsets already drawn from adj(i) were tested above.
                let fresh = from_j.iter().combinations(level).filter(|s| !s.iter().all(|k| from_i.binary_search(k).is_ok()));
                if let Some(s) = find_separator(test, i, j, fresh)? {
                    return Ok(Some(s));
                }
            }
            Ok(None)
        });
        for (&(i, j), res) in edges.iter().zip(found) {
            if let Some(s) = res? {
                sk.remove_edge(i, j);
                sepsets.insert(i, j, s);
            }
        }
        level += 1;
    }
    Ok((sk, sepsets))
}

/// Separating sets for pairs missing from a restricted starting skeleton.
///
/// Only pairs that form an unshielded triple in `refined` matter for
/// orientation. For each such pair the subsets of the refined adjacencies
/// of either endpoint are searched level by level (up to `max_cond_size`)
/// and the first independence is recorded. Pairs without a found set, and
/// all other gaps, are recorded as separated by the remaining variables.
pub fn gap_sepsets(start: &Skeleton, refined: &Skeleton, sep: &mut SepsetMap, test: &dyn CiTest, cfg: &FciConfig) -> Result<(), FciError> {
    let p = start.len();
    let mut triple_gaps = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            if start.adjacent(i, j) {
                continue;
            }
            if refined.neighbors(i).intersection(refined.neighbors(j)).next().is_some() {
                triple_gaps.push((i, j));
            } else {
                sep.insert_rest(i, j);
            }
        }
    }
    let found = cfg.exec.map(&triple_gaps, |&(i, j)| -> Result<Option<NodeSet>, FciError> {
        let from_i: Vec<usize> = refined.neighbors(i).iter().copied().collect();
        let from_j: Vec<usize> = refined.neighbors(j).iter().copied().collect();
        let top = from_i.len().max(from_j.len());
        let top = cfg.max_cond_size.map_or(top, |m| m.min(top));
        for level in 0..=top {
            if from_i.len() >= level {
                if let Some(s) = find_separator(test, i, j, from_i.iter().combinations(level))? {
                    return Ok(Some(s));
                }
            }
            if from_j.len() >= level {
                let fresh = from_j.iter().combinations(level).filter(|s| !s.iter().all(|k| from_i.binary_search(k).is_ok()));
                if let Some(s) = find_separator(test, i, j, fresh)? {
                    return Ok(Some(s));
                }
            }
        }
        Ok(None)
    });
    for (&(i, j), res) in triple_gaps.iter().zip(found) {
        match res? {
            Some(s) => sep.insert(i, j, s),
            None => sep.insert_rest(i, j),
        }
    }
    Ok(())
}

/// Possible-D-SEP stage.
///
/// Possible-D-SEP sets are computed once from `g`. Each remaining edge is
/// tested against subsets of `pds(i) \ {i, j}` and then `pds(j) \ {i, j}`,
/// smallest first, up to `max_pds_size`. If anything is removed, marks are
/// reset and v-structures re-oriented on the reduced skeleton.
pub fn pds_refine(g: &MixedGraph, sep: &SepsetMap, test: &dyn CiTest, cfg: &FciConfig) -> Result<(MixedGraph, SepsetMap), FciError> {
    pds_refine_impl(g, sep, test, cfg, false)
}

/// `skip_adjacent`: subsets lying inside the current adjacency of the
/// pivot node (and within `max_cond_size`) were already tested by
/// [`refine_skeleton`] and are skipped. Only valid directly after an
/// uncapped-or-capped refinement of the same skeleton with the same test.
pub(crate) fn pds_refine_impl(
    g: &MixedGraph,
    sep: &SepsetMap,
    test: &dyn CiTest,
    cfg: &FciConfig,
    skip_adjacent: bool,
) -> Result<(MixedGraph, SepsetMap), FciError> {
    cfg.validate()?;
    let p = g.len();
    let pds: Vec<NodeSet> = cfg.exec.map_range(p, |x| g.possible_d_sep(x).expect("index in range"));
    let edges: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.0, e.1)).collect();

    let found = cfg.exec.map(&edges, |&(i, j)| -> Result<Option<NodeSet>, FciError> {
        let sides: Vec<(Vec<usize>, Vec<usize>)> = [(i, j), (j, i)]
            .iter()
            .map(|&(x, y)| {
                let cands: Vec<usize> = pds[x].iter().copied().filter(|&v| v != x && v != y).collect();
                let adj: Vec<usize> = g.neighbors(x).iter().copied().filter(|&v| v != y).collect();
                (cands, adj)
            })
            .collect();
        let longest = sides.iter().map(|(c, _)| c.len()).max().unwrap_or(0);
        let cap = cfg.max_pds_size.map_or(longest, |m| m.min(longest));
        for size in 0..=cap {
            let already_tested = skip_adjacent && cfg.max_cond_size.is_none_or(|m| size <= m);
            for (cands, adj) in &sides {
                if cands.len() < size {
                    continue;
                }
                let subsets = cands
                    .iter()
                    .combinations(size)
                    .filter(|s| !(already_tested && s.iter().all(|k| adj.binary_search(k).is_ok())));
                if let Some(s) = find_separator(test, i, j, subsets)? {
                    return Ok(Some(s));
                }
            }
        }
        Ok(None)
    });

    let mut sepsets = sep.clone();
    let mut sk = g.skeleton();
    let mut removed = false;
    for (&(i, j), res) in edges.iter().zip(found) {
        if let Some(s) = res? {
            sk.remove_edge(i, j);
            sepsets.insert(i, j, s);
            removed = true;
        }
    }
    if !removed {
        return Ok((g.clone(), sepsets));
    }
    let reoriented = orient_v_structures(&sk, &sepsets)?;
    Ok((reoriented, sepsets))
}
