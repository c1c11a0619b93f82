//! The augmented FCI orientation rules R1–R10.
//!
//! Notation follows `MixedGraph::mark(u, v)`: the mark at `v` on `u − v`.
//! Rules only ever turn a circle into an arrowhead or a tail; a rule that
//! would overwrite a committed mark raises [`FciError::OrientationConflict`].
//!
//! Path-based rules (R4, R5, R9, R10) search over (previous, current)
//! vertex pairs breadth-first and accept only simple paths, so every
//! orientation they make is backed by a concrete path.

use std::collections::{HashMap, VecDeque};

use super::{FciConfig, FciError, RuleSet, SepsetMap};
use crate::graph::{Mark, MixedGraph};

use Mark::{Arrow, Circle, Tail};

struct Orienter<'a> {
    g: MixedGraph,
    sep: &'a SepsetMap,
    changed: bool,
}

impl Orienter<'_> {
    fn m(&self, u: usize, v: usize) -> Option<Mark> {
        self.g.mark(u, v)
    }

    fn adj(&self, u: usize, v: usize) -> bool {
        self.g.adjacent(u, v)
    }

    fn nb(&self, v: usize) -> Vec<usize> {
        self.g.neighbors(v).iter().copied().collect()
    }

    /// Sets the mark at `at` on the edge `from − at`.
    fn set(&mut self, rule: &'static str, from: usize, at: usize, wanted: Mark) -> Result<(), FciError> {
        match self.g.mark(from, at) {
            Some(cur) if cur == wanted => Ok(()),
            Some(Circle) => {
                self.g.set_mark(from, at, wanted);
                self.changed = true;
                Ok(())
            }
            Some(existing) => Err(FciError::OrientationConflict { rule, from, at, existing, wanted }),
            None => unreachable!("rule {rule} touched a missing edge {from} - {at}"),
        }
    }

    /// Edge `x − y` may lie on a potentially directed path from `x` to `y`:
    /// no arrowhead at `x`, no tail at `y`.
    fn potentially_directed(&self, x: usize, y: usize) -> bool {
        matches!(self.m(y, x), Some(m) if m != Arrow) && matches!(self.m(x, y), Some(m) if m != Tail)
    }

    fn is_directed(&self, x: usize, y: usize) -> bool {
        self.m(x, y) == Some(Arrow) && self.m(y, x) == Some(Tail)
    }

    fn is_circle_edge(&self, x: usize, y: usize) -> bool {
        self.m(x, y) == Some(Circle) && self.m(y, x) == Some(Circle)
    }

    // R1: a *→ b ∘−* c, a and c nonadjacent  ⇒  b → c.
    fn r1(&mut self) -> Result<(), FciError> {
        let p = self.g.len();
        for a in 0..p {
            for b in self.nb(a) {
                if self.m(a, b) != Some(Arrow) {
                    continue;
                }
                for c in self.nb(b) {
                    if c == a || self.adj(a, c) || self.m(c, b) != Some(Circle) {
                        continue;
                    }
                    self.set("R1", c, b, Tail)?;
                    self.set("R1", b, c, Arrow)?;
                }
            }
        }
        Ok(())
    }

    // R2: a → b *→ c or a *→ b → c, with a *−∘ c  ⇒  a *→ c.
    fn r2(&mut self) -> Result<(), FciError> {
        let p = self.g.len();
        for a in 0..p {
            for c in self.nb(a) {
                if self.m(a, c) != Some(Circle) {
                    continue;
                }
                let fires = self.nb(a).into_iter().any(|b| {
                    b != c
                        && self.adj(b, c)
                        && ((self.is_directed(a, b) && self.m(b, c) == Some(Arrow))
                            || (self.m(a, b) == Some(Arrow) && self.is_directed(b, c)))
                });
                if fires {
                    self.set("R2", a, c, Arrow)?;
                }
            }
        }
        Ok(())
    }

    // R3: a *→ b ←* c, a *−∘ d ∘−* c, a and c nonadjacent, d *−∘ b  ⇒  d *→ b.
    fn r3(&mut self) -> Result<(), FciError> {
        let p = self.g.len();
        for b in 0..p {
            let nb = self.nb(b);
            for d in nb.clone() {
                if self.m(d, b) != Some(Circle) {
                    continue;
                }
                let fires = nb.iter().enumerate().any(|(ia, &a)| {
                    nb[ia + 1..].iter().any(|&c| {
                        a != d
                            && c != d
                            && !self.adj(a, c)
                            && self.m(a, b) == Some(Arrow)
                            && self.m(c, b) == Some(Arrow)
                            && self.m(a, d) == Some(Circle)
                            && self.m(c, d) == Some(Circle)
                    })
                });
                if fires {
                    self.set("R3", d, b, Arrow)?;
                }
            }
        }
        Ok(())
    }

    /// Start `d` of a discriminating path `<d, …, a, b, c>` for `b`, if one exists.
    ///
    /// Every vertex strictly between `d` and `b` must be a collider on the
    /// path and a parent of `c`; `d` must be nonadjacent to `c`.
    fn discriminating_start(&self, a: usize, b: usize, c: usize) -> Option<usize> {
        let p = self.g.len();
        let mut visited = vec![false; p];
        visited[a] = true;
        visited[b] = true;
        visited[c] = true;
        let mut queue = VecDeque::from([a]);
        while let Some(v) = queue.pop_front() {
            for d in self.nb(v) {
                if visited[d] || self.m(d, v) != Some(Arrow) {
                    continue;
                }
                if !self.adj(d, c) {
                    return Some(d);
                }
                if self.is_directed(d, c) && self.m(v, d) == Some(Arrow) {
                    visited[d] = true;
                    queue.push_back(d);
                }
            }
        }
        None
    }

    // R4: discriminating path <d, …, a, b, c> with b ∘−* c.
    fn r4(&mut self) -> Result<(), FciError> {
        let p = self.g.len();
        for b in 0..p {
            for c in self.nb(b) {
                if self.m(c, b) != Some(Circle) {
                    continue;
                }
                for a in self.nb(b) {
                    if a == c || self.m(b, a) != Some(Arrow) || !self.is_directed(a, c) {
                        continue;
                    }
                    let Some(d) = self.discriminating_start(a, b, c) else { continue };
                    if self.sep.separates(d, c, b).ok_or(FciError::MissingSepset(d, c))? {
                        self.set("R4", c, b, Tail)?;
                        self.set("R4", b, c, Arrow)?;
                    } else {
                        self.set("R4", a, b, Arrow)?;
                        self.set("R4", b, a, Arrow)?;
                        self.set("R4", c, b, Arrow)?;
                        self.set("R4", b, c, Arrow)?;
                    }
                    break;
                }
            }
        }
        Ok(())
    }

    // R5: a ∘−∘ b closing an uncovered circle path <a, c, …, d, b> with
    // a, d and b, c nonadjacent  ⇒  the edge and the path become undirected.
    fn r5(&mut self) -> Result<(), FciError> {
        let p = self.g.len();
        for a in 0..p {
            for b in self.nb(a) {
                if b < a || !self.is_circle_edge(a, b) {
                    continue;
                }
                let starts: Vec<(usize, usize)> =
                    self.nb(a).into_iter().filter(|&c| c != b && self.is_circle_edge(a, c) && !self.adj(c, b)).map(|c| (a, c)).collect();
                let path = first_simple_path(
                    &starts,
                    |u, v| self.nb(v).into_iter().filter(move |&w| w != u && w != a).collect(),
                    |u, v, w| self.is_circle_edge(v, w) && !self.adj(u, w),
                    b,
                    |d| !self.adj(a, d),
                );
                if let Some(path) = path {
                    self.set("R5", a, b, Tail)?;
                    self.set("R5", b, a, Tail)?;
                    for w in path.windows(2) {
                        self.set("R5", w[0], w[1], Tail)?;
                        self.set("R5", w[1], w[0], Tail)?;
                    }
                }
            }
        }
        Ok(())
    }

    // R6: a − b (tails at both ends), b ∘−* c  ⇒  b −* c.
    fn r6(&mut self) -> Result<(), FciError> {
        let p = self.g.len();
        for b in 0..p {
            let nb = self.nb(b);
            let has_undirected = nb.iter().any(|&a| self.m(a, b) == Some(Tail) && self.m(b, a) == Some(Tail));
            if !has_undirected {
                continue;
            }
            for &c in &nb {
                if self.m(c, b) == Some(Circle) {
                    self.set("R6", c, b, Tail)?;
                }
            }
        }
        Ok(())
    }

    // R7: a −∘ b ∘−* c, a and c nonadjacent  ⇒  b −* c.
    fn r7(&mut self) -> Result<(), FciError> {
        let p = self.g.len();
        for b in 0..p {
            let nb = self.nb(b);
            for &c in &nb {
                if self.m(c, b) != Some(Circle) {
                    continue;
                }
                let fires = nb.iter().any(|&a| a != c && !self.adj(a, c) && self.m(b, a) == Some(Tail) && self.m(a, b) == Some(Circle));
                if fires {
                    self.set("R7", c, b, Tail)?;
                }
            }
        }
        Ok(())
    }

    // R8: a → b → c or a −∘ b → c, with a ∘→ c  ⇒  a → c.
    fn r8(&mut self) -> Result<(), FciError> {
        let p = self.g.len();
        for a in 0..p {
            for c in self.nb(a) {
                if !(self.m(a, c) == Some(Arrow) && self.m(c, a) == Some(Circle)) {
                    continue;
                }
                let fires = self.nb(a).into_iter().any(|b| {
                    b != c
                        && self.m(b, a) == Some(Tail)
                        && matches!(self.m(a, b), Some(Arrow | Circle))
                        && self.is_directed(b, c)
                });
                if fires {
                    self.set("R8", c, a, Tail)?;
                }
            }
        }
        Ok(())
    }

    // R9: a ∘→ c with an uncovered potentially directed path <a, b, …, c>,
    // b and c nonadjacent  ⇒  a → c.
    fn r9(&mut self) -> Result<(), FciError> {
        let p = self.g.len();
        for a in 0..p {
            for c in self.nb(a) {
                if !(self.m(a, c) == Some(Arrow) && self.m(c, a) == Some(Circle)) {
                    continue;
                }
                let starts: Vec<(usize, usize)> = self
                    .nb(a)
                    .into_iter()
                    .filter(|&b| b != c && !self.adj(b, c) && self.potentially_directed(a, b))
                    .map(|b| (a, b))
                    .collect();
                let path = first_simple_path(
                    &starts,
                    |u, v| self.nb(v).into_iter().filter(move |&w| w != u && w != a).collect(),
                    |u, v, w| self.potentially_directed(v, w) && !self.adj(u, w),
                    c,
                    |_| true,
                );
                if path.is_some() {
                    self.set("R9", c, a, Tail)?;
                }
            }
        }
        Ok(())
    }

    // R10: a ∘→ c, b → c ← d, uncovered potentially directed paths from a to
    // b and from a to d whose second vertices μ ≠ ω are nonadjacent  ⇒  a → c.
    fn r10(&mut self) -> Result<(), FciError> {
        let p = self.g.len();
        for a in 0..p {
            for c in self.nb(a) {
                if !(self.m(a, c) == Some(Arrow) && self.m(c, a) == Some(Circle)) {
                    continue;
                }
                let parents: Vec<usize> = self.nb(c).into_iter().filter(|&v| v != a && self.is_directed(v, c)).collect();
                if parents.len() < 2 {
                    continue;
                }
                // For each admissible second vertex μ, the parents of c it can reach.
                let mut firsts: Vec<(usize, Vec<bool>)> = Vec::new();
                for mu in self.nb(a) {
                    if mu == c || !self.potentially_directed(a, mu) {
                        continue;
                    }
                    let reached = reachable_simple(
                        (a, mu),
                        |u, v| self.nb(v).into_iter().filter(move |&w| w != u && w != a && w != c).collect(),
                        |u, v, w| self.potentially_directed(v, w) && !self.adj(u, w),
                        &parents,
                    );
                    if reached.iter().any(|&r| r) {
                        firsts.push((mu, reached));
                    }
                }
                let fires = (0..parents.len()).any(|bi| {
                    (0..parents.len()).any(|di| {
                        bi != di
                            && firsts.iter().any(|(mu, rb)| {
                                rb[bi] && firsts.iter().any(|(omega, rd)| rd[di] && mu != omega && !self.adj(*mu, *omega))
                            })
                    })
                });
                if fires {
                    self.set("R10", c, a, Tail)?;
                }
            }
        }
        Ok(())
    }
}

type State = (usize, usize);

fn reconstruct(state: State, parent: &HashMap<State, State>) -> Vec<usize> {
    let mut rev = vec![state.1, state.0];
    let mut cur = state;
    while let Some(&prev) = parent.get(&cur) {
        rev.push(prev.0);
        cur = prev;
    }
    rev.reverse();
    rev
}

fn is_simple(path: &[usize]) -> bool {
    let mut seen: Vec<usize> = path.to_vec();
    seen.sort_unstable();
    seen.windows(2).all(|w| w[0] != w[1])
}

/// Breadth-first search over (previous, current) pairs from `starts`, where
/// `(u, v) → (v, w)` is allowed when `step(u, v, w)`. Returns the first
/// simple path reaching `target` whose penultimate vertex passes `accept`.
/// States at `target` are not expanded.
fn first_simple_path(
    starts: &[State],
    next: impl Fn(usize, usize) -> Vec<usize>,
    step: impl Fn(usize, usize, usize) -> bool,
    target: usize,
    accept: impl Fn(usize) -> bool,
) -> Option<Vec<usize>> {
    let mut parent: HashMap<State, State> = HashMap::new();
    let mut seen: std::collections::HashSet<State> = starts.iter().copied().collect();
    let mut queue: VecDeque<State> = starts.iter().copied().collect();
    while let Some((u, v)) = queue.pop_front() {
        if v == target {
            continue;
        }
        for w in next(u, v) {
            if !step(u, v, w) || !seen.insert((v, w)) {
                continue;
            }
            parent.insert((v, w), (u, v));
            if w == target {
                let path = reconstruct((v, w), &parent);
                if accept(v) && is_simple(&path) {
                    return Some(path);
                }
            }
            queue.push_back((v, w));
        }
    }
    None
}

/// For each target, whether some state ending there is reachable from
/// `start` by a simple path.
fn reachable_simple(
    start: State,
    next: impl Fn(usize, usize) -> Vec<usize>,
    step: impl Fn(usize, usize, usize) -> bool,
    targets: &[usize],
) -> Vec<bool> {
    let mut hit = vec![false; targets.len()];
    let mark_hit = |hit: &mut Vec<bool>, v: usize| {
        if let Some(k) = targets.iter().position(|&t| t == v) {
            hit[k] = true;
        }
    };
    mark_hit(&mut hit, start.1);
    let mut parent: HashMap<State, State> = HashMap::new();
    let mut seen: std::collections::HashSet<State> = std::collections::HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some((u, v)) = queue.pop_front() {
        for w in next(u, v) {
            if !step(u, v, w) || !seen.insert((v, w)) {
                continue;
            }
            parent.insert((v, w), (u, v));
            if targets.contains(&w) && is_simple(&reconstruct((v, w), &parent)) {
                mark_hit(&mut hit, w);
            }
            queue.push_back((v, w));
        }
    }
    hit
}

/// Applies the configured rules in ascending order, sweeping all triples
/// lexicographically, until a full pass changes nothing.
pub fn apply_orientation_rules(g: &MixedGraph, sep: &SepsetMap, cfg: &FciConfig) -> Result<MixedGraph, FciError> {
    let mut o = Orienter { g: g.clone(), sep, changed: true };
    while o.changed && o.g.has_circles() {
        o.changed = false;
        o.r1()?;
        o.r2()?;
        o.r3()?;
        o.r4()?;
        if cfg.rule_set == RuleSet::Full {
            o.r5()?;
            o.r6()?;
            o.r7()?;
        }
        o.r8()?;
        o.r9()?;
        o.r10()?;
    }
    Ok(o.g)
}
