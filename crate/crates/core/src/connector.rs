//! Embedding state and short disjoint path routing.
//!
//! An [`EmbeddingState`] is the growing subgraph `S`: its vertices, the lift
//! edges it uses, and every vertex's degree inside `S`. [`connect`] adds one
//! path whose interior avoids `S`; [`check_extendable`] audits the
//! `(D, m)`-extendability inequality on singletons and sampled sets.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lift::{LiftError, LiftGraph, VertexId};
use crate::par::{self, Execution};
use crate::rng::{derive_seed, substream, tag};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConnectError {
    #[error("D must be at least 3 and m at least 1, got D = {d}, m = {m}")]
    InvalidParams { d: usize, m: usize },
    #[error("vertex {0} is outside the lift")]
    OutOfRange(VertexId),
    #[error("fiber {0} is outside the lift")]
    FiberOutOfRange(usize),
    #[error("endpoint {0} is not in S")]
    NotInState(VertexId),
    #[error("endpoints coincide at {0}")]
    SameEndpoints(VertexId),
    #[error("endpoint {vertex} has S-degree {degree}, more than D/2 with D = {d}")]
    DegreeTooHigh { vertex: VertexId, degree: usize, d: usize },
    #[error("no {u}-{v} path of length at most {max_len} avoids S")]
    NoPathWithinBudget { u: VertexId, v: VertexId, max_len: usize },
    #[error("set size {size} is outside [1, 2m = {limit}]")]
    SizeRefused { size: usize, limit: usize },
    #[error("{0} {1} is not an unused lift edge")]
    NotAnEdge(VertexId, VertexId),
    #[error("state file: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtendabilityParams {
    pub d: usize,
    pub m: usize,
}

impl ExtendabilityParams {
    pub fn new(d: usize, m: usize) -> Result<Self, ConnectError> {
        if d < 3 || m < 1 {
            return Err(ConnectError::InvalidParams { d, m });
        }
        Ok(ExtendabilityParams { d, m })
    }

    /// `(D, m) = (⌊n^0.99⌋, ⌈5 ℓ ln n⌉)`, clamped to the valid range.
    pub fn asymptotic(n: usize, ell: usize) -> Self {
        let n = n.max(2) as f64;
        let d = (n.powf(0.99).floor() as usize).max(3);
        let m = ((5.0 * ell as f64 * n.ln()).ceil() as usize).max(1);
        ExtendabilityParams { d, m }
    }

    /// `3 ⌈ln(2m) / ln(D - 1)⌉`.
    pub fn max_path_len(&self) -> usize {
        let ratio = (2.0 * self.m as f64).ln() / ((self.d - 1) as f64).ln();
        (3 * ratio.ceil().max(1.0) as usize).max(1)
    }
}

/// The subgraph `S` together with the fibers that paths may use.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddingState {
    params: ExtendabilityParams,
    ell: usize,
    n: usize,
    region: Option<Vec<bool>>,
    in_s: Vec<bool>,
    s_degree: Vec<u32>,
    size: usize,
    used_edges: BTreeSet<(VertexId, VertexId)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathResult {
    pub path: Vec<VertexId>,
}

impl PathResult {
    pub fn len(&self) -> usize {
        self.path.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.path.len() <= 1
    }

    pub fn internal(&self) -> &[VertexId] {
        &self.path[1..self.path.len() - 1]
    }
}

fn edge_key(a: VertexId, b: VertexId) -> (VertexId, VertexId) {
    (a.min(b), a.max(b))
}

impl EmbeddingState {
    /// Empty `S` over the whole lift.
    pub fn new(g: &LiftGraph, params: ExtendabilityParams) -> Self {
        let total = g.vertex_count();
        EmbeddingState {
            params,
            ell: g.ell(),
            n: g.n(),
            region: None,
            in_s: vec![false; total],
            s_degree: vec![0; total],
            size: 0,
            used_edges: BTreeSet::new(),
        }
    }

    /// Empty `S` whose paths may only use the listed fibers.
    pub fn within_fibers(g: &LiftGraph, params: ExtendabilityParams, fibers: &[usize]) -> Result<Self, ConnectError> {
        let mut s = Self::new(g, params);
        let mut mask = vec![false; g.n()];
        for &f in fibers {
            if f >= g.n() {
                return Err(ConnectError::FiberOutOfRange(f));
            }
            mask[f] = true;
        }
        s.region = Some(mask);
        Ok(s)
    }

    pub fn params(&self) -> ExtendabilityParams {
        self.params
    }

    fn index(&self, v: VertexId) -> usize {
        v.fiber * self.ell + v.layer
    }

    fn vertex(&self, i: usize) -> VertexId {
        VertexId::new(i / self.ell, i % self.ell)
    }

    fn in_range(&self, v: VertexId) -> bool {
        v.fiber < self.n && v.layer < self.ell
    }

    pub fn in_region(&self, v: VertexId) -> bool {
        self.region.as_ref().is_none_or(|m| m[v.fiber])
    }

    pub fn region_fibers(&self) -> Vec<usize> {
        (0..self.n).filter(|&f| self.region.as_ref().is_none_or(|m| m[f])).collect()
    }

    /// Adds an isolated vertex to `S`.
    pub fn add_vertex(&mut self, v: VertexId) -> Result<(), ConnectError> {
        if !self.in_range(v) {
            return Err(ConnectError::OutOfRange(v));
        }
        let i = self.index(v);
        if !std::mem::replace(&mut self.in_s[i], true) {
            self.size += 1;
        }
        Ok(())
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.in_range(v) && self.in_s[self.index(v)]
    }

    pub fn s_degree(&self, v: VertexId) -> usize {
        if self.in_range(v) {
            self.s_degree[self.index(v)] as usize
        } else {
            0
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.size
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.in_s.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| self.vertex(i))
    }

    pub fn used_edges(&self) -> &BTreeSet<(VertexId, VertexId)> {
        &self.used_edges
    }

    pub fn max_s_degree(&self) -> usize {
        self.s_degree.iter().copied().max().unwrap_or(0) as usize
    }

    /// Degree table matches the edge set, endpoints lie in `S`, degrees ≤ D.
    pub fn is_consistent(&self) -> bool {
        let mut deg = vec![0u32; self.s_degree.len()];
        for &(a, b) in &self.used_edges {
            if !self.contains(a) || !self.contains(b) {
                return false;
            }
            deg[self.index(a)] += 1;
            deg[self.index(b)] += 1;
        }
        deg == self.s_degree && self.max_s_degree() <= self.params.d
    }

    /// Adds a path that was found elsewhere (for example a matching edge).
    /// Every step must be an unused lift edge.
    pub fn insert_path(&mut self, g: &LiftGraph, path: &[VertexId]) -> Result<(), ConnectError> {
        for &x in path {
            if !self.in_range(x) {
                return Err(ConnectError::OutOfRange(x));
            }
        }
        for w in path.windows(2) {
            if !g.is_edge(w[0], w[1]) || self.used_edges.contains(&edge_key(w[0], w[1])) {
                return Err(ConnectError::NotAnEdge(w[0], w[1]));
            }
        }
        self.add_path(path);
        Ok(())
    }

    fn add_path(&mut self, path: &[VertexId]) {
        for &x in path {
            let _ = self.add_vertex(x);
        }
        for w in path.windows(2) {
            self.used_edges.insert(edge_key(w[0], w[1]));
            let (a, b) = (self.index(w[0]), self.index(w[1]));
            self.s_degree[a] += 1;
            self.s_degree[b] += 1;
        }
    }

    pub fn to_json(&self) -> String {
        let vertices: Vec<VertexId> = self.vertices().collect();
        let file = StateFile {
            n: self.n,
            ell: self.ell,
            params: self.params,
            region: self.region.as_ref().map(|_| self.region_fibers()),
            s_degree: vertices.iter().map(|&v| self.s_degree(v)).collect(),
            vertices,
            used_edges: self.used_edges.iter().map(|&(a, b)| [a, b]).collect(),
        };
        let mut s = serde_json::to_string(&file).expect("state serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_json(g: &LiftGraph, text: &str) -> Result<Self, ConnectError> {
        let file: StateFile = serde_json::from_str(text).map_err(|e| ConnectError::Parse(e.to_string()))?;
        if file.n != g.n() || file.ell != g.ell() {
            return Err(ConnectError::Parse("state was built for a different lift".into()));
        }
        let params = ExtendabilityParams::new(file.params.d, file.params.m)?;
        let mut s = match &file.region {
            Some(f) => Self::within_fibers(g, params, f)?,
            None => Self::new(g, params),
        };
        for &v in &file.vertices {
            s.add_vertex(v)?;
        }
        for [a, b] in file.used_edges {
            if !g.is_edge(a, b) {
                return Err(ConnectError::Parse(format!("{a} {b} is not a lift edge")));
            }
            s.add_path(&[a, b]);
        }
        let recorded: Vec<usize> = file.vertices.iter().map(|&v| s.s_degree(v)).collect();
        if recorded != file.s_degree || s.vertex_count() != file.vertices.len() || !s.is_consistent() {
            return Err(ConnectError::Parse("s_degree does not match used_edges".into()));
        }
        Ok(s)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    n: usize,
    ell: usize,
    params: ExtendabilityParams,
    region: Option<Vec<usize>>,
    vertices: Vec<VertexId>,
    s_degree: Vec<usize>,
    used_edges: Vec<[VertexId; 2]>,
}

impl From<LiftError> for ConnectError {
    fn from(e: LiftError) -> Self {
        ConnectError::Parse(e.to_string())
    }
}

/// Routes a `u`-`v` path of length at most `max_len` whose interior avoids
/// `S` and stays inside the state's region, then adds it to `S`.
///
/// Bidirectional breadth-first search; the shorter frontier grows first and
/// the meeting vertex with the smallest total distance wins, ties going to the
/// smallest `(fiber, layer)`. On error `S` is untouched.
pub fn connect(
    g: &LiftGraph,
    s: &mut EmbeddingState,
    u: VertexId,
    v: VertexId,
    max_len: usize,
) -> Result<PathResult, ConnectError> {
    connect_with_tiebreak(g, s, u, v, max_len, None)
}

/// As [`connect`], but with `Some(seed)` ties are broken by a seeded hash of
/// the vertex instead of its coordinates.
pub fn connect_with_tiebreak(
    g: &LiftGraph,
    s: &mut EmbeddingState,
    u: VertexId,
    v: VertexId,
    max_len: usize,
    tiebreak: Option<u64>,
) -> Result<PathResult, ConnectError> {
    for x in [u, v] {
        if !g.contains(x) {
            return Err(ConnectError::OutOfRange(x));
        }
        if !s.contains(x) {
            return Err(ConnectError::NotInState(x));
        }
        let degree = s.s_degree(x);
        if 2 * degree > s.params.d {
            return Err(ConnectError::DegreeTooHigh { vertex: x, degree, d: s.params.d });
        }
    }
    if u == v {
        return Err(ConnectError::SameEndpoints(u));
    }
    let path = route(g, s, u, v, max_len, tiebreak).ok_or(ConnectError::NoPathWithinBudget { u, v, max_len })?;
    s.add_path(&path);
    Ok(PathResult { path })
}

const UNSEEN: u32 = u32::MAX;

struct Side {
    root: usize,
    dist: Vec<u32>,
    parent: Vec<u32>,
    frontier: Vec<usize>,
    depth: u32,
}

impl Side {
    fn new(root: usize, total: usize) -> Self {
        let mut dist = vec![UNSEEN; total];
        dist[root] = 0;
        Side { root, dist, parent: vec![UNSEEN; total], frontier: vec![root], depth: 0 }
    }

    fn trace(&self, mut x: usize) -> Vec<usize> {
        let mut out = vec![x];
        while x != self.root {
            x = self.parent[x] as usize;
            out.push(x);
        }
        out
    }
}

fn route(
    g: &LiftGraph,
    s: &EmbeddingState,
    u: VertexId,
    v: VertexId,
    max_len: usize,
    tiebreak: Option<u64>,
) -> Option<Vec<VertexId>> {
    if max_len == 0 {
        return None;
    }
    let total = g.vertex_count();
    let key = |x: usize| -> u64 {
        match tiebreak {
            None => x as u64,
            Some(seed) => derive_seed(seed, &[x as u64]),
        }
    };
    let free = |x: usize| !s.in_s[x] && s.in_region(g.vertex(x));
    let (iu, iv) = (g.index(u), g.index(v));
    let direct_used = s.used_edges.contains(&edge_key(u, v));
    let mut sides = [Side::new(iu, total), Side::new(iv, total)];

    loop {
        if (sides[0].depth + sides[1].depth) as usize >= max_len {
            return None;
        }
        let x_side = if sides[1].frontier.len() < sides[0].frontier.len() { 1 } else { 0 };
        let (a, b) = sides.split_at_mut(1);
        let (this, other) = if x_side == 0 { (&mut a[0], &b[0]) } else { (&mut b[0], &a[0]) };

        let mut next = Vec::new();
        for &x in &this.frontier {
            if x != this.root && !free(x) {
                continue;
            }
            for y in g.neighbors_iter(g.vertex(x)) {
                let iy = g.index(y);
                if this.dist[iy] != UNSEEN {
                    continue;
                }
                let is_other_root = iy == other.root;
                if !(free(iy) || is_other_root) {
                    continue;
                }
                if is_other_root && x == this.root && direct_used {
                    continue;
                }
                this.dist[iy] = this.depth + 1;
                this.parent[iy] = x as u32;
                next.push(iy);
            }
        }
        if next.is_empty() {
            return None;
        }
        next.sort_unstable_by_key(|&x| key(x));
        this.depth += 1;
        this.frontier = next;

        let meet = this
            .frontier
            .iter()
            .filter(|&&w| other.dist[w] != UNSEEN && (w == other.root || free(w)))
            .min_by_key(|&&w| (this.dist[w] + other.dist[w], key(w)))
            .copied();
        if let Some(w) = meet {
            if (this.dist[w] + other.dist[w]) as usize > max_len {
                return None;
            }
            let (from_u, from_v) = (&sides[0], &sides[1]);
            let mut left = from_u.trace(w);
            left.reverse();
            let right = from_v.trace(w);
            left.extend_from_slice(&right[1..]);
            return Some(left.into_iter().map(|i| g.vertex(i)).collect());
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Full passes over the pair list; each retry restarts from the initial
    /// state with a shuffled order and seeded tie-breaking.
    pub attempts: usize,
    pub seed: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { attempts: 3, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BatchOutcome {
    /// One slot per input pair, in input order.
    pub paths: Vec<Option<PathResult>>,
    pub failures: Vec<(usize, ConnectErrorKind)>,
    pub attempts_used: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConnectErrorKind(pub String);

impl BatchOutcome {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Connects every pair with pairwise internally disjoint paths. When some
/// pair fails the whole batch is retried from the original state; the
/// attempt with the fewest failures is kept in `S`.
pub fn batch_connect(
    g: &LiftGraph,
    s: &mut EmbeddingState,
    pairs: &[(VertexId, VertexId)],
    max_len: usize,
    policy: RetryPolicy,
) -> BatchOutcome {
    let initial = s.clone();
    let mut best: Option<(EmbeddingState, BatchOutcome)> = None;
    for attempt in 0..policy.attempts.max(1) {
        let mut state = initial.clone();
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        let tiebreak = if attempt == 0 {
            None
        } else {
            order.shuffle(&mut substream(policy.seed, &[tag::RETRY, attempt as u64]));
            Some(derive_seed(policy.seed, &[tag::RETRY, attempt as u64, 1]))
        };
        let mut outcome =
            BatchOutcome { paths: vec![None; pairs.len()], failures: Vec::new(), attempts_used: attempt + 1 };
        for &k in &order {
            let (a, b) = pairs[k];
            match connect_with_tiebreak(g, &mut state, a, b, max_len, tiebreak) {
                Ok(p) => outcome.paths[k] = Some(p),
                Err(e) => outcome.failures.push((k, ConnectErrorKind(e.to_string()))),
            }
        }
        outcome.failures.sort_by_key(|f| f.0);
        let done = outcome.failures.is_empty();
        let better = best.as_ref().is_none_or(|(_, b)| outcome.failures.len() < b.failures.len());
        if better {
            best = Some((state, outcome));
        }
        if done {
            break;
        }
    }
    let (state, mut outcome) = best.expect("at least one attempt runs");
    outcome.attempts_used = outcome.attempts_used.max(1);
    *s = state;
    outcome
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtendSizeSummary {
    pub size: usize,
    pub tested: usize,
    pub exhaustive: bool,
    pub worst_margin: i64,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtendabilityReport {
    pub params: ExtendabilityParams,
    pub tested_sets: usize,
    /// Minimum of `|N'(U) \ V(S)| - ((D-1)|U| - Σ_{u ∈ U ∩ V(S)} (d_S(u) - 1))`.
    pub worst_margin: i64,
    pub violating_set: Option<Vec<VertexId>>,
    pub per_size: Vec<ExtendSizeSummary>,
}

impl ExtendabilityReport {
    pub fn violations(&self) -> usize {
        self.per_size.iter().map(|p| p.violations).sum()
    }
}

/// Audits the extendability inequality inside the state's region: exactly on
/// all singletons, on `trials` random sets for each larger requested size.
/// Sizes outside `[1, 2m]` are refused.
pub fn check_extendable(
    g: &LiftGraph,
    s: &EmbeddingState,
    set_sizes: &[usize],
    trials: usize,
    seed: u64,
) -> Result<ExtendabilityReport, ConnectError> {
    check_extendable_with(g, s, set_sizes, trials, seed, Execution::default())
}

pub fn check_extendable_with(
    g: &LiftGraph,
    s: &EmbeddingState,
    set_sizes: &[usize],
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<ExtendabilityReport, ConnectError> {
    let limit = 2 * s.params.m;
    let host: Vec<usize> = (0..g.vertex_count()).filter(|&i| s.in_region(g.vertex(i))).collect();
    for &size in set_sizes {
        if size == 0 || size > limit || size > host.len() {
            return Err(ConnectError::SizeRefused { size, limit: limit.min(host.len()) });
        }
    }
    let d1 = s.params.d as i64 - 1;
    let margin = |u: &[usize], stamps: &mut [u32], stamp: u32| -> i64 {
        let mut outside = 0i64;
        let mut correction = 0i64;
        for &x in u {
            if s.in_s[x] {
                correction += s.s_degree[x] as i64 - 1;
            }
            for y in g.neighbors_iter(g.vertex(x)) {
                let iy = g.index(y);
                if s.in_region(y) && !s.in_s[iy] && stamps[iy] != stamp {
                    stamps[iy] = stamp;
                    outside += 1;
                }
            }
        }
        outside - (d1 * u.len() as i64 - correction)
    };

    let mut report = ExtendabilityReport {
        params: s.params,
        tested_sets: 0,
        worst_margin: i64::MAX,
        violating_set: None,
        per_size: Vec::new(),
    };
    for &size in set_sizes {
        let exhaustive = size == 1;
        let jobs = par::chunks(if exhaustive { host.len() } else { trials }, 256);
        let results = par::map_slice(exec, &jobs, |&(lo, hi)| {
            let mut stamps = vec![0u32; g.vertex_count()];
            let mut rng = substream(seed, &[tag::EXTENDABLE, size as u64, lo as u64]);
            let mut worst = (i64::MAX, Vec::new());
            let mut violations = 0;
            for (k, t) in (lo..hi).enumerate() {
                let u: Vec<usize> = if exhaustive {
                    vec![host[t]]
                } else {
                    index::sample(&mut rng, host.len(), size).into_iter().map(|i| host[i]).collect()
                };
                let mg = margin(&u, &mut stamps, k as u32 + 1);
                if mg < 0 {
                    violations += 1;
                }
                if mg < worst.0 {
                    worst = (mg, u);
                }
            }
            (worst, violations, hi - lo)
        });
        let mut summary = ExtendSizeSummary { size, tested: 0, exhaustive, worst_margin: i64::MAX, violations: 0 };
        let mut worst_set = Vec::new();
        for ((mg, u), violations, tested) in results {
            summary.tested += tested;
            summary.violations += violations;
            if mg < summary.worst_margin {
                summary.worst_margin = mg;
                worst_set = u;
            }
        }
        report.tested_sets += summary.tested;
        report.worst_margin = report.worst_margin.min(summary.worst_margin);
        if summary.violations > 0 && report.violating_set.is_none() {
            let mut set: Vec<_> = worst_set.into_iter().map(|i| g.vertex(i)).collect();
            set.sort_unstable();
            report.violating_set = Some(set);
        }
        report.per_size.push(summary);
    }
    Ok(report)
}

/// Groups paths by their interior vertex sets; used by tests and the builders
/// to assert pairwise disjointness.
pub fn interiors_disjoint<'a>(paths: impl IntoIterator<Item = &'a PathResult>) -> bool {
    let mut seen: BTreeMap<VertexId, usize> = BTreeMap::new();
    for (k, p) in paths.into_iter().enumerate() {
        for &x in p.internal() {
            if seen.insert(x, k).is_some() {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::complete_base;
    use proptest::prelude::*;

    fn v(f: usize, l: usize) -> VertexId {
        VertexId::new(f, l)
    }

    #[test]
    fn params_validation_and_path_budget() {
        assert!(ExtendabilityParams::new(2, 5).is_err());
        assert!(ExtendabilityParams::new(3, 0).is_err());
        let p = ExtendabilityParams::new(3, 1).unwrap();
        // ln 2 / ln 2 = 1
        assert_eq!(p.max_path_len(), 3);
        let p = ExtendabilityParams::asymptotic(48, 64);
        assert_eq!(p.d, 46);
        assert_eq!(p.m, (5.0 * 64.0 * 48f64.ln()).ceil() as usize);
        assert_eq!(p.max_path_len(), 9);
    }

    #[test]
    fn adjacent_endpoints_use_the_edge() {
        let g = LiftGraph::sample_uniform(&complete_base(5).unwrap(), 4, 7).unwrap();
        let mut s = EmbeddingState::new(&g, ExtendabilityParams::new(4, 4).unwrap());
        let u = v(0, 0);
        let w = g.partner(u, 3).unwrap();
        s.add_vertex(u).unwrap();
        s.add_vertex(w).unwrap();
        let p = connect(&g, &mut s, u, w, 6).unwrap();
        assert_eq!(p.path, vec![u, w]);
        assert_eq!(s.vertex_count(), 2);
        assert_eq!((s.s_degree(u), s.s_degree(w)), (1, 1));
        // the edge is now used: a second connection must go around
        let p2 = connect(&g, &mut s, u, w, 6).unwrap();
        assert!(p2.len() >= 2);
        assert!(s.is_consistent());
    }

    #[test]
    fn degrees_after_a_longer_path() {
        let g = LiftGraph::sample_uniform(&complete_base(6).unwrap(), 6, 3).unwrap();
        let mut s = EmbeddingState::new(&g, ExtendabilityParams::new(5, 10).unwrap());
        let (a, b) = (v(0, 0), v(0, 1));
        s.add_vertex(a).unwrap();
        s.add_vertex(b).unwrap();
        let p = connect(&g, &mut s, a, b, 8).unwrap();
        // same fiber: at least two steps
        assert!(p.len() >= 2);
        assert_eq!((s.s_degree(a), s.s_degree(b)), (1, 1));
        for &x in p.internal() {
            assert_eq!(s.s_degree(x), 2);
        }
        for w in p.path.windows(2) {
            assert!(g.is_edge(w[0], w[1]));
        }
    }

    #[test]
    fn failure_leaves_state_untouched() {
        let g = LiftGraph::sample_uniform(&complete_base(4).unwrap(), 3, 1).unwrap();
        let mut s = EmbeddingState::new(&g, ExtendabilityParams::new(3, 2).unwrap());
        // block everything except the two endpoints
        for x in g.vertices() {
            s.add_vertex(x).unwrap();
        }
        let before = s.to_json();
        let (a, b) = (v(0, 0), v(0, 1));
        let err = connect(&g, &mut s, a, b, 10).unwrap_err();
        assert!(matches!(err, ConnectError::NoPathWithinBudget { .. }));
        assert_eq!(s.to_json(), before);
    }

    #[test]
    fn precondition_errors() {
        let g = LiftGraph::sample_uniform(&complete_base(4).unwrap(), 3, 1).unwrap();
        let mut s = EmbeddingState::new(&g, ExtendabilityParams::new(3, 2).unwrap());
        s.add_vertex(v(0, 0)).unwrap();
        assert_eq!(connect(&g, &mut s, v(0, 0), v(1, 0), 5), Err(ConnectError::NotInState(v(1, 0))));
        assert_eq!(connect(&g, &mut s, v(0, 0), v(0, 0), 5), Err(ConnectError::SameEndpoints(v(0, 0))));
        assert_eq!(connect(&g, &mut s, v(0, 0), v(9, 0), 5), Err(ConnectError::OutOfRange(v(9, 0))));
    }

    #[test]
    fn region_restricts_interior() {
        let g = LiftGraph::sample_uniform(&complete_base(6).unwrap(), 5, 2).unwrap();
        let mut s = EmbeddingState::within_fibers(&g, ExtendabilityParams::new(6, 10).unwrap(), &[0, 1, 2, 3]).unwrap();
        let (a, b) = (v(0, 0), v(0, 1));
        s.add_vertex(a).unwrap();
        s.add_vertex(b).unwrap();
        if let Ok(p) = connect(&g, &mut s, a, b, 10) {
            assert!(p.internal().iter().all(|x| x.fiber <= 3));
        }
    }

    #[test]
    fn batch_connect_edge_cases() {
        let g = LiftGraph::sample_uniform(&complete_base(5).unwrap(), 4, 9).unwrap();
        let mut s = EmbeddingState::new(&g, ExtendabilityParams::new(6, 4).unwrap());
        let out = batch_connect(&g, &mut s, &[], 6, RetryPolicy::default());
        assert!(out.paths.is_empty() && out.is_complete());

        let pairs: Vec<_> = (0..4).map(|l| (v(0, l), g.partner(v(0, l), 1).unwrap())).collect();
        for &(a, b) in &pairs {
            s.add_vertex(a).unwrap();
            s.add_vertex(b).unwrap();
        }
        let before = s.vertex_count();
        let out = batch_connect(&g, &mut s, &pairs, 6, RetryPolicy::default());
        assert!(out.is_complete());
        assert!(out.paths.iter().all(|p| p.as_ref().unwrap().len() == 1));
        assert_eq!(s.vertex_count(), before);
    }

    #[test]
    fn state_file_round_trip() {
        let g = LiftGraph::sample_uniform(&complete_base(6).unwrap(), 5, 4).unwrap();
        let mut s = EmbeddingState::within_fibers(&g, ExtendabilityParams::new(5, 3).unwrap(), &[0, 1, 2, 4]).unwrap();
        s.add_vertex(v(0, 0)).unwrap();
        s.add_vertex(v(1, 1)).unwrap();
        let _ = connect(&g, &mut s, v(0, 0), v(1, 1), 9);
        let text = s.to_json();
        assert_eq!(EmbeddingState::from_json(&g, &text).unwrap(), s);
        assert!(EmbeddingState::from_json(&g, "{}").is_err());
    }

    #[test]
    fn extendability_singletons_on_empty_state() {
        let (n, d) = (8, 5);
        let g = LiftGraph::sample_uniform(&complete_base(n).unwrap(), 6, 4).unwrap();
        let s = EmbeddingState::new(&g, ExtendabilityParams::new(d, 3).unwrap());
        let r = check_extendable(&g, &s, &[1], 0, 0).unwrap();
        // n - 1 neighbours against D - 1
        assert_eq!(r.worst_margin, (n - 1) as i64 - (d - 1) as i64);
        assert_eq!(r.tested_sets, g.vertex_count());
        assert!(r.violating_set.is_none());
        assert!(matches!(check_extendable(&g, &s, &[7], 10, 0), Err(ConnectError::SizeRefused { .. })));
    }

    #[test]
    fn extendability_correction_for_degree_one_vertices() {
        // S-vertices with degree 1 contribute zero to the correction sum
        let g = LiftGraph::sample_uniform(&complete_base(6).unwrap(), 6, 8).unwrap();
        let mut s = EmbeddingState::new(&g, ExtendabilityParams::new(4, 3).unwrap());
        let a = v(0, 0);
        let b = g.partner(a, 1).unwrap();
        s.add_vertex(a).unwrap();
        s.add_vertex(b).unwrap();
        connect(&g, &mut s, a, b, 3).unwrap();
        let r = check_extendable(&g, &s, &[1], 0, 0).unwrap();
        // a has 5 neighbours, one of which (b) is in S: margin 4 - 3
        let mut stamps = vec![0u32; g.vertex_count()];
        let from_a = {
            let outside = g.neighbors_iter(a).filter(|y| !s.contains(*y)).count() as i64;
            stamps[0] = 0;
            outside - 3
        };
        assert_eq!(from_a, 1);
        assert!(r.worst_margin <= from_a);
    }

    proptest! {
        #[test]
        fn sequential_connects_stay_disjoint(seed: u64, ell in 8usize..14) {
            let n = 8;
            let g = LiftGraph::sample_uniform(&complete_base(n).unwrap(), ell, seed).unwrap();
            let mut s = EmbeddingState::new(&g, ExtendabilityParams::new(6, 8).unwrap());
            let ends: Vec<VertexId> = (0..n).map(|f| v(f, 0)).collect();
            for &x in &ends {
                s.add_vertex(x).unwrap();
            }
            let mut paths = Vec::new();
            for i in 0..n {
                let j = (i + 1) % n;
                let before: BTreeSet<VertexId> = s.vertices().collect();
                if let Ok(p) = connect(&g, &mut s, ends[i], ends[j], 6) {
                    prop_assert!(p.len() <= 6);
                    for &x in p.internal() {
                        prop_assert!(!before.contains(&x));
                    }
                    for w in p.path.windows(2) {
                        prop_assert!(g.is_edge(w[0], w[1]));
                    }
                    paths.push(p);
                }
                prop_assert!(s.is_consistent());
            }
            prop_assert!(interiors_disjoint(&paths));
        }

        #[test]
        fn bfs_finds_shortest_paths(seed: u64) {
            let g = LiftGraph::sample_uniform(&complete_base(6).unwrap(), 5, seed).unwrap();
            let params = ExtendabilityParams::new(6, 8).unwrap();
            let (a, b) = (v(0, 0), v(0, 1));
            // plain BFS distance through vertices outside S = {a, b}
            let mut dist = vec![usize::MAX; g.vertex_count()];
            let mut queue = std::collections::VecDeque::from([a]);
            dist[g.index(a)] = 0;
            while let Some(x) = queue.pop_front() {
                if x == b || (x != a && x == b) {
                    continue;
                }
                for y in g.neighbors_iter(x) {
                    if dist[g.index(y)] == usize::MAX {
                        dist[g.index(y)] = dist[g.index(x)] + 1;
                        if y != b {
                            queue.push_back(y);
                        }
                    }
                }
            }
            let mut s = EmbeddingState::new(&g, params);
            s.add_vertex(a).unwrap();
            s.add_vertex(b).unwrap();
            let p = connect(&g, &mut s, a, b, 20).unwrap();
            prop_assert_eq!(p.len(), dist[g.index(b)]);
        }
    }
}
