//! Exact brute-force references for tiny graphs.
//!
//! Graphs have at most 64 vertices and store adjacency as `u64` masks. All
//! searches take an [`OracleBudget`] and say so when they run out instead of
//! returning a guess.

use std::collections::HashSet;
use std::fmt;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::seq::index;
use serde::Serialize;
use thiserror::Error;

use crate::lift::{LiftGraph, VertexId};
use crate::props::{binomial, next_combination};
use crate::rng::{substream, tag};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("graph has {nodes} vertices, above the limit of {limit}")]
    TooLarge { nodes: usize, limit: usize },
    #[error("budget fields must be positive")]
    InvalidBudget,
    #[error("edge list line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("ell = {ell} is above the permanent cap of {cap}")]
    EllTooLarge { ell: usize, cap: usize },
    #[error("pair ({0}, {1}) is outside [ell] x [ell]")]
    PairOutOfRange(usize, usize),
    #[error("vertex {0} is outside the lift")]
    OutOfRange(VertexId),
    #[error("branch vertex {0} is outside the graph")]
    BranchOutOfRange(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OracleBudget {
    pub max_nodes: usize,
    pub max_states: u64,
    pub time_limit: Duration,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_nodes: 24, max_states: 100_000_000, time_limit: Duration::from_secs(60) }
    }
}

impl OracleBudget {
    pub fn validate(&self) -> Result<(), OracleError> {
        if self.max_nodes == 0 || self.max_states == 0 || self.time_limit.is_zero() {
            return Err(OracleError::InvalidBudget);
        }
        Ok(())
    }
}

/// Counts search states against a budget.
struct Meter {
    states: u64,
    max_states: u64,
    deadline: Instant,
    exhausted: bool,
}

impl Meter {
    fn new(budget: &OracleBudget) -> Self {
        Meter {
            states: 0,
            max_states: budget.max_states,
            deadline: Instant::now() + budget.time_limit,
            exhausted: false,
        }
    }

    /// False once the budget is spent.
    fn tick(&mut self) -> bool {
        self.states += 1;
        if self.states > self.max_states || (self.states & 1023 == 0 && Instant::now() > self.deadline) {
            self.exhausted = true;
        }
        !self.exhausted
    }
}

/// Simple undirected graph on at most 64 vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleGraph {
    adj: Vec<u64>,
}

impl SimpleGraph {
    pub fn empty(n: usize) -> Result<Self, OracleError> {
        if n > 64 {
            return Err(OracleError::TooLarge { nodes: n, limit: 64 });
        }
        Ok(SimpleGraph { adj: vec![0; n] })
    }

    /// Loops are rejected, repeated edges merged.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, OracleError> {
        let mut g = Self::empty(n)?;
        for (k, (u, v)) in edges.into_iter().enumerate() {
            if u >= n || v >= n || u == v {
                return Err(OracleError::Parse { line: k + 1, reason: format!("bad edge {u} {v}") });
            }
            g.add_edge(u, v);
        }
        Ok(g)
    }

    /// One `u v` pair per line, 0-indexed; blank lines and `#` comments are
    /// skipped. The vertex count is one more than the largest index unless
    /// `n` is given.
    pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<Self, OracleError> {
        let mut edges = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| OracleError::Parse { line: k + 1, reason: format!("not an index: {s}") })
            };
            if parts.len() != 2 {
                return Err(OracleError::Parse { line: k + 1, reason: "expected two indices".into() });
            }
            let (u, v) = (parse(parts[0])?, parse(parts[1])?);
            if u == v {
                return Err(OracleError::Parse { line: k + 1, reason: format!("loop at {u}") });
            }
            edges.push((u, v));
        }
        let n = n.unwrap_or_else(|| edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0));
        Self::from_edges(n, edges)
    }

    pub fn from_lift(g: &LiftGraph) -> Result<Self, OracleError> {
        Self::from_edges(g.vertex_count(), g.edges().map(|(u, v)| (g.index(u), g.index(v))))
    }

    pub fn complete(n: usize) -> Result<Self, OracleError> {
        Self::from_edges(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn cycle(n: usize) -> Result<Self, OracleError> {
        Self::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)).filter(|&(a, b)| a != b))
    }

    pub fn petersen() -> Self {
        let outer = (0..5).map(|i| (i, (i + 1) % 5));
        let spokes = (0..5).map(|i| (i, i + 5));
        let inner = (0..5).map(|i| (5 + i, 5 + (i + 2) % 5));
        Self::from_edges(10, outer.chain(spokes).chain(inner)).expect("valid")
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        self.adj[u] |= 1 << v;
        self.adj[v] |= 1 << u;
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.adj.len() && self.adj[u] >> v & 1 == 1
    }

    pub fn neighbors_mask(&self, u: usize) -> u64 {
        self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].count_ones() as usize
    }

    pub fn max_degree(&self) -> usize {
        (0..self.adj.len()).map(|u| self.degree(u)).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.count_ones() as usize).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.adj.len()).flat_map(move |u| bits(self.adj[u] >> u >> 1).map(move |k| (u, u + 1 + k)))
    }

    fn edges_within(&self, set: u64) -> usize {
        bits(set).map(|u| (self.adj[u] & set).count_ones() as usize).sum::<usize>() / 2
    }

    fn full_mask(&self) -> u64 {
        match self.adj.len() {
            64 => u64::MAX,
            n => (1u64 << n) - 1,
        }
    }
}

fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            return None;
        }
        let i = mask.trailing_zeros() as usize;
        mask &= mask - 1;
        Some(i)
    })
}

/// Paths keyed by branch-slot pair.
pub type RoutedPaths = Vec<((usize, usize), Vec<usize>)>;

/// Branch vertices and one path per pair `(i, j)`, `i < j`, as vertex lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TopologicalClique {
    pub branch: Vec<usize>,
    pub paths: RoutedPaths,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HajosAnswer {
    /// Largest order with a certificate.
    pub lower: usize,
    /// True when every order above `lower` was refuted.
    pub exact: bool,
    /// Smallest order whose search ran out of budget, when not exact.
    pub unresolved: Option<usize>,
    pub witness: Option<TopologicalClique>,
    pub states: u64,
}

impl HajosAnswer {
    pub fn value(&self) -> Option<usize> {
        self.exact.then_some(self.lower)
    }
}

impl fmt::Display for HajosAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.unresolved {
            None => write!(f, "{}", self.lower),
            Some(u) => write!(f, "unknown above {} (order {u} unresolved)", self.lower),
        }
    }
}

/// Largest `b` with a `K_b` subdivision in `h`.
///
/// Orders descend from `Δ + 1`. For each order, branch sets of vertices with
/// degree at least `b - 1` are enumerated and kept only if they span at least
/// `C(b, 2) - (N - b)` edges, since every non-adjacent branch pair needs its
/// own vertex outside the set. Surviving sets go to [`routes_for_branch_set`].
/// Each order gets a fresh budget; a spent budget marks the order unresolved
/// and the search continues downward for a certified lower bound.
pub fn exact_hajos_number(h: &SimpleGraph, budget: &OracleBudget) -> Result<HajosAnswer, OracleError> {
    budget.validate()?;
    let n = h.num_vertices();
    if n > budget.max_nodes {
        return Err(OracleError::TooLarge { nodes: n, limit: budget.max_nodes });
    }
    let mut answer = HajosAnswer { lower: 0, exact: true, unresolved: None, witness: None, states: 0 };
    if n == 0 {
        return Ok(answer);
    }
    let top = (h.max_degree() + 1).min(n);
    for b in (1..=top).rev() {
        let mut meter = Meter::new(budget);
        let found = search_order(h, b, &mut meter);
        answer.states += meter.states;
        match found {
            Some(w) => {
                answer.lower = b;
                answer.witness = Some(w);
                return Ok(answer);
            }
            None if meter.exhausted => {
                answer.exact = false;
                answer.unresolved.get_or_insert(b);
            }
            None => {}
        }
    }
    Ok(answer)
}

fn search_order(h: &SimpleGraph, b: usize, meter: &mut Meter) -> Option<TopologicalClique> {
    let n = h.num_vertices();
    let candidates: Vec<usize> = (0..n).filter(|&u| h.degree(u) + 1 >= b).collect();
    if candidates.len() < b {
        return None;
    }
    let need = binomial(b, 2) as i64 - (n - b) as i64;
    let mut comb: Vec<usize> = (0..b).collect();
    loop {
        let set: u64 = comb.iter().fold(0, |m, &k| m | 1 << candidates[k]);
        if h.edges_within(set) as i64 >= need {
            let branch: Vec<usize> = comb.iter().map(|&k| candidates[k]).collect();
            match routes_in(h, &branch, meter) {
                Some(paths) => return Some(TopologicalClique { branch, paths }),
                None if meter.exhausted => return None,
                None => {}
            }
        } else if !meter.tick() {
            return None;
        }
        if !next_combination(&mut comb, candidates.len()) {
            return None;
        }
    }
}

/// Outcome of routing one branch set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Routing {
    Found(RoutedPaths),
    Impossible,
    BudgetExhausted,
}

/// Searches internally disjoint paths joining every pair of `branch`.
///
/// Adjacent pairs take their edge; this loses nothing because the edge can
/// replace any other path between them. Other pairs are routed by
/// backtracking over chordless paths through unused vertices, always
/// extending the pair with the fewest common neighbours available. A state is
/// abandoned when some open pair is disconnected or some branch vertex has
/// fewer free neighbours than open pairs; failed states are memoised.
pub fn routes_for_branch_set(h: &SimpleGraph, branch: &[usize], budget: &OracleBudget) -> Result<Routing, OracleError> {
    budget.validate()?;
    if let Some(&u) = branch.iter().find(|&&u| u >= h.num_vertices()) {
        return Err(OracleError::BranchOutOfRange(u));
    }
    let mut meter = Meter::new(budget);
    Ok(match routes_in(h, branch, &mut meter) {
        Some(p) => Routing::Found(p),
        None if meter.exhausted => Routing::BudgetExhausted,
        None => Routing::Impossible,
    })
}

struct Router<'a> {
    h: &'a SimpleGraph,
    branch: &'a [usize],
    failed: HashSet<(u64, Vec<bool>)>,
}

const MEMO_CAP: usize = 1 << 20;

fn routes_in(h: &SimpleGraph, branch: &[usize], meter: &mut Meter) -> Option<RoutedPaths> {
    let b = branch.len();
    let mut paths = Vec::new();
    let mut open = Vec::new();
    for i in 0..b {
        for j in i + 1..b {
            if branch[i] == branch[j] {
                return None;
            }
            if h.has_edge(branch[i], branch[j]) {
                paths.push(((i, j), vec![branch[i], branch[j]]));
            } else {
                open.push((i, j));
            }
        }
    }
    let used: u64 = branch.iter().fold(0, |m, &u| m | 1 << u);
    let mut router = Router { h, branch, failed: HashSet::new() };
    let mut remaining = vec![true; open.len()];
    let mut routed = Vec::new();
    if router.solve(&open, &mut remaining, used, meter, &mut routed) {
        paths.extend(routed);
        paths.sort();
        Some(paths)
    } else {
        None
    }
}

impl Router<'_> {
    fn feasible(&self, open: &[(usize, usize)], remaining: &[bool], used: u64) -> bool {
        let free = self.h.full_mask() & !used;
        let mut load = vec![0u32; self.branch.len()];
        for (k, &(i, j)) in open.iter().enumerate() {
            if remaining[k] {
                load[i] += 1;
                load[j] += 1;
                if !self.connected(self.branch[i], self.branch[j], free) {
                    return false;
                }
            }
        }
        (0..self.branch.len()).all(|i| (self.h.adj[self.branch[i]] & free).count_ones() >= load[i])
    }

    /// Is there a `u`-`v` path with interior in `free`, of length at least 2?
    fn connected(&self, u: usize, v: usize, free: u64) -> bool {
        let target = self.h.adj[v] & free;
        let mut seen = self.h.adj[u] & free;
        let mut frontier = seen;
        while frontier != 0 {
            if seen & target != 0 {
                return true;
            }
            let mut next = 0;
            for x in bits(frontier) {
                next |= self.h.adj[x] & free;
            }
            frontier = next & !seen;
            seen |= frontier;
        }
        seen & target != 0
    }

    fn solve(
        &mut self,
        open: &[(usize, usize)],
        remaining: &mut Vec<bool>,
        used: u64,
        meter: &mut Meter,
        routed: &mut RoutedPaths,
    ) -> bool {
        if !meter.tick() {
            return false;
        }
        let free = self.h.full_mask() & !used;
        let pick = (0..open.len()).filter(|&k| remaining[k]).min_by_key(|&k| {
            let (i, j) = open[k];
            ((self.h.adj[self.branch[i]] & self.h.adj[self.branch[j]] & free).count_ones(), k)
        });
        let Some(k) = pick else {
            return true;
        };
        if self.failed.contains(&(used, remaining.clone())) || !self.feasible(open, remaining, used) {
            return false;
        }
        remaining[k] = false;
        let (i, j) = open[k];
        let (u, v) = (self.branch[i], self.branch[j]);
        let mut path = vec![u];
        let ok = self.extend(u, v, free, 1 << u, &mut path, open, remaining, used, meter, routed, (i, j));
        remaining[k] = true;
        if !ok && !meter.exhausted && self.failed.len() < MEMO_CAP {
            self.failed.insert((used, remaining.clone()));
        }
        ok
    }

    /// Extends `path` (currently ending in `tail`) towards `v` with a free
    /// vertex adjacent to the tail and to no earlier path vertex.
    #[allow(clippy::too_many_arguments)]
    fn extend(
        &mut self,
        tail: usize,
        v: usize,
        free: u64,
        before_tail: u64,
        path: &mut Vec<usize>,
        open: &[(usize, usize)],
        remaining: &mut Vec<bool>,
        used: u64,
        meter: &mut Meter,
        routed: &mut RoutedPaths,
        pair: (usize, usize),
    ) -> bool {
        let earlier = before_tail & !(1 << tail);
        let mut blocked_by_chord = 0u64;
        for x in bits(earlier) {
            blocked_by_chord |= self.h.adj[x];
        }
        let options = self.h.adj[tail] & free & !blocked_by_chord & !path.iter().fold(0, |m, &p| m | 1 << p);
        for x in bits(options) {
            if !meter.tick() {
                return false;
            }
            path.push(x);
            let used_now = used | path[1..].iter().fold(0, |m, &p| m | 1 << p);
            if self.h.has_edge(x, v) {
                // a longer path would have the chord x-v
                path.push(v);
                routed.push((pair, path.clone()));
                if self.solve(open, remaining, used_now, meter, routed) {
                    return true;
                }
                routed.pop();
                path.pop();
            } else if self.extend(x, v, free, before_tail | 1 << x, path, open, remaining, used, meter, routed, pair) {
                return true;
            }
            path.pop();
            if meter.exhausted {
                return false;
            }
        }
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EdgeBound {
    pub value: usize,
    /// False when the budget ran out; `value` is then only a lower bound.
    pub exact: bool,
}

/// Maximum of `e(H[B])` over `b`-subsets, by branch and bound over vertices
/// in decreasing degree order.
pub fn max_edges_on_b_subset(h: &SimpleGraph, b: usize, budget: &OracleBudget) -> Result<EdgeBound, OracleError> {
    budget.validate()?;
    let n = h.num_vertices();
    if b > n {
        return Ok(EdgeBound { value: 0, exact: true });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&u| (std::cmp::Reverse(h.degree(u)), u));
    let mut meter = Meter::new(budget);
    let mut best = 0usize;
    subset_bb(h, &order, 0, 0, b, 0, &mut best, &mut meter);
    Ok(EdgeBound { value: best, exact: !meter.exhausted })
}

#[allow(clippy::too_many_arguments)]
fn subset_bb(
    h: &SimpleGraph,
    order: &[usize],
    next: usize,
    chosen: u64,
    left: usize,
    edges: usize,
    best: &mut usize,
    meter: &mut Meter,
) {
    if left == 0 {
        *best = (*best).max(edges);
        return;
    }
    if order.len() - next < left || !meter.tick() {
        return;
    }
    // optimistic completion: best edges into the chosen set, plus at most
    // C(left, 2) among the newcomers, each newcomer bounded by its degree
    let rest = &order[next..];
    let mut to_chosen: Vec<usize> = rest.iter().map(|&u| (h.adj[u] & chosen).count_ones() as usize).collect();
    let rest_mask = rest.iter().fold(0u64, |m, &u| m | 1 << u);
    let mut inner: Vec<usize> =
        rest.iter().map(|&u| ((h.adj[u] & rest_mask).count_ones() as usize).min(left - 1)).collect();
    to_chosen.sort_unstable_by(|a, b| b.cmp(a));
    inner.sort_unstable_by(|a, b| b.cmp(a));
    let among = (inner[..left].iter().sum::<usize>() / 2).min(left * (left - 1) / 2);
    if edges + to_chosen[..left].iter().sum::<usize>() + among <= *best {
        return;
    }
    let u = order[next];
    let gain = (h.adj[u] & chosen).count_ones() as usize;
    subset_bb(h, order, next + 1, chosen | 1 << u, left - 1, edges + gain, best, meter);
    subset_bb(h, order, next + 1, chosen, left, edges, best, meter);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountingVerdict {
    NoSubdivision,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountingReport {
    pub b: usize,
    pub verdict: CountingVerdict,
    /// `C(b, 2) + b - N`.
    pub threshold: i64,
    pub max_edges: Option<EdgeBound>,
}

/// No `K_b` subdivision exists when every `b`-set spans fewer than
/// `C(b, 2) + b - N` edges: each non-adjacent branch pair needs a private
/// vertex outside the branch set.
pub fn subdivision_nonexistence_by_counting(
    h: &SimpleGraph,
    b: usize,
    budget: &OracleBudget,
) -> Result<CountingReport, OracleError> {
    let n = h.num_vertices();
    let threshold = binomial(b, 2) as i64 + b as i64 - n as i64;
    if b > n {
        return Ok(CountingReport { b, verdict: CountingVerdict::NoSubdivision, threshold, max_edges: None });
    }
    if threshold <= 0 {
        return Ok(CountingReport { b, verdict: CountingVerdict::Inconclusive, threshold, max_edges: None });
    }
    let bound = max_edges_on_b_subset(h, b, budget)?;
    let verdict = if bound.exact && (bound.value as i64) < threshold {
        CountingVerdict::NoSubdivision
    } else {
        CountingVerdict::Inconclusive
    };
    Ok(CountingReport { b, verdict, threshold, max_edges: Some(bound) })
}

pub fn lift_nonexistence_by_counting(
    g: &LiftGraph,
    b: usize,
    budget: &OracleBudget,
) -> Result<CountingReport, OracleError> {
    subdivision_nonexistence_by_counting(&SimpleGraph::from_lift(g)?, b, budget)
}

/// Some `u, v ∈ X` have at least two common neighbours outside `X`.
pub fn check_property_p(g: &LiftGraph, x: &[VertexId]) -> Result<bool, OracleError> {
    let mut in_x = vec![false; g.vertex_count()];
    for &v in x {
        if !g.contains(v) {
            return Err(OracleError::OutOfRange(v));
        }
        in_x[g.index(v)] = true;
    }
    let outside: Vec<Vec<usize>> = x
        .iter()
        .map(|&v| {
            let mut nb: Vec<usize> = g.neighbors_iter(v).map(|y| g.index(y)).filter(|&y| !in_x[y]).collect();
            nb.sort_unstable();
            nb
        })
        .collect();
    for a in 0..x.len() {
        for c in a + 1..x.len() {
            if x[a] != x[c] && sorted_overlap(&outside[a], &outside[c]) >= 2 {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

fn sorted_overlap(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PropertyPSearch {
    pub size: usize,
    pub violator: Option<Vec<VertexId>>,
    pub examined: u64,
    /// All `size`-subsets were examined.
    pub exhaustive: bool,
}

/// Looks for an `X` of the given size (usually `n`) without property (P).
/// Enumerates when `C(nℓ, size) ≤ max_states`, otherwise samples
/// `max_states` random sets (capped at one million).
pub fn search_property_p_violator(
    g: &LiftGraph,
    size: usize,
    budget: &OracleBudget,
    seed: u64,
) -> Result<PropertyPSearch, OracleError> {
    budget.validate()?;
    let total = g.vertex_count();
    let mut report = PropertyPSearch { size, violator: None, examined: 0, exhaustive: false };
    if size > total {
        report.exhaustive = true;
        return Ok(report);
    }
    let deadline = Instant::now() + budget.time_limit;
    let check = |idx: &[usize]| -> Result<Option<Vec<VertexId>>, OracleError> {
        let x: Vec<VertexId> = idx.iter().map(|&i| g.vertex(i)).collect();
        Ok((!check_property_p(g, &x)?).then_some(x))
    };
    if binomial(total, size) <= budget.max_states as u128 {
        let mut comb: Vec<usize> = (0..size).collect();
        loop {
            report.examined += 1;
            if let Some(x) = check(&comb)? {
                report.violator = Some(x);
                return Ok(report);
            }
            if !next_combination(&mut comb, total) {
                report.exhaustive = true;
                return Ok(report);
            }
            if report.examined & 1023 == 0 && Instant::now() > deadline {
                return Ok(report);
            }
        }
    }
    let mut rng = substream(seed, &[tag::PROPERTY_P, size as u64]);
    for _ in 0..budget.max_states.min(1_000_000) {
        report.examined += 1;
        let mut idx = index::sample(&mut rng, total, size).into_vec();
        idx.sort_unstable();
        if let Some(x) = check(&idx)? {
            report.violator = Some(x);
            return Ok(report);
        }
        if report.examined & 1023 == 0 && Instant::now() > deadline {
            break;
        }
    }
    Ok(report)
}

pub const PERMANENT_ELL_CAP: usize = 12;

/// Probability that a uniform perfect matching of `[ℓ] × [ℓ]` avoids every
/// pair in `f`: `perm(J - A_F) / ℓ!`, with the permanent by Ryser's
/// inclusion-exclusion over column subsets.
pub fn exact_avoidance_probability(f: &[(usize, usize)], ell: usize) -> Result<Ratio<u64>, OracleError> {
    if ell > PERMANENT_ELL_CAP {
        return Err(OracleError::EllTooLarge { ell, cap: PERMANENT_ELL_CAP });
    }
    if ell == 0 {
        return Ok(Ratio::from_integer(1));
    }
    let mut allowed = vec![(1u32 << ell) - 1; ell];
    for &(a, c) in f {
        if a >= ell || c >= ell {
            return Err(OracleError::PairOutOfRange(a, c));
        }
        allowed[a] &= !(1 << c);
    }
    let mut total: i128 = 0;
    for cols in 1u32..(1 << ell) {
        let product: i128 = allowed.iter().map(|&row| (row & cols).count_ones() as i128).product();
        let sign = if (ell - cols.count_ones() as usize).is_multiple_of(2) { 1 } else { -1 };
        total += sign * product;
    }
    let factorial: u64 = (1..=ell as u64).product();
    Ok(Ratio::new(total as u64, factorial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::complete_base;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn budget() -> OracleBudget {
        OracleBudget::default()
    }

    /// Independent certificate check on plain vertex lists.
    fn valid_witness(h: &SimpleGraph, w: &TopologicalClique) -> bool {
        let b = w.branch.len();
        let mut interior = HashSet::new();
        if w.paths.len() != b * (b - 1) / 2 {
            return false;
        }
        for ((i, j), p) in &w.paths {
            if p.first() != Some(&w.branch[*i]) || p.last() != Some(&w.branch[*j]) {
                return false;
            }
            if p.windows(2).any(|e| !h.has_edge(e[0], e[1])) {
                return false;
            }
            for x in &p[1..p.len() - 1] {
                if w.branch.contains(x) || !interior.insert(*x) {
                    return false;
                }
            }
        }
        true
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> SimpleGraph {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut g = SimpleGraph::empty(n).unwrap();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(p) {
                    g.add_edge(u, v);
                }
            }
        }
        g
    }

    #[test]
    fn hajos_of_named_graphs() {
        let k5 = exact_hajos_number(&SimpleGraph::complete(5).unwrap(), &budget()).unwrap();
        assert_eq!(k5.value(), Some(5));
        let c7 = exact_hajos_number(&SimpleGraph::cycle(7).unwrap(), &budget()).unwrap();
        assert_eq!(c7.value(), Some(3));
        let p = SimpleGraph::petersen();
        let pet = exact_hajos_number(&p, &budget()).unwrap();
        assert_eq!(pet.value(), Some(4));
        assert!(valid_witness(&p, pet.witness.as_ref().unwrap()));
    }

    #[test]
    fn hajos_small_edge_cases() {
        let e = SimpleGraph::empty(3).unwrap();
        assert_eq!(exact_hajos_number(&e, &budget()).unwrap().value(), Some(1));
        let k2 = SimpleGraph::complete(2).unwrap();
        assert_eq!(exact_hajos_number(&k2, &budget()).unwrap().value(), Some(2));
        assert_eq!(exact_hajos_number(&SimpleGraph::empty(0).unwrap(), &budget()).unwrap().value(), Some(0));
        let big = SimpleGraph::empty(30).unwrap();
        assert!(matches!(exact_hajos_number(&big, &budget()), Err(OracleError::TooLarge { .. })));
    }

    #[test]
    fn tiny_budget_reports_unknown() {
        let tight = OracleBudget { max_states: 3, ..budget() };
        let a = exact_hajos_number(&SimpleGraph::petersen(), &tight).unwrap();
        assert!(!a.exact);
        assert!(a.unresolved.is_some());
        assert!(a.to_string().starts_with("unknown above"));
    }

    #[test]
    fn k4_subdivision_in_a_subdivided_k4() {
        // K_4 on {0,1,2,3} with edge 0-1 replaced by 0-4-1 and 2-3 by 2-5-3
        let h = SimpleGraph::from_edges(6, [(0, 4), (4, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 5), (5, 3)]).unwrap();
        let a = exact_hajos_number(&h, &budget()).unwrap();
        assert_eq!(a.value(), Some(4));
        assert!(valid_witness(&h, a.witness.as_ref().unwrap()));
        assert_eq!(routes_for_branch_set(&h, &[4, 5, 0, 1], &budget()).unwrap(), Routing::Impossible);
    }

    #[test]
    fn edge_list_parsing() {
        let g = SimpleGraph::parse_edge_list("# square\n0 1\n1 2\n\n2 3\n3 0\n", None).unwrap();
        assert_eq!((g.num_vertices(), g.edge_count()), (4, 4));
        assert!(SimpleGraph::parse_edge_list("0 0\n", None).is_err());
        assert!(SimpleGraph::parse_edge_list("0 x\n", None).is_err());
        assert!(SimpleGraph::parse_edge_list("0 1 2\n", None).is_err());
    }

    #[test]
    fn max_edges_examples() {
        let k5 = SimpleGraph::complete(5).unwrap();
        assert_eq!(max_edges_on_b_subset(&k5, 3, &budget()).unwrap(), EdgeBound { value: 3, exact: true });
        let e = SimpleGraph::empty(7).unwrap();
        assert_eq!(max_edges_on_b_subset(&e, 4, &budget()).unwrap().value, 0);
    }

    #[test]
    fn counting_criterion_cases() {
        // vacuous threshold
        let c = SimpleGraph::cycle(9).unwrap();
        let r = subdivision_nonexistence_by_counting(&c, 3, &budget()).unwrap();
        assert_eq!(r.verdict, CountingVerdict::Inconclusive);
        assert!(r.threshold <= 0);
        // a clique meets its own threshold exactly
        let k = SimpleGraph::complete(6).unwrap();
        let r = subdivision_nonexistence_by_counting(&k, 6, &budget()).unwrap();
        assert_eq!((r.threshold, r.verdict), (15, CountingVerdict::Inconclusive));
        // the 6-lift threshold from the criterion
        let g = LiftGraph::sample_uniform(&complete_base(6).unwrap(), 3, 4).unwrap();
        let r = lift_nonexistence_by_counting(&g, 8, &budget()).unwrap();
        assert_eq!(r.threshold, 18);
        if r.verdict == CountingVerdict::NoSubdivision {
            let h = SimpleGraph::from_lift(&g).unwrap();
            assert!(exact_hajos_number(&h, &budget()).unwrap().lower < 8);
        }
    }

    #[test]
    fn property_p_examples() {
        let g = LiftGraph::sample_uniform(&complete_base(4).unwrap(), 3, 1).unwrap();
        let all: Vec<VertexId> = g.vertices().collect();
        assert!(!check_property_p(&g, &all).unwrap());
        // K_4 as a 1-lift: two vertices share the other two as neighbours
        let k4 = LiftGraph::sample_uniform(&complete_base(4).unwrap(), 1, 0).unwrap();
        assert!(check_property_p(&k4, &[VertexId::new(0, 0), VertexId::new(1, 0)]).unwrap());
        let s = search_property_p_violator(&k4, 4, &budget(), 0).unwrap();
        assert!(s.violator.is_some() && s.examined == 1);
    }

    #[test]
    fn avoidance_examples() {
        assert_eq!(exact_avoidance_probability(&[], 5).unwrap(), Ratio::from_integer(1));
        let id: Vec<_> = (0..3).map(|i| (i, i)).collect();
        assert_eq!(exact_avoidance_probability(&id, 3).unwrap(), Ratio::new(1, 3));
        assert!(exact_avoidance_probability(&[], 13).is_err());
        assert!(exact_avoidance_probability(&[(0, 4)], 3).is_err());
        // a full row can never be avoided
        let row: Vec<_> = (0..4).map(|c| (2, c)).collect();
        assert_eq!(exact_avoidance_probability(&row, 4).unwrap(), Ratio::from_integer(0));
    }

    fn permutations(ell: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut p: Vec<usize> = (0..ell).collect();
        fn rec(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if k == p.len() {
                out.push(p.clone());
                return;
            }
            for i in k..p.len() {
                p.swap(k, i);
                rec(k + 1, p, out);
                p.swap(k, i);
            }
        }
        rec(0, &mut p, &mut out);
        out
    }

    proptest! {
        #[test]
        fn ryser_matches_enumeration(ell in 1usize..7, seed: u64, density in 0.0f64..0.6) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let f: Vec<(usize, usize)> =
                (0..ell).flat_map(|a| (0..ell).map(move |c| (a, c))).filter(|_| rng.random_bool(density)).collect();
            let avoid = permutations(ell)
                .iter()
                .filter(|p| f.iter().all(|&(a, c)| p[a] != c))
                .count() as u64;
            let total: u64 = (1..=ell as u64).product();
            prop_assert_eq!(exact_avoidance_probability(&f, ell).unwrap(), Ratio::new(avoid, total));
        }

        #[test]
        fn hajos_bounded_and_monotone(seed: u64, n in 3usize..8) {
            let h = random_graph(n, 0.45, seed);
            let a = exact_hajos_number(&h, &budget()).unwrap();
            prop_assert!(a.exact);
            prop_assert!(a.lower <= h.max_degree() + 1);
            if let Some(w) = &a.witness {
                prop_assert!(valid_witness(&h, w));
            }
            let mut bigger = h.clone();
            let missing: Vec<(usize, usize)> =
                (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).filter(|&(u, v)| !h.has_edge(u, v)).collect();
            if let Some(&(u, v)) = missing.get(seed as usize % missing.len().max(1)) {
                bigger.add_edge(u, v);
            }
            prop_assert!(exact_hajos_number(&bigger, &budget()).unwrap().lower >= a.lower);
        }

        #[test]
        fn subset_search_matches_enumeration(seed: u64, n in 2usize..10, b in 1usize..6) {
            let h = random_graph(n, 0.5, seed);
            let brute = if b > n {
                0
            } else {
                let mut best = 0;
                let mut comb: Vec<usize> = (0..b).collect();
                loop {
                    let set = comb.iter().fold(0u64, |m, &k| m | 1 << k);
                    best = best.max(h.edges_within(set));
                    if !next_combination(&mut comb, n) {
                        break;
                    }
                }
                best
            };
            prop_assert_eq!(max_edges_on_b_subset(&h, b, &budget()).unwrap().value, brute);
        }
    }
}
