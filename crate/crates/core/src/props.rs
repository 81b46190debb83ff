//! Pseudorandomness predicates on lifts: joinedness, expansion into a fixed
//! vertex set, cross-matchings between transversals, and a Monte Carlo
//! estimator for the probability that a random perfect matching avoids a
//! forbidden pair set.

use std::collections::{BTreeSet, HashMap};

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::lift::{LiftGraph, VertexId};
use crate::par::{self, Execution};
use crate::rng::{substream, tag};

/// Default cap on `C(|V|, m)^2` for exhaustive joinedness checks.
pub const DEFAULT_JOINED_BUDGET: u128 = 10_000_000;

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

const TRIAL_CHUNK: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropsError {
    #[error("exhaustive check needs {needed} set pairs, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("set size must be at least 1")]
    ZeroSize,
    #[error("set size {size} exceeds the {available} available vertices")]
    SizeTooLarge { size: usize, available: usize },
    #[error("epsilon must lie in (0, 1/2], got {0}")]
    InvalidEpsilon(f64),
    #[error("fiber {fiber} has {have} vertices in V, hypothesis needs at least {need:.3}")]
    HypothesisViolated { fiber: usize, have: usize, need: f64 },
    #[error("vertex {0} is outside the lift")]
    OutOfRange(VertexId),
    #[error("transversal {index} is invalid: {reason}")]
    NotTransversal { index: usize, reason: String },
    #[error("vertex {vertex} appears in transversals {first} and {second}")]
    Overlapping { vertex: VertexId, first: usize, second: usize },
    #[error("pair ({0}, {1}) lies outside [0, ell) x [0, ell)")]
    PairOutOfRange(usize, usize),
    #[error("at least one trial is required")]
    NoTrials,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JoinMode {
    Exhaustive,
    Sampled,
}

#[derive(Clone, Copy, Debug)]
pub struct JoinedOptions {
    pub mode: JoinMode,
    pub trials: usize,
    pub seed: u64,
    pub budget: u128,
    pub exec: Execution,
}

impl Default for JoinedOptions {
    fn default() -> Self {
        JoinedOptions {
            mode: JoinMode::Exhaustive,
            trials: 0,
            seed: 0,
            budget: DEFAULT_JOINED_BUDGET,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JoinedVerdict {
    pub m: usize,
    pub holds: bool,
    /// Disjoint sets of size `m` with no edge between them.
    pub witness: Option<(Vec<VertexId>, Vec<VertexId>)>,
    pub mode: JoinMode,
    pub trials: usize,
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Checks that every two disjoint vertex sets of size `m` are joined by an
/// edge. Sets larger than `m` need not be examined: they contain `m`-subsets.
pub fn check_joined(g: &LiftGraph, m: usize, opts: &JoinedOptions) -> Result<JoinedVerdict, PropsError> {
    if m == 0 {
        return Err(PropsError::ZeroSize);
    }
    let total = g.vertex_count();
    if 2 * m > total {
        return Ok(JoinedVerdict { m, holds: true, witness: None, mode: opts.mode, trials: 0 });
    }
    match opts.mode {
        JoinMode::Exhaustive => {
            let sets = binomial(total, m);
            let needed = sets.saturating_mul(sets);
            if needed > opts.budget {
                return Err(PropsError::BudgetExceeded { needed, budget: opts.budget });
            }
            let witness = exhaustive_non_joined(g, m);
            Ok(JoinedVerdict { m, holds: witness.is_none(), witness, mode: JoinMode::Exhaustive, trials: 0 })
        }
        JoinMode::Sampled => {
            if opts.trials == 0 {
                return Err(PropsError::NoTrials);
            }
            let chunks = par::chunks(opts.trials, TRIAL_CHUNK);
            let found = par::map_slice(opts.exec, &chunks, |&(lo, hi)| {
                let mut rng = substream(opts.seed, &[tag::JOINED, lo as u64]);
                let mut in_b = vec![false; total];
                for _ in lo..hi {
                    let pick = index::sample(&mut rng, total, 2 * m).into_vec();
                    let (a, b) = pick.split_at(m);
                    for &x in b {
                        in_b[x] = true;
                    }
                    let crossing = a.iter().any(|&x| g.neighbors_iter(g.vertex(x)).any(|y| in_b[g.index(y)]));
                    for &x in b {
                        in_b[x] = false;
                    }
                    if !crossing {
                        let mut a: Vec<_> = a.iter().map(|&x| g.vertex(x)).collect();
                        let mut b: Vec<_> = b.iter().map(|&x| g.vertex(x)).collect();
                        a.sort_unstable();
                        b.sort_unstable();
                        return Some((a, b));
                    }
                }
                None
            });
            let witness = found.into_iter().flatten().next();
            Ok(JoinedVerdict { m, holds: witness.is_none(), witness, mode: JoinMode::Sampled, trials: opts.trials })
        }
    }
}

/// For each `m`-set `A` in lexicographic order, a non-joined partner exists
/// iff at least `m` vertices lie outside `A ∪ N(A)`.
fn exhaustive_non_joined(g: &LiftGraph, m: usize) -> Option<(Vec<VertexId>, Vec<VertexId>)> {
    let total = g.vertex_count();
    let mut comb: Vec<usize> = (0..m).collect();
    let mut covered = vec![0u32; total];
    let mut stamp = 0u32;
    loop {
        stamp += 1;
        for &x in &comb {
            covered[x] = stamp;
            for y in g.neighbors_iter(g.vertex(x)) {
                covered[g.index(y)] = stamp;
            }
        }
        let free: Vec<usize> = (0..total).filter(|&y| covered[y] != stamp).take(m).collect();
        if free.len() == m {
            return Some((
                comb.iter().map(|&x| g.vertex(x)).collect(),
                free.into_iter().map(|y| g.vertex(y)).collect(),
            ));
        }
        if !next_combination(&mut comb, total) {
            return None;
        }
    }
}

/// Advances a sorted k-combination of `[0, n)` in lexicographic order.
pub(crate) fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if comb[i] < n - k + i {
            comb[i] += 1;
            for t in i + 1..k {
                comb[t] = comb[t - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeSummary {
    pub size: usize,
    pub tested: usize,
    pub exhaustive: bool,
    pub worst_ratio: f64,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub epsilon: f64,
    pub tested_sets: usize,
    pub worst_ratio: f64,
    /// A set `U` with `|N(U) ∩ V| < min(ε n |U|, ε⁶ ℓ n)`.
    pub violating_set: Option<Vec<VertexId>>,
    pub per_size: Vec<SizeSummary>,
}

/// Tests `|N(U) ∩ V| ≥ min(ε n |U|, ε⁶ ℓ n)` where `N(U)` is the closed
/// neighbourhood (`U` together with its neighbors). Singletons are checked
/// exhaustively; larger sizes use `trials` uniform random subsets of `V(G)`.
pub fn check_expansion_into(
    g: &LiftGraph,
    target: &[VertexId],
    epsilon: f64,
    set_sizes: &[usize],
    trials: usize,
    seed: u64,
) -> Result<ExpansionReport, PropsError> {
    check_expansion_into_with(g, target, epsilon, set_sizes, trials, seed, Execution::default())
}

pub fn check_expansion_into_with(
    g: &LiftGraph,
    target: &[VertexId],
    epsilon: f64,
    set_sizes: &[usize],
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<ExpansionReport, PropsError> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(PropsError::InvalidEpsilon(epsilon));
    }
    let total = g.vertex_count();
    let (n, ell) = (g.n(), g.ell());
    let mut in_v = vec![false; total];
    let mut per_fiber = vec![0usize; n];
    for &x in target {
        if !g.contains(x) {
            return Err(PropsError::OutOfRange(x));
        }
        if !std::mem::replace(&mut in_v[g.index(x)], true) {
            per_fiber[x.fiber] += 1;
        }
    }
    let need = (9.0 * epsilon * ell as f64).max(ell as f64 - n as f64);
    if let Some((fiber, &have)) = per_fiber.iter().enumerate().find(|(_, &c)| (c as f64) < need) {
        return Err(PropsError::HypothesisViolated { fiber, have, need });
    }
    for &s in set_sizes {
        if s == 0 {
            return Err(PropsError::ZeroSize);
        }
        if s > total {
            return Err(PropsError::SizeTooLarge { size: s, available: total });
        }
    }

    let cap = epsilon.powi(6) * (ell * n) as f64;
    let bound = |size: usize| (epsilon * (n * size) as f64).min(cap);
    let closed_count = |u: &[usize], stamps: &mut Vec<u32>, stamp: u32| -> usize {
        let mut count = 0;
        let mut mark = |y: usize, stamps: &mut Vec<u32>| {
            if stamps[y] != stamp {
                stamps[y] = stamp;
                if in_v[y] {
                    count += 1;
                }
            }
        };
        for &x in u {
            mark(x, stamps);
            for y in g.neighbors_iter(g.vertex(x)) {
                mark(g.index(y), stamps);
            }
        }
        count
    };

    let mut report = ExpansionReport {
        epsilon,
        tested_sets: 0,
        worst_ratio: f64::INFINITY,
        violating_set: None,
        per_size: Vec::new(),
    };
    for &size in set_sizes {
        let exhaustive = size == 1;
        let jobs = if exhaustive { par::chunks(total, TRIAL_CHUNK) } else { par::chunks(trials, TRIAL_CHUNK) };
        let results = par::map_slice(exec, &jobs, |&(lo, hi)| {
            let mut stamps = vec![0u32; total];
            let mut rng = substream(seed, &[tag::EXPANSION, size as u64, lo as u64]);
            let mut worst = (f64::INFINITY, Vec::new());
            let mut violations = 0usize;
            for (k, t) in (lo..hi).enumerate() {
                let u: Vec<usize> = if exhaustive { vec![t] } else { index::sample(&mut rng, total, size).into_vec() };
                let ratio = closed_count(&u, &mut stamps, k as u32 + 1) as f64 / bound(size);
                if ratio < 1.0 {
                    violations += 1;
                }
                if ratio < worst.0 {
                    worst = (ratio, u);
                }
            }
            (worst, violations, hi - lo)
        });
        let mut summary = SizeSummary { size, tested: 0, exhaustive, worst_ratio: f64::INFINITY, violations: 0 };
        let mut worst_set = Vec::new();
        for ((ratio, u), violations, tested) in results {
            summary.tested += tested;
            summary.violations += violations;
            if ratio < summary.worst_ratio {
                summary.worst_ratio = ratio;
                worst_set = u;
            }
        }
        report.tested_sets += summary.tested;
        if summary.worst_ratio < report.worst_ratio {
            report.worst_ratio = summary.worst_ratio;
        }
        if summary.violations > 0 && report.violating_set.is_none() {
            let mut set: Vec<_> = worst_set.iter().map(|&x| g.vertex(x)).collect();
            set.sort_unstable();
            report.violating_set = Some(set);
        }
        if summary.violations > 0 {
            log::warn!(
                "expansion: {} of {} sets of size {} violate the bound",
                summary.violations,
                summary.tested,
                size
            );
        }
        report.per_size.push(summary);
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CrossEdge {
    pub pair: (usize, usize),
    /// Endpoint in transversal `pair.0`.
    pub u: VertexId,
    /// Endpoint in transversal `pair.1`.
    pub v: VertexId,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CrossMatching {
    pub edges: Vec<CrossEdge>,
    pub covered_pairs: BTreeSet<(usize, usize)>,
}

impl CrossMatching {
    pub fn uncovered_pairs(&self, transversal_count: usize) -> usize {
        transversal_count * transversal_count.saturating_sub(1) / 2 - self.covered_pairs.len()
    }
}

/// Transversal index of every vertex in the union, after validation.
///
/// A transversal here has exactly one vertex in each fiber of a common fiber
/// set; the set is taken from the first transversal. This covers both full
/// transversals and transversals of a lift with some fibers removed.
pub(crate) fn index_transversals(
    g: &LiftGraph,
    transversals: &[Vec<VertexId>],
) -> Result<HashMap<VertexId, usize>, PropsError> {
    let mut owner = HashMap::new();
    let Some(first) = transversals.first() else {
        return Ok(owner);
    };
    let fibers: BTreeSet<usize> = first.iter().map(|x| x.fiber).collect();
    for (t, tr) in transversals.iter().enumerate() {
        let mine: BTreeSet<usize> = tr.iter().map(|x| x.fiber).collect();
        if mine.len() != tr.len() {
            return Err(PropsError::NotTransversal { index: t, reason: "two vertices share a fiber".into() });
        }
        if mine != fibers {
            return Err(PropsError::NotTransversal { index: t, reason: "fiber set differs from transversal 0".into() });
        }
        for &x in tr {
            if !g.contains(x) {
                return Err(PropsError::OutOfRange(x));
            }
            if let Some(first) = owner.insert(x, t) {
                return Err(PropsError::Overlapping { vertex: x, first, second: t });
            }
        }
    }
    Ok(owner)
}

/// Greedy maximal matching with at most one edge per transversal pair.
///
/// Pairs `(i, j)` are visited in lexicographic order; within a pair the
/// endpoint in `T_i` is scanned by increasing fiber, then its partner in
/// `T_j` by increasing fiber. A second sweep re-offers every candidate so the
/// result is maximal.
pub fn find_cross_matching(g: &LiftGraph, transversals: &[Vec<VertexId>]) -> Result<CrossMatching, PropsError> {
    let owner = index_transversals(g, transversals)?;
    let t = transversals.len();
    // candidates[i][j - i - 1]: edges between T_i and T_j, i < j
    let mut candidates: Vec<Vec<Vec<(VertexId, VertexId)>>> = (0..t).map(|i| vec![Vec::new(); t - i - 1]).collect();
    for (i, tr) in transversals.iter().enumerate() {
        let mut sorted = tr.clone();
        sorted.sort_unstable();
        for &u in &sorted {
            for w in g.neighbors_iter(u) {
                if let Some(&j) = owner.get(&w) {
                    if j > i {
                        candidates[i][j - i - 1].push((u, w));
                    }
                }
            }
        }
    }
    let mut used = vec![false; g.vertex_count()];
    let mut matching = CrossMatching::default();
    for _sweep in 0..2 {
        for i in 0..t {
            for j in i + 1..t {
                if matching.covered_pairs.contains(&(i, j)) {
                    continue;
                }
                let pick = candidates[i][j - i - 1].iter().find(|(u, v)| !used[g.index(*u)] && !used[g.index(*v)]);
                if let Some(&(u, v)) = pick {
                    used[g.index(u)] = true;
                    used[g.index(v)] = true;
                    matching.edges.push(CrossEdge { pair: (i, j), u, v });
                    matching.covered_pairs.insert((i, j));
                }
            }
        }
    }
    Ok(matching)
}

/// Re-scans all candidate edges: true iff none could be added.
pub fn is_maximal_cross_matching(g: &LiftGraph, transversals: &[Vec<VertexId>], m: &CrossMatching) -> bool {
    let Ok(owner) = index_transversals(g, transversals) else {
        return false;
    };
    let used: BTreeSet<VertexId> = m.edges.iter().flat_map(|e| [e.u, e.v]).collect();
    for (&u, &i) in &owner {
        if used.contains(&u) {
            continue;
        }
        for w in g.neighbors_iter(u) {
            if let Some(&j) = owner.get(&w) {
                let pair = (i.min(j), i.max(j));
                if i != j && !used.contains(&w) && !m.covered_pairs.contains(&pair) {
                    return false;
                }
            }
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AvoidanceEstimate {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub hits: u64,
    pub trials: u64,
}

/// Upper bound `exp(-|F| / (2ℓ))` on the avoidance probability.
pub fn avoidance_bound(pairs: usize, ell: usize) -> f64 {
    (-(pairs as f64) / (2.0 * ell as f64)).exp()
}

/// Wilson score interval for `hits / trials` at normal quantile `z`.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Monte Carlo estimate of `Pr[M ∩ F = ∅]` for a uniform perfect matching
/// `M` of `[ℓ] × [ℓ]`, with a 99% Wilson interval.
pub fn estimate_avoidance_probability(
    forbidden: &[(usize, usize)],
    ell: usize,
    trials: usize,
    seed: u64,
) -> Result<AvoidanceEstimate, PropsError> {
    estimate_avoidance_probability_with(forbidden, ell, trials, seed, Execution::default())
}

pub fn estimate_avoidance_probability_with(
    forbidden: &[(usize, usize)],
    ell: usize,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<AvoidanceEstimate, PropsError> {
    if trials == 0 {
        return Err(PropsError::NoTrials);
    }
    let mut bad = vec![false; ell * ell];
    for &(a, b) in forbidden {
        if a >= ell || b >= ell {
            return Err(PropsError::PairOutOfRange(a, b));
        }
        bad[a * ell + b] = true;
    }
    let hits: u64 = if forbidden.is_empty() {
        trials as u64
    } else {
        let chunks = par::chunks(trials, 4 * TRIAL_CHUNK);
        par::map_slice(exec, &chunks, |&(lo, hi)| {
            let mut rng = substream(seed, &[tag::AVOIDANCE, lo as u64]);
            let mut perm: Vec<usize> = (0..ell).collect();
            let mut hits = 0u64;
            for _ in lo..hi {
                perm.shuffle(&mut rng);
                if perm.iter().enumerate().all(|(a, &b)| !bad[a * ell + b]) {
                    hits += 1;
                }
            }
            hits
        })
        .into_iter()
        .sum()
    };
    let (lower, upper) = wilson_interval(hits, trials as u64, Z_99);
    Ok(AvoidanceEstimate { estimate: hits as f64 / trials as f64, lower, upper, hits, trials: trials as u64 })
}

/// Uniformly random pair set with `count` distinct pairs.
pub fn random_pair_set<R: Rng>(ell: usize, count: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let count = count.min(ell * ell);
    let mut pairs: Vec<_> = index::sample(rng, ell * ell, count).into_iter().map(|k| (k / ell, k % ell)).collect();
    pairs.sort_unstable();
    pairs
}
