//! Constructive clique subdivisions in lifts of complete graphs.
//!
//! [`build_large_ell`] targets `K_n` when ℓ is somewhat larger than `n`: the
//! branch vertices share one fiber `W`, their neighbourhoods in `G - W` are
//! joined by a cross-matching, and every pair it misses is routed by the
//! connector. [`build_small_ell`] targets order close to
//! `sqrt(2nℓ / (1 - 1/ℓ))` for small ℓ with direct edges, length-two paths,
//! pruning, and stars into a reserved block of fibers.
//!
//! Every returned certificate has passed [`verify_certificate`].

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::Serialize;

use crate::connector::{batch_connect, EmbeddingState, ExtendabilityParams, RetryPolicy};
use crate::lift::{LiftGraph, VertexId};
use crate::props::find_cross_matching;
use crate::rng::{substream, tag};
use crate::verifier::{verify_certificate, SubdivisionCertificate};

/// `sqrt(2nℓ / (1 - 1/ℓ))`; `None` when `ell < 2`.
pub fn target_order(n: usize, ell: usize) -> Option<f64> {
    if ell < 2 {
        return None;
    }
    let (n, l) = (n as f64, ell as f64);
    Some((2.0 * n * l / (1.0 - 1.0 / l)).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BuildConfig {
    pub epsilon: f64,
    /// Defaults to `epsilon / 11`.
    pub gamma: Option<f64>,
    /// Defaults to the asymptotic `(D, m)` of the routing region.
    pub params: Option<ExtendabilityParams>,
    /// Defaults to `params.max_path_len()`.
    pub max_len: Option<usize>,
    pub seed: u64,
    pub retry: RetryPolicy,
    /// Large ℓ: skip the cross-matching when `ℓ > γ³n²/48`, as in the
    /// original argument. Small ℓ: use the `1/40` multipliers.
    pub paper_constants: bool,
    /// Pruning removes branch vertices missing more than `prune_multiplier · ε · b` connections.
    pub prune_multiplier: f64,
    /// Stars have at most `ceil(star_multiplier · ε · b)` leaves.
    pub star_multiplier: f64,
    /// Abort when fewer than `prune_floor · b` branch vertices survive.
    pub prune_floor: f64,
    /// Seeded random branch choice instead of the lexicographically smallest.
    pub random_branches: bool,
    /// Large ℓ: let routes use the `ℓ - n` vertices of `W` that are not
    /// branch vertices instead of staying inside `G - W`.
    pub reuse_branch_fiber: bool,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            epsilon: 0.1,
            gamma: None,
            params: None,
            max_len: None,
            seed: 0,
            retry: RetryPolicy::default(),
            paper_constants: false,
            prune_multiplier: 0.25,
            star_multiplier: 0.25,
            prune_floor: 0.5,
            random_branches: false,
            reuse_branch_fiber: true,
        }
    }
}

impl BuildConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        BuildConfig { epsilon, ..Default::default() }
    }

    /// The multipliers of the original argument.
    pub fn paper(epsilon: f64) -> Self {
        BuildConfig {
            epsilon,
            paper_constants: true,
            prune_multiplier: 1.0 / 40.0,
            star_multiplier: 1.0 / 40.0,
            reuse_branch_fiber: false,
            ..Default::default()
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(self.epsilon / 11.0)
    }

    fn validate(&self) -> Result<(), String> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.gamma() <= 0.0 {
            return Err(format!("gamma must be positive, got {}", self.gamma()));
        }
        Ok(())
    }

    fn routing(&self, region_fibers: usize, ell: usize) -> (ExtendabilityParams, usize) {
        let params = self.params.unwrap_or_else(|| ExtendabilityParams::asymptotic(region_fibers, ell));
        (params, self.max_len.unwrap_or_else(|| params.max_path_len()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuilderKind {
    Large,
    Small,
}

impl fmt::Display for BuilderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BuilderKind::Large => "large",
            BuilderKind::Small => "small",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureStage {
    Precondition,
    TemplateInfeasible,
    ConnectorExhausted,
    PrunedTooMany,
    SelfVerification,
}

impl fmt::Display for FailureStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureStage::Precondition => "precondition",
            FailureStage::TemplateInfeasible => "template-infeasible",
            FailureStage::ConnectorExhausted => "connector-exhausted",
            FailureStage::PrunedTooMany => "pruned-too-many",
            FailureStage::SelfVerification => "self-verification",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BuildFailure {
    pub stage: FailureStage,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BuildStats {
    pub initial_branch: usize,
    pub direct_edges: usize,
    pub length_two_paths: usize,
    pub cross_matching_edges: usize,
    pub connector_paths: usize,
    pub connector_attempts: usize,
    /// Removed for missing too many connections after the length-two stage.
    pub pruned_branch_vertices: usize,
    /// Removed because their star could not be grown.
    pub dropped_without_star: usize,
    /// Removed to resolve pairs the connector could not route.
    pub dropped_after_routing: usize,
    pub star_leaves: usize,
    pub longest_path: usize,
    pub branch_vertices: usize,
    pub internal_vertices: usize,
    pub total_vertices: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BuildOutcome {
    pub builder: BuilderKind,
    pub n: usize,
    pub ell: usize,
    pub target_order: f64,
    #[serde(serialize_with = "serialize_certificate")]
    pub certificate: Option<SubdivisionCertificate>,
    pub stats: BuildStats,
    pub failure: Option<BuildFailure>,
}

fn serialize_certificate<S: serde::Serializer>(cert: &Option<SubdivisionCertificate>, s: S) -> Result<S::Ok, S::Error> {
    match cert {
        None => s.serialize_none(),
        Some(c) => {
            let value: serde_json::Value = serde_json::from_str(&c.to_json()).map_err(serde::ser::Error::custom)?;
            value.serialize(s)
        }
    }
}

impl BuildOutcome {
    pub fn achieved_order(&self) -> usize {
        self.certificate.as_ref().map_or(0, |c| c.order())
    }

    pub fn is_success(&self) -> bool {
        self.certificate.is_some()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("outcome serialization cannot fail");
        s.push('\n');
        s
    }

    fn failed(
        builder: BuilderKind,
        g: &LiftGraph,
        target: f64,
        stats: BuildStats,
        stage: FailureStage,
        reason: String,
    ) -> Self {
        log::debug!("{builder} builder failed at {stage}: {reason}");
        BuildOutcome {
            builder,
            n: g.n(),
            ell: g.ell(),
            target_order: target,
            certificate: None,
            stats,
            failure: Some(BuildFailure { stage, reason }),
        }
    }

    /// Verifies the certificate and fills in the vertex counters.
    fn finish(
        builder: BuilderKind,
        g: &LiftGraph,
        target: f64,
        mut stats: BuildStats,
        cert: SubdivisionCertificate,
    ) -> Self {
        let verdict = verify_certificate(g, &cert);
        if !verdict.pass {
            let first = verdict.violations.first().map(|v| v.to_string()).unwrap_or_default();
            let reason = format!("{} violations, first: {first}", verdict.violations.len());
            return Self::failed(builder, g, target, stats, FailureStage::SelfVerification, reason);
        }
        stats.branch_vertices = cert.order();
        stats.internal_vertices = cert.internal_vertices().count();
        stats.total_vertices = cert.vertex_count();
        stats.longest_path = cert.paths.values().map(|p| p.len() - 1).max().unwrap_or(0);
        BuildOutcome {
            builder,
            n: g.n(),
            ell: g.ell(),
            target_order: target,
            certificate: Some(cert),
            stats,
            failure: None,
        }
    }
}

fn complete_base_check(g: &LiftGraph) -> Result<(), String> {
    if g.base().is_complete() {
        Ok(())
    } else {
        Err("the base graph is not complete".into())
    }
}

/// `K_n`-subdivision with all branch vertices in one fiber.
pub fn build_large_ell(g: &LiftGraph, cfg: &BuildConfig) -> BuildOutcome {
    let (n, ell) = (g.n(), g.ell());
    let kind = BuilderKind::Large;
    let target = n as f64;
    let mut stats = BuildStats { initial_branch: n, ..Default::default() };
    if let Err(reason) = cfg.validate().and_then(|_| complete_base_check(g)) {
        return BuildOutcome::failed(kind, g, target, stats, FailureStage::Precondition, reason);
    }
    if ell < n {
        let reason = format!("one fiber holds {ell} vertices, fewer than n = {n}");
        return BuildOutcome::failed(kind, g, target, stats, FailureStage::Precondition, reason);
    }
    if (ell as f64) < (1.0 + cfg.epsilon) * n as f64 {
        log::warn!("ell = {ell} is below (1 + eps) n = {:.1}; running anyway", (1.0 + cfg.epsilon) * n as f64);
    }

    let (w_fiber, layers) = if cfg.random_branches {
        let mut rng = substream(cfg.seed, &[tag::BRANCH_CHOICE]);
        let f = rng.random_range(0..n);
        let mut layers = index::sample(&mut rng, ell, n).into_vec();
        layers.sort_unstable();
        (f, layers)
    } else {
        (0, (0..n).collect())
    };
    let branch: Vec<VertexId> = layers.iter().map(|&l| VertexId::new(w_fiber, l)).collect();
    let region: Vec<usize> = (0..n).filter(|&f| f != w_fiber).collect();
    let nbhd: Vec<Vec<VertexId>> =
        branch.iter().map(|&w| region.iter().map(|&f| g.partner(w, f).expect("complete base")).collect()).collect();

    let mut paths: BTreeMap<(usize, usize), Vec<VertexId>> = BTreeMap::new();
    let routing_fibers: Vec<usize> = if cfg.reuse_branch_fiber { (0..n).collect() } else { region.clone() };
    let (params, max_len) = cfg.routing(region.len(), ell);
    let mut base_state = EmbeddingState::within_fibers(g, params, &routing_fibers).expect("fibers are in range");
    for &x in nbhd.iter().flatten().chain(&branch) {
        base_state.add_vertex(x).expect("in range");
    }
    let mut base_used = vec![false; g.vertex_count()];

    let skip_matching = cfg.paper_constants && (ell as f64) > cfg.gamma().powi(3) * (n * n) as f64 / 48.0;
    if !skip_matching && n > 1 {
        let m = find_cross_matching(g, &nbhd).expect("neighbourhoods are disjoint transversals");
        for e in &m.edges {
            base_state.insert_path(g, &[e.u, e.v]).expect("matching edges are fresh lift edges");
            base_used[g.index(e.u)] = true;
            base_used[g.index(e.v)] = true;
            paths.insert(e.pair, vec![branch[e.pair.0], e.u, e.v, branch[e.pair.1]]);
        }
        stats.cross_matching_edges = m.edges.len();
    }

    // Template: one unused neighbourhood vertex per side of every open pair.
    // The first attempt takes them in fiber order; later attempts shuffle.
    let mut last_reason = String::new();
    for attempt in 0..cfg.retry.attempts.max(1) {
        let mut used = base_used.clone();
        let mut order = nbhd.clone();
        if attempt > 0 {
            let mut rng = substream(cfg.seed, &[tag::RETRY, 2, attempt as u64]);
            for v in &mut order {
                v.shuffle(&mut rng);
            }
        }
        let mut pairs = Vec::new();
        let mut keys = Vec::new();
        let mut cursor = vec![0usize; n];
        let mut next_free = |k: usize, used: &mut Vec<bool>| -> Option<VertexId> {
            while cursor[k] < order[k].len() {
                let x = order[k][cursor[k]];
                cursor[k] += 1;
                if !used[g.index(x)] {
                    used[g.index(x)] = true;
                    return Some(x);
                }
            }
            None
        };
        for i in 0..n {
            for j in i + 1..n {
                if paths.contains_key(&(i, j)) {
                    continue;
                }
                let (Some(x), Some(y)) = (next_free(i, &mut used), next_free(j, &mut used)) else {
                    let reason = format!("no unused neighbourhood vertex left for pair ({i}, {j})");
                    return BuildOutcome::failed(kind, g, target, stats, FailureStage::TemplateInfeasible, reason);
                };
                pairs.push((x, y));
                keys.push((i, j));
            }
        }

        let mut state = base_state.clone();
        let out = batch_connect(g, &mut state, &pairs, max_len, cfg.retry_for(attempt as u64));
        stats.connector_attempts += out.attempts_used;
        if !out.is_complete() {
            last_reason =
                format!("{} of {} template pairs unroutable within length {max_len}", out.failures.len(), pairs.len());
            continue;
        }
        for (k, p) in out.paths.into_iter().enumerate() {
            let p = p.expect("complete batch");
            let (i, j) = keys[k];
            let mut full = Vec::with_capacity(p.path.len() + 2);
            full.push(branch[i]);
            full.extend_from_slice(&p.path);
            full.push(branch[j]);
            paths.insert((i, j), full);
            stats.connector_paths += 1;
        }
        return BuildOutcome::finish(kind, g, target, stats, SubdivisionCertificate { branch, paths });
    }
    BuildOutcome::failed(kind, g, target, stats, FailureStage::ConnectorExhausted, last_reason)
}

impl BuildConfig {
    fn retry_for(&self, salt: u64) -> RetryPolicy {
        RetryPolicy { attempts: self.retry.attempts, seed: crate::rng::derive_seed(self.seed, &[tag::RETRY, salt]) }
    }
}

/// Large clique subdivision for small ℓ, branch vertices forming a partial
/// transversal of the first `ceil((1 - ε) n)` fibers.
pub fn build_small_ell(g: &LiftGraph, cfg: &BuildConfig) -> BuildOutcome {
    let (n, ell) = (g.n(), g.ell());
    let kind = BuilderKind::Small;
    let mut stats = BuildStats::default();
    let Some(target) = target_order(n, ell) else {
        return BuildOutcome::failed(kind, g, 0.0, stats, FailureStage::Precondition, "ell must be at least 2".into());
    };
    if let Err(reason) = cfg.validate().and_then(|_| complete_base_check(g)) {
        return BuildOutcome::failed(kind, g, target, stats, FailureStage::Precondition, reason);
    }
    let eps = cfg.epsilon;
    if eps >= 0.5 {
        let reason = format!("epsilon must be below 1/2, got {eps}");
        return BuildOutcome::failed(kind, g, target, stats, FailureStage::Precondition, reason);
    }
    let f1 = (((1.0 - eps) * n as f64).ceil() as usize).min(n);
    let f2: Vec<usize> = (f1..n).collect();
    let b = (((1.0 - 2.0 * eps) * target).ceil() as usize).clamp(1, f1);
    stats.initial_branch = b;

    let branch: Vec<VertexId> = if cfg.random_branches {
        let mut rng = substream(cfg.seed, &[tag::BRANCH_CHOICE]);
        let mut fibers = index::sample(&mut rng, f1, b).into_vec();
        fibers.sort_unstable();
        fibers.into_iter().map(|f| VertexId::new(f, rng.random_range(0..ell))).collect()
    } else {
        (0..b).map(|f| VertexId::new(f, 0)).collect()
    };
    let mut slot = vec![usize::MAX; g.vertex_count()];
    for (k, &x) in branch.iter().enumerate() {
        slot[g.index(x)] = k;
    }
    let mut taken = vec![false; g.vertex_count()];
    for &x in &branch {
        taken[g.index(x)] = true;
    }

    let mut paths: BTreeMap<(usize, usize), Vec<VertexId>> = BTreeMap::new();
    for i in 0..b {
        for j in i + 1..b {
            if g.is_edge(branch[i], branch[j]) {
                paths.insert((i, j), vec![branch[i], branch[j]]);
            }
        }
    }
    stats.direct_edges = paths.len();

    // length-two candidates: middles in F1 outside B, listed by increasing index
    let mut middles: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (x, _) in taken.iter().enumerate().take(f1 * ell).filter(|(_, &t)| !t) {
        let hits: Vec<usize> =
            g.neighbors_iter(g.vertex(x)).map(|y| slot[g.index(y)]).filter(|&k| k != usize::MAX).collect();
        for (a, &p) in hits.iter().enumerate() {
            for &q in &hits[a + 1..] {
                middles.entry((p.min(q), p.max(q))).or_default().push(x);
            }
        }
    }
    let mut missing = vec![b.saturating_sub(1); b];
    for &(i, j) in paths.keys() {
        missing[i] -= 1;
        missing[j] -= 1;
    }
    let mut processed = vec![false; b];
    while let Some(i) = (0..b).filter(|&i| !processed[i]).max_by_key(|&i| (missing[i], std::cmp::Reverse(i))) {
        processed[i] = true;
        for j in (0..b).filter(|&j| j != i) {
            let key = (i.min(j), i.max(j));
            if paths.contains_key(&key) {
                continue;
            }
            let Some(&x) = middles.get(&key).and_then(|c| c.iter().find(|&&x| !taken[x])) else {
                continue;
            };
            taken[x] = true;
            paths.insert(key, vec![branch[key.0], g.vertex(x), branch[key.1]]);
            missing[i] -= 1;
            missing[j] -= 1;
            stats.length_two_paths += 1;
        }
    }

    // prune the worst vertex until everyone misses at most the threshold
    let threshold = cfg.prune_multiplier * eps * b as f64;
    let mut alive = vec![true; b];
    let drop =
        |k: usize, alive: &mut Vec<bool>, missing: &mut Vec<usize>, paths: &BTreeMap<(usize, usize), Vec<VertexId>>| {
            alive[k] = false;
            for j in 0..b {
                if j != k && alive[j] && !paths.contains_key(&(k.min(j), k.max(j))) {
                    missing[j] -= 1;
                }
            }
        };
    while let Some(k) = (0..b).filter(|&k| alive[k]).max_by_key(|&k| (missing[k], std::cmp::Reverse(k))) {
        if missing[k] as f64 <= threshold {
            break;
        }
        drop(k, &mut alive, &mut missing, &paths);
        stats.pruned_branch_vertices += 1;
    }
    let floor = |alive: &[bool]| alive.iter().filter(|&&a| a).count() as f64 >= (cfg.prune_floor * b as f64).max(1.0);
    if !floor(&alive) {
        let reason = format!("{} of {b} branch vertices pruned", stats.pruned_branch_vertices);
        return BuildOutcome::failed(kind, g, target, stats, FailureStage::PrunedTooMany, reason);
    }

    // stars into F2, at most half of every F2 fiber used for leaves
    let star_size = (cfg.star_multiplier * eps * b as f64).ceil().max(1.0) as usize;
    let fiber_cap = (ell / 2).max(1);
    let mut per_fiber = vec![0usize; n];
    let mut leaves: BTreeMap<(usize, usize), VertexId> = BTreeMap::new();
    for i in 0..b {
        if !alive[i] || missing[i] == 0 {
            continue;
        }
        let need = missing[i];
        let found: Vec<VertexId> = g
            .neighbors_iter(branch[i])
            .filter(|y| y.fiber >= f1 && !taken[g.index(*y)] && per_fiber[y.fiber] < fiber_cap)
            .take(need.min(star_size))
            .collect();
        if found.len() < need {
            drop(i, &mut alive, &mut missing, &paths);
            stats.dropped_without_star += 1;
            continue;
        }
        let partners = (0..b).filter(|&j| j != i && alive[j] && !paths.contains_key(&(i.min(j), i.max(j))));
        for (j, &y) in partners.zip(&found) {
            taken[g.index(y)] = true;
            per_fiber[y.fiber] += 1;
            leaves.insert((i, j), y);
        }
    }
    // a partner dropped after this vertex took its leaves leaves them idle
    leaves.retain(|&(i, j), _| alive[i] && alive[j]);
    stats.star_leaves = leaves.len();
    if !floor(&alive) {
        let reason = format!("{} branch vertices lost their stars", stats.dropped_without_star);
        return BuildOutcome::failed(kind, g, target, stats, FailureStage::PrunedTooMany, reason);
    }

    let mut keys = Vec::new();
    let mut pairs = Vec::new();
    for i in 0..b {
        for j in i + 1..b {
            if alive[i] && alive[j] && !paths.contains_key(&(i, j)) {
                keys.push((i, j));
                pairs.push((leaves[&(i, j)], leaves[&(j, i)]));
            }
        }
    }
    let (params, max_len) = cfg.routing(f2.len().max(2), ell);
    let mut state = EmbeddingState::within_fibers(g, params, &f2).expect("F2 fibers are in range");
    for &(x, y) in &pairs {
        state.add_vertex(x).expect("in range");
        state.add_vertex(y).expect("in range");
    }
    let out = batch_connect(g, &mut state, &pairs, max_len, cfg.retry_for(100));
    stats.connector_attempts = out.attempts_used;
    let mut failed: Vec<(usize, usize)> = Vec::new();
    for (k, p) in out.paths.into_iter().enumerate() {
        let (i, j) = keys[k];
        match p {
            Some(p) => {
                let mut full = vec![branch[i]];
                full.extend_from_slice(&p.path);
                full.push(branch[j]);
                paths.insert((i, j), full);
                stats.connector_paths += 1;
            }
            None => failed.push((i, j)),
        }
    }
    // unroutable pairs: drop the vertex in the most of them until none is left
    while !failed.is_empty() {
        let mut count = vec![0usize; b];
        for &(i, j) in &failed {
            count[i] += 1;
            count[j] += 1;
        }
        let k = (0..b).max_by_key(|&k| (count[k], std::cmp::Reverse(k))).expect("b >= 1");
        alive[k] = false;
        stats.dropped_after_routing += 1;
        failed.retain(|&(i, j)| i != k && j != k);
    }
    if !floor(&alive) {
        let reason = format!("{} branch vertices lost to unroutable pairs", stats.dropped_after_routing);
        return BuildOutcome::failed(kind, g, target, stats, FailureStage::ConnectorExhausted, reason);
    }

    let survivors: Vec<usize> = (0..b).filter(|&k| alive[k]).collect();
    let mut cert =
        SubdivisionCertificate { branch: survivors.iter().map(|&k| branch[k]).collect(), ..Default::default() };
    for (a, &i) in survivors.iter().enumerate() {
        for (c, &j) in survivors.iter().enumerate().skip(a + 1) {
            cert.paths.insert((a, c), paths[&(i, j)].clone());
        }
    }
    BuildOutcome::finish(kind, g, target, stats, cert)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuilderChoice {
    Large,
    Small,
    Auto,
}

/// Builders to run for `choice`; `Auto` picks by regime and runs both when
/// `(1 - ε) n < ℓ < (1 + ε) n`.
pub fn builders_for(choice: BuilderChoice, n: usize, ell: usize, epsilon: f64) -> Vec<BuilderKind> {
    match choice {
        BuilderChoice::Large => vec![BuilderKind::Large],
        BuilderChoice::Small => vec![BuilderKind::Small],
        BuilderChoice::Auto => {
            let (n, l) = (n as f64, ell as f64);
            if l >= (1.0 + epsilon) * n {
                vec![BuilderKind::Large]
            } else if l <= (1.0 - epsilon) * n {
                vec![BuilderKind::Small]
            } else {
                vec![BuilderKind::Large, BuilderKind::Small]
            }
        }
    }
}

pub fn run_builder(kind: BuilderKind, g: &LiftGraph, cfg: &BuildConfig) -> BuildOutcome {
    match kind {
        BuilderKind::Large => build_large_ell(g, cfg),
        BuilderKind::Small => build_small_ell(g, cfg),
    }
}

/// Runs the selected builders and keeps the verified outcome of largest
/// order; with no success, the first failure.
pub fn build(g: &LiftGraph, cfg: &BuildConfig, choice: BuilderChoice) -> BuildOutcome {
    let mut outcomes: Vec<BuildOutcome> =
        builders_for(choice, g.n(), g.ell(), cfg.epsilon).into_iter().map(|k| run_builder(k, g, cfg)).collect();
    let best = (0..outcomes.len())
        .filter(|&k| outcomes[k].is_success())
        .max_by_key(|&k| (outcomes[k].achieved_order(), std::cmp::Reverse(k)))
        .unwrap_or(0);
    outcomes.swap_remove(best)
}
