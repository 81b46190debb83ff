//! Base graphs, their ℓ-lifts, and the lift file format.
//!
//! A lift replaces every base vertex `i` by a fiber of `ell` vertices
//! `(i, 0) .. (i, ell - 1)` and every base edge `(i, j)` by a perfect matching
//! between the two fibers. The matching is stored as a permutation `p` with
//! `(i, a) ~ (j, p[a])`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::{self, Execution};
use crate::rng::{substream, tag};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LiftError {
    #[error("base graph must have at least one vertex")]
    EmptyBase,
    #[error("lift size ell must be at least 1")]
    ZeroEll,
    #[error("edge ({0}, {1}) has an endpoint outside [0, {2})")]
    EdgeOutOfRange(usize, usize, usize),
    #[error("self-loop at base vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate base edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("vertex {0} is outside the lift")]
    VertexOutOfRange(VertexId),
    #[error("field `{field}`: {reason}")]
    Parse { field: String, reason: String },
    #[error("i/o error on {path}: {reason}")]
    Io { path: String, reason: String },
}

impl LiftError {
    fn parse(field: impl Into<String>, reason: impl Into<String>) -> Self {
        LiftError::Parse { field: field.into(), reason: reason.into() }
    }
}

/// A lift vertex, addressed by fiber and layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct VertexId {
    pub fiber: usize,
    pub layer: usize,
}

impl VertexId {
    pub const fn new(fiber: usize, layer: usize) -> Self {
        VertexId { fiber, layer }
    }
}

impl From<(usize, usize)> for VertexId {
    fn from((fiber, layer): (usize, usize)) -> Self {
        VertexId { fiber, layer }
    }
}

impl From<VertexId> for (usize, usize) {
    fn from(v: VertexId) -> Self {
        (v.fiber, v.layer)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.fiber, self.layer)
    }
}

/// Simple undirected base graph with a canonical (sorted, `i < j`) edge list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseGraph {
    num_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl BaseGraph {
    /// Builds a base graph, orienting every pair as `i < j` and sorting.
    /// Loops, duplicates and out-of-range endpoints are rejected.
    pub fn new(num_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, LiftError> {
        if num_vertices == 0 {
            return Err(LiftError::EmptyBase);
        }
        let mut canon = Vec::new();
        for (a, b) in edges {
            if a >= num_vertices || b >= num_vertices {
                return Err(LiftError::EdgeOutOfRange(a, b, num_vertices));
            }
            if a == b {
                return Err(LiftError::SelfLoop(a));
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(LiftError::DuplicateEdge(w[0].0, w[0].1));
        }
        Ok(BaseGraph { num_vertices, edges: canon })
    }

    /// The complete graph `K_n`.
    pub fn complete(n: usize) -> Result<Self, LiftError> {
        if n == 0 {
            return Err(LiftError::EmptyBase);
        }
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Ok(BaseGraph { num_vertices: n, edges })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_complete(&self) -> bool {
        let n = self.num_vertices;
        self.edges.len() == n * (n - 1) / 2
    }
}

/// Builds `K_n`; `n = 0` is rejected.
pub fn complete_base(n: usize) -> Result<BaseGraph, LiftError> {
    BaseGraph::complete(n)
}

/// An ℓ-lift of a base graph. Immutable once built.
#[derive(Clone, Debug)]
pub struct LiftGraph {
    base: BaseGraph,
    ell: usize,
    /// `forward[e][a]`: layer in fiber `j` matched to layer `a` of fiber `i`, for edge `e = (i, j)`.
    forward: Vec<Vec<u32>>,
    backward: Vec<Vec<u32>>,
    /// `incident[f]`: `(other fiber, edge index)` sorted by other fiber.
    incident: Vec<Vec<(usize, usize)>>,
}

impl PartialEq for LiftGraph {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.ell == other.ell && self.forward == other.forward
    }
}

impl Eq for LiftGraph {}

impl LiftGraph {
    /// Builds a lift from one permutation per base edge (same order as
    /// `base.edges()`).
    pub fn from_matchings(base: BaseGraph, ell: usize, matchings: Vec<Vec<usize>>) -> Result<Self, LiftError> {
        if ell == 0 {
            return Err(LiftError::ZeroEll);
        }
        if matchings.len() != base.edges.len() {
            return Err(LiftError::parse(
                "matchings",
                format!("expected {} entries, found {}", base.edges.len(), matchings.len()),
            ));
        }
        let mut forward = Vec::with_capacity(matchings.len());
        for (&(i, j), perm) in base.edges.iter().zip(matchings) {
            let field = format!("matchings.{i}-{j}");
            forward.push(validate_permutation(&perm, ell).map_err(|r| LiftError::parse(field, r))?);
        }
        Ok(Self::assemble(base, ell, forward))
    }

    fn assemble(base: BaseGraph, ell: usize, forward: Vec<Vec<u32>>) -> Self {
        let backward = forward
            .iter()
            .map(|p| {
                let mut inv = vec![0u32; ell];
                for (a, &b) in p.iter().enumerate() {
                    inv[b as usize] = a as u32;
                }
                inv
            })
            .collect();
        let mut incident = vec![Vec::new(); base.num_vertices];
        for (e, &(i, j)) in base.edges.iter().enumerate() {
            incident[i].push((j, e));
            incident[j].push((i, e));
        }
        for list in &mut incident {
            list.sort_unstable();
        }
        LiftGraph { base, ell, forward, backward, incident }
    }

    /// Samples a uniformly random ℓ-lift. Each base edge `(i, j)` gets an
    /// independent Fisher–Yates shuffle from the substream `(seed, i, j)`.
    pub fn sample_uniform(base: &BaseGraph, ell: usize, seed: u64) -> Result<Self, LiftError> {
        Self::sample_uniform_with(base, ell, seed, Execution::default())
    }

    pub fn sample_uniform_with(base: &BaseGraph, ell: usize, seed: u64, exec: Execution) -> Result<Self, LiftError> {
        if ell == 0 {
            return Err(LiftError::ZeroEll);
        }
        let forward = par::map_slice(exec, &base.edges, |&(i, j)| {
            let mut rng = substream(seed, &[tag::LIFT_EDGE, i as u64, j as u64]);
            let mut perm: Vec<u32> = (0..ell as u32).collect();
            perm.shuffle(&mut rng);
            perm
        });
        Ok(Self::assemble(base.clone(), ell, forward))
    }

    pub fn base(&self) -> &BaseGraph {
        &self.base
    }

    /// Number of base vertices (fibers).
    pub fn n(&self) -> usize {
        self.base.num_vertices
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn vertex_count(&self) -> usize {
        self.base.num_vertices * self.ell
    }

    pub fn edge_count(&self) -> usize {
        self.base.edges.len() * self.ell
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.fiber < self.n() && v.layer < self.ell
    }

    /// Dense storage index `fiber * ell + layer`, used for per-vertex arrays.
    #[inline]
    pub fn index(&self, v: VertexId) -> usize {
        v.fiber * self.ell + v.layer
    }

    #[inline]
    pub fn vertex(&self, index: usize) -> VertexId {
        VertexId::new(index / self.ell, index % self.ell)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertex_count()).map(|i| self.vertex(i))
    }

    pub fn fiber(&self, f: usize) -> impl Iterator<Item = VertexId> {
        (0..self.ell).map(move |l| VertexId::new(f, l))
    }

    /// Permutation carried by base edge `(i, j)`, `i < j`.
    pub fn matching(&self, i: usize, j: usize) -> Option<&[u32]> {
        let e = self.edge_index(i, j)?;
        Some(&self.forward[e])
    }

    fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let list = self.incident.get(i)?;
        list.binary_search_by_key(&j, |&(o, _)| o).ok().map(|k| list[k].1)
    }

    /// The unique neighbor of `v` inside fiber `f`, if the fibers are adjacent.
    pub fn partner(&self, v: VertexId, f: usize) -> Option<VertexId> {
        let e = self.edge_index(v.fiber, f)?;
        Some(self.partner_via(v, f, e))
    }

    #[inline]
    fn partner_via(&self, v: VertexId, other: usize, e: usize) -> VertexId {
        let layer = if v.fiber < other { self.forward[e][v.layer] } else { self.backward[e][v.layer] };
        VertexId::new(other, layer as usize)
    }

    /// Neighbors in increasing fiber order. `v` must be in range.
    pub fn neighbors_iter(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.incident[v.fiber].iter().map(move |&(o, e)| self.partner_via(v, o, e))
    }

    /// Neighbors of `v`, one per base edge at `v.fiber`, sorted.
    pub fn neighbors(&self, v: VertexId) -> Result<Vec<VertexId>, LiftError> {
        if !self.contains(v) {
            return Err(LiftError::VertexOutOfRange(v));
        }
        Ok(self.neighbors_iter(v).collect())
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.incident[v.fiber].len()
    }

    /// Adjacency test. Symmetric; false inside a fiber and for out-of-range input.
    pub fn is_edge(&self, u: VertexId, v: VertexId) -> bool {
        if !self.contains(u) || !self.contains(v) || u.fiber == v.fiber {
            return false;
        }
        match self.edge_index(u.fiber, v.fiber) {
            Some(e) => self.partner_via(u, v.fiber, e) == v,
            None => false,
        }
    }

    /// All lift edges `(u, v)` with `u < v`, ordered by base edge then layer.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.base.edges.iter().zip(&self.forward).flat_map(|(&(i, j), p)| {
            p.iter().enumerate().map(move |(a, &b)| (VertexId::new(i, a), VertexId::new(j, b as usize)))
        })
    }

    /// Canonical lift file text (compact JSON, newline terminated).
    pub fn to_json(&self) -> String {
        let file = LiftFile {
            n: self.n(),
            ell: self.ell,
            base_edges: self.base.edges.iter().map(|&(i, j)| [i, j]).collect(),
            matchings: self
                .base
                .edges
                .iter()
                .zip(&self.forward)
                .map(|(&(i, j), p)| (format!("{i}-{j}"), p.iter().map(|&x| x as usize).collect()))
                .collect(),
        };
        let mut s = serde_json::to_string(&file).expect("lift file serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, LiftError> {
        let file: LiftFile =
            serde_json::from_str(text).map_err(|e| LiftError::parse(json_error_field(&e), e.to_string()))?;
        file.into_lift()
    }

    pub fn write_file(&self, path: &Path) -> Result<(), LiftError> {
        std::fs::write(path, self.to_json()).map_err(|e| io_err(path, e))
    }

    pub fn read_file(path: &Path) -> Result<Self, LiftError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_json(&text)
    }
}

pub(crate) fn io_err(path: &Path, e: std::io::Error) -> LiftError {
    LiftError::Io { path: path.display().to_string(), reason: e.to_string() }
}

fn json_error_field(e: &serde_json::Error) -> String {
    // serde reports missing/unknown fields in the message; keep the message
    // and point at the document position.
    let msg = e.to_string();
    for name in ["n", "ell", "base_edges", "matchings"] {
        if msg.contains(&format!("`{name}`")) {
            return name.to_string();
        }
    }
    format!("<document line {} column {}>", e.line(), e.column())
}

fn validate_permutation(perm: &[usize], ell: usize) -> Result<Vec<u32>, String> {
    if perm.len() != ell {
        return Err(format!("expected {ell} layers, found {}", perm.len()));
    }
    let mut seen = vec![false; ell];
    for (a, &b) in perm.iter().enumerate() {
        if b >= ell {
            return Err(format!("layer {a} maps to {b}, outside [0, {ell})"));
        }
        if std::mem::replace(&mut seen[b], true) {
            return Err(format!("not a bijection: layer {b} is hit twice"));
        }
    }
    Ok(perm.iter().map(|&b| b as u32).collect())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LiftFile {
    n: usize,
    ell: usize,
    base_edges: Vec<[usize; 2]>,
    matchings: BTreeMap<String, Vec<usize>>,
}

impl LiftFile {
    fn into_lift(self) -> Result<LiftGraph, LiftError> {
        if self.n == 0 {
            return Err(LiftError::parse("n", "must be at least 1"));
        }
        if self.ell == 0 {
            return Err(LiftError::parse("ell", "must be at least 1"));
        }
        for (k, w) in self.base_edges.windows(2).enumerate() {
            if w[0] >= w[1] {
                return Err(LiftError::parse(format!("base_edges[{}]", k + 1), "edges must be strictly sorted"));
            }
        }
        for (k, &[i, j]) in self.base_edges.iter().enumerate() {
            if i >= j || j >= self.n {
                return Err(LiftError::parse(format!("base_edges[{k}]"), format!("need i < j < n, got ({i}, {j})")));
            }
        }
        let base = BaseGraph::new(self.n, self.base_edges.iter().map(|&[i, j]| (i, j)))
            .map_err(|e| LiftError::parse("base_edges", e.to_string()))?;
        let mut matchings = self.matchings;
        let mut perms = Vec::with_capacity(base.edges.len());
        for &(i, j) in &base.edges {
            let key = format!("{i}-{j}");
            let perm = matchings
                .remove(&key)
                .ok_or_else(|| LiftError::parse(format!("matchings.{key}"), "missing entry for base edge"))?;
            perms.push(perm);
        }
        if let Some(extra) = matchings.keys().next() {
            return Err(LiftError::parse(format!("matchings.{extra}"), "entry does not correspond to a base edge"));
        }
        LiftGraph::from_matchings(base, self.ell, perms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(f: usize, l: usize) -> VertexId {
        VertexId::new(f, l)
    }

    #[test]
    fn complete_base_examples() {
        assert_eq!(complete_base(3).unwrap().edges(), &[(0, 1), (0, 2), (1, 2)]);
        assert!(complete_base(1).unwrap().edges().is_empty());
        assert_eq!(complete_base(5).unwrap().edges().len(), 10);
        assert_eq!(complete_base(0), Err(LiftError::EmptyBase));
    }

    #[test]
    fn base_graph_canonicalizes_and_rejects() {
        let g = BaseGraph::new(4, [(2, 1), (0, 3)]).unwrap();
        assert_eq!(g.edges(), &[(0, 3), (1, 2)]);
        assert_eq!(BaseGraph::new(3, [(1, 1)]), Err(LiftError::SelfLoop(1)));
        assert_eq!(BaseGraph::new(3, [(0, 1), (1, 0)]), Err(LiftError::DuplicateEdge(0, 1)));
        assert_eq!(BaseGraph::new(3, [(0, 3)]), Err(LiftError::EdgeOutOfRange(0, 3, 3)));
    }

    #[test]
    fn one_lift_is_the_base() {
        let base = complete_base(3).unwrap();
        let g = LiftGraph::sample_uniform(&base, 1, 99).unwrap();
        assert_eq!(g.neighbors(v(0, 0)).unwrap(), vec![v(1, 0), v(2, 0)]);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn k4_five_lift_counts() {
        let g = LiftGraph::sample_uniform(&complete_base(4).unwrap(), 5, 3).unwrap();
        assert_eq!(g.vertex_count(), 20);
        assert_eq!(g.edges().count(), 30);
        assert!(g.vertices().all(|x| g.degree(x) == 3 && g.neighbors(x).unwrap().len() == 3));
    }

    #[test]
    fn neighbors_agree_with_is_edge() {
        let g = LiftGraph::sample_uniform(&complete_base(4).unwrap(), 3, 11).unwrap();
        for a in g.vertices() {
            let nb = g.neighbors(a).unwrap();
            for b in g.vertices() {
                assert_eq!(g.is_edge(a, b), nb.contains(&b), "{a} {b}");
                assert_eq!(g.is_edge(a, b), g.is_edge(b, a));
            }
            assert!(!g.is_edge(a, a));
        }
    }

    #[test]
    fn out_of_range_vertex_rejected() {
        let g = LiftGraph::sample_uniform(&complete_base(3).unwrap(), 2, 0).unwrap();
        assert_eq!(g.neighbors(v(3, 0)), Err(LiftError::VertexOutOfRange(v(3, 0))));
        assert_eq!(g.neighbors(v(0, 2)), Err(LiftError::VertexOutOfRange(v(0, 2))));
        assert!(!g.is_edge(v(0, 0), v(9, 0)));
    }

    #[test]
    fn general_base_graphs_are_supported() {
        let path = BaseGraph::new(3, [(0, 1), (1, 2)]).unwrap();
        let g = LiftGraph::sample_uniform(&path, 4, 5).unwrap();
        assert_eq!(g.degree(v(0, 0)), 1);
        assert_eq!(g.degree(v(1, 3)), 2);
        assert!(g.partner(v(0, 0), 2).is_none());
    }

    #[test]
    fn file_format_shape() {
        let base = BaseGraph::new(3, [(0, 1), (1, 2)]).unwrap();
        let g = LiftGraph::from_matchings(base, 2, vec![vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(
            g.to_json(),
            "{\"n\":3,\"ell\":2,\"base_edges\":[[0,1],[1,2]],\"matchings\":{\"0-1\":[1,0],\"1-2\":[0,1]}}\n"
        );
    }

    #[test]
    fn non_bijective_matching_is_a_parse_error() {
        let text = r#"{"n":2,"ell":3,"base_edges":[[0,1]],"matchings":{"0-1":[0,0,2]}}"#;
        match LiftGraph::from_json(text) {
            Err(LiftError::Parse { field, .. }) => assert_eq!(field, "matchings.0-1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_matching_entry_is_a_parse_error() {
        let text = r#"{"n":3,"ell":1,"base_edges":[[0,1],[0,2]],"matchings":{"0-1":[0]}}"#;
        match LiftGraph::from_json(text) {
            Err(LiftError::Parse { field, .. }) => assert_eq!(field, "matchings.0-2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_fields_are_named() {
        let missing_ell = r#"{"n":2,"base_edges":[[0,1]],"matchings":{"0-1":[0]}}"#;
        assert!(matches!(LiftGraph::from_json(missing_ell), Err(LiftError::Parse { field, .. }) if field == "ell"));
        let unsorted = r#"{"n":3,"ell":1,"base_edges":[[0,2],[0,1]],"matchings":{"0-1":[0],"0-2":[0]}}"#;
        assert!(
            matches!(LiftGraph::from_json(unsorted), Err(LiftError::Parse { field, .. }) if field == "base_edges[1]")
        );
        let extra = r#"{"n":2,"ell":1,"base_edges":[[0,1]],"matchings":{"0-1":[0],"1-0":[0]}}"#;
        assert!(matches!(LiftGraph::from_json(extra), Err(LiftError::Parse { field, .. }) if field == "matchings.1-0"));
    }

    #[test]
    fn sampling_is_deterministic_and_thread_independent() {
        let base = complete_base(7).unwrap();
        let a = LiftGraph::sample_uniform_with(&base, 6, 42, Execution::Sequential).unwrap();
        let b = LiftGraph::sample_uniform_with(&base, 6, 42, Execution::Parallel).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let c = LiftGraph::sample_uniform(&base, 6, 43).unwrap();
        assert_ne!(a, c);
    }

    proptest! {
        #[test]
        fn round_trip(n in 1usize..7, ell in 1usize..6, seed: u64) {
            let g = LiftGraph::sample_uniform(&complete_base(n).unwrap(), ell, seed).unwrap();
            let text = g.to_json();
            let back = LiftGraph::from_json(&text).unwrap();
            prop_assert_eq!(&back, &g);
            prop_assert_eq!(back.to_json(), text);
        }

        #[test]
        fn lifts_of_complete_graphs_are_regular(n in 1usize..8, ell in 1usize..7, seed: u64) {
            let g = LiftGraph::sample_uniform(&complete_base(n).unwrap(), ell, seed).unwrap();
            for x in g.vertices() {
                let nb = g.neighbors(x).unwrap();
                prop_assert_eq!(nb.len(), n - 1);
                prop_assert!(nb.iter().all(|y| y.fiber != x.fiber));
            }
        }
    }
}
