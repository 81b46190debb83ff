//! Clique-subdivision certificates and their verification.
//!
//! A certificate lists `b` branch vertices and one path per unordered pair of
//! branch indices. It is valid for a host lift when every path runs between
//! its two branch vertices along host edges and no vertex is interior to two
//! paths or interior to a path while also being a branch vertex.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lift::{io_err, LiftError, LiftGraph, VertexId};

pub type PairKey = (usize, usize);

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SubdivisionCertificate {
    pub branch: Vec<VertexId>,
    pub paths: BTreeMap<PairKey, Vec<VertexId>>,
}

impl SubdivisionCertificate {
    pub fn order(&self) -> usize {
        self.branch.len()
    }

    /// Distinct vertices over branch vertices and all path vertices.
    pub fn vertex_count(&self) -> usize {
        let mut all: BTreeSet<VertexId> = self.branch.iter().copied().collect();
        for p in self.paths.values() {
            all.extend(p.iter().copied());
        }
        all.len()
    }

    /// Interior vertices of all paths, in key order.
    pub fn internal_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.paths.values().flat_map(|p| p.iter().skip(1).take(p.len().saturating_sub(2)).copied())
    }

    pub fn to_json(&self) -> String {
        let file = CertificateFile {
            branch: self.branch.clone(),
            paths: self.paths.iter().map(|(&(i, j), p)| (format!("{i}-{j}"), p.clone())).collect(),
        };
        let mut s = serde_json::to_string(&file).expect("certificate serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, LiftError> {
        let file: CertificateFile = serde_json::from_str(text)
            .map_err(|e| LiftError::Parse { field: "<certificate>".into(), reason: e.to_string() })?;
        let mut paths = BTreeMap::new();
        for (key, p) in file.paths {
            let pair = parse_pair_key(&key)
                .ok_or_else(|| LiftError::Parse { field: format!("paths.{key}"), reason: "expected \"i-j\"".into() })?;
            paths.insert(pair, p);
        }
        Ok(SubdivisionCertificate { branch: file.branch, paths })
    }

    pub fn write_file(&self, path: &Path) -> Result<(), LiftError> {
        std::fs::write(path, self.to_json()).map_err(|e| io_err(path, e))
    }

    pub fn read_file(path: &Path) -> Result<Self, LiftError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_json(&text)
    }
}

pub(crate) fn parse_pair_key(key: &str) -> Option<PairKey> {
    let (a, b) = key.split_once('-')?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertificateFile {
    branch: Vec<VertexId>,
    paths: BTreeMap<String, Vec<VertexId>>,
}

pub fn certificate_order(cert: &SubdivisionCertificate) -> usize {
    cert.order()
}

pub fn certificate_vertex_count(cert: &SubdivisionCertificate) -> usize {
    cert.vertex_count()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationClass {
    VertexOutOfRange,
    BranchCollision,
    MissingPair,
    InvalidPairKey,
    DegeneratePath,
    WrongEndpoints,
    MissingEdge,
    RepeatedVertex,
    InternalIsBranch,
    ReusedInternalVertex,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum Violation {
    /// A branch or path vertex outside the host.
    VertexOutOfRange {
        pair: Option<PairKey>,
        vertex: VertexId,
    },
    /// Two branch slots hold the same vertex.
    BranchCollision {
        vertex: VertexId,
        first: usize,
        second: usize,
    },
    MissingPair {
        pair: PairKey,
    },
    /// Key with `i >= j` or `j >= b`.
    InvalidPairKey {
        pair: PairKey,
    },
    /// Fewer than two vertices.
    DegeneratePath {
        pair: PairKey,
        len: usize,
    },
    WrongEndpoints {
        pair: PairKey,
    },
    MissingEdge {
        pair: PairKey,
        u: VertexId,
        v: VertexId,
    },
    /// A vertex occurring twice along one path.
    RepeatedVertex {
        pair: PairKey,
        vertex: VertexId,
    },
    InternalIsBranch {
        pair: PairKey,
        vertex: VertexId,
    },
    ReusedInternalVertex {
        vertex: VertexId,
        first: PairKey,
        second: PairKey,
    },
}

impl Violation {
    pub fn class(&self) -> ViolationClass {
        match self {
            Violation::VertexOutOfRange { .. } => ViolationClass::VertexOutOfRange,
            Violation::BranchCollision { .. } => ViolationClass::BranchCollision,
            Violation::MissingPair { .. } => ViolationClass::MissingPair,
            Violation::InvalidPairKey { .. } => ViolationClass::InvalidPairKey,
            Violation::DegeneratePath { .. } => ViolationClass::DegeneratePath,
            Violation::WrongEndpoints { .. } => ViolationClass::WrongEndpoints,
            Violation::MissingEdge { .. } => ViolationClass::MissingEdge,
            Violation::RepeatedVertex { .. } => ViolationClass::RepeatedVertex,
            Violation::InternalIsBranch { .. } => ViolationClass::InternalIsBranch,
            Violation::ReusedInternalVertex { .. } => ViolationClass::ReusedInternalVertex,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::VertexOutOfRange { pair: Some((i, j)), vertex } => {
                write!(f, "path {i}-{j}: vertex {vertex} is outside the host")
            }
            Violation::VertexOutOfRange { pair: None, vertex } => {
                write!(f, "branch vertex {vertex} is outside the host")
            }
            Violation::BranchCollision { vertex, first, second } => {
                write!(f, "branch collision: slots {first} and {second} both hold {vertex}")
            }
            Violation::MissingPair { pair: (i, j) } => write!(f, "missing pair {i}-{j}"),
            Violation::InvalidPairKey { pair: (i, j) } => write!(f, "invalid pair key {i}-{j}"),
            Violation::DegeneratePath { pair: (i, j), len } => write!(f, "path {i}-{j} has only {len} vertices"),
            Violation::WrongEndpoints { pair: (i, j) } => {
                write!(f, "path {i}-{j} does not run from branch {i} to branch {j}")
            }
            Violation::MissingEdge { pair: (i, j), u, v } => write!(f, "path {i}-{j}: {u} {v} is not an edge"),
            Violation::RepeatedVertex { pair: (i, j), vertex } => write!(f, "path {i}-{j} visits {vertex} twice"),
            Violation::InternalIsBranch { pair: (i, j), vertex } => {
                write!(f, "path {i}-{j} passes through branch vertex {vertex}")
            }
            Violation::ReusedInternalVertex { vertex, first, second } => write!(
                f,
                "reused internal vertex {vertex} in paths {}-{} and {}-{}",
                first.0, first.1, second.0, second.1
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub order: usize,
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn has(&self, class: ViolationClass) -> bool {
        self.violations.iter().any(|v| v.class() == class)
    }
}

/// Checks every certificate condition against `g` and lists all violations.
pub fn verify_certificate(g: &LiftGraph, cert: &SubdivisionCertificate) -> Verdict {
    let mut out = Vec::new();
    let b = cert.branch.len();

    let mut branch_slot: HashMap<VertexId, usize> = HashMap::with_capacity(b);
    for (k, &x) in cert.branch.iter().enumerate() {
        if !g.contains(x) {
            out.push(Violation::VertexOutOfRange { pair: None, vertex: x });
        }
        if let Some(&first) = branch_slot.get(&x) {
            out.push(Violation::BranchCollision { vertex: x, first, second: k });
        } else {
            branch_slot.insert(x, k);
        }
    }

    for i in 0..b {
        for j in i + 1..b {
            if !cert.paths.contains_key(&(i, j)) {
                out.push(Violation::MissingPair { pair: (i, j) });
            }
        }
    }

    let mut owner: HashMap<VertexId, PairKey> = HashMap::new();
    for (&pair, path) in &cert.paths {
        let (i, j) = pair;
        if i >= j || j >= b {
            out.push(Violation::InvalidPairKey { pair });
            continue;
        }
        if path.len() < 2 {
            out.push(Violation::DegeneratePath { pair, len: path.len() });
            continue;
        }
        if path[0] != cert.branch[i] || path[path.len() - 1] != cert.branch[j] {
            out.push(Violation::WrongEndpoints { pair });
        }
        for &x in path {
            if !g.contains(x) {
                out.push(Violation::VertexOutOfRange { pair: Some(pair), vertex: x });
            }
        }
        for w in path.windows(2) {
            if !g.is_edge(w[0], w[1]) {
                out.push(Violation::MissingEdge { pair, u: w[0], v: w[1] });
            }
        }
        let mut seen = BTreeSet::new();
        for &x in path {
            if !seen.insert(x) {
                out.push(Violation::RepeatedVertex { pair, vertex: x });
            }
        }
        let mut interior_seen = BTreeSet::new();
        for &x in &path[1..path.len() - 1] {
            if !interior_seen.insert(x) {
                continue;
            }
            if branch_slot.contains_key(&x) {
                out.push(Violation::InternalIsBranch { pair, vertex: x });
                continue;
            }
            match owner.get(&x) {
                Some(&first) => out.push(Violation::ReusedInternalVertex { vertex: x, first, second: pair }),
                None => {
                    owner.insert(x, pair);
                }
            }
        }
    }

    Verdict { pass: out.is_empty(), order: b, violations: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::{complete_base, BaseGraph};

    fn v(f: usize, l: usize) -> VertexId {
        VertexId::new(f, l)
    }

    fn k4() -> LiftGraph {
        LiftGraph::sample_uniform(&complete_base(4).unwrap(), 1, 0).unwrap()
    }

    fn clique_certificate(b: usize) -> SubdivisionCertificate {
        let branch: Vec<_> = (0..b).map(|f| v(f, 0)).collect();
        let mut paths = BTreeMap::new();
        for i in 0..b {
            for j in i + 1..b {
                paths.insert((i, j), vec![branch[i], branch[j]]);
            }
        }
        SubdivisionCertificate { branch, paths }
    }

    /// K_3 subdivision inside a 6-cycle lift: branches at (0,0),(1,0),(2,0)... built by hand
    /// on a cycle base so that every path has an interior vertex.
    fn cycle_host() -> (LiftGraph, SubdivisionCertificate) {
        let base = BaseGraph::new(6, (0..6).map(|i| (i, (i + 1) % 6))).unwrap();
        let g = LiftGraph::from_matchings(base, 1, vec![vec![0]; 6]).unwrap();
        let cert = SubdivisionCertificate {
            branch: vec![v(0, 0), v(2, 0), v(4, 0)],
            paths: BTreeMap::from([
                ((0, 1), vec![v(0, 0), v(1, 0), v(2, 0)]),
                ((0, 2), vec![v(0, 0), v(5, 0), v(4, 0)]),
                ((1, 2), vec![v(2, 0), v(3, 0), v(4, 0)]),
            ]),
        };
        (g, cert)
    }

    #[test]
    fn clique_is_its_own_subdivision() {
        let g = k4();
        let cert = clique_certificate(4);
        let verdict = verify_certificate(&g, &cert);
        assert!(verdict.pass, "{:?}", verdict.violations);
        assert_eq!(certificate_order(&cert), 4);
        assert_eq!(certificate_vertex_count(&cert), 4);
    }

    #[test]
    fn cycle_certificate_passes_and_counts_interior() {
        let (g, cert) = cycle_host();
        assert!(verify_certificate(&g, &cert).pass);
        // each length-2 path adds one vertex
        assert_eq!(cert.vertex_count(), 6);
        assert_eq!(cert.internal_vertices().count(), 3);
    }

    #[test]
    fn reused_internal_vertex_is_named() {
        let (g, mut cert) = cycle_host();
        // reroute 1-2 through the interior vertex of 0-1 (also breaks edges)
        cert.paths.insert((1, 2), vec![v(2, 0), v(1, 0), v(4, 0)]);
        let verdict = verify_certificate(&g, &cert);
        assert!(!verdict.pass);
        assert!(verdict.violations.contains(&Violation::ReusedInternalVertex {
            vertex: v(1, 0),
            first: (0, 1),
            second: (1, 2)
        }));
    }

    #[test]
    fn each_corruption_has_its_class() {
        let g = k4();
        let base = clique_certificate(4);

        let mut c = base.clone();
        c.paths.remove(&(1, 3));
        assert!(verify_certificate(&g, &c).has(ViolationClass::MissingPair));

        let mut c = base.clone();
        c.branch[2] = c.branch[0];
        assert!(verify_certificate(&g, &c).has(ViolationClass::BranchCollision));

        let mut c = base.clone();
        c.paths.insert((2, 2), vec![v(2, 0)]);
        assert!(verify_certificate(&g, &c).has(ViolationClass::InvalidPairKey));

        let mut c = base.clone();
        c.paths.insert((0, 1), vec![v(0, 0)]);
        assert!(verify_certificate(&g, &c).has(ViolationClass::DegeneratePath));

        let mut c = base.clone();
        c.paths.insert((0, 1), vec![v(1, 0), v(0, 0)]);
        assert!(verify_certificate(&g, &c).has(ViolationClass::WrongEndpoints));

        let mut c = base.clone();
        c.paths.insert((0, 1), vec![v(0, 0), v(2, 0), v(1, 0)]);
        assert!(verify_certificate(&g, &c).has(ViolationClass::InternalIsBranch));

        let mut c = base.clone();
        c.paths.insert((0, 1), vec![v(0, 0), v(0, 0), v(1, 0)]);
        let verdict = verify_certificate(&g, &c);
        assert!(verdict.has(ViolationClass::RepeatedVertex));
        assert!(verdict.has(ViolationClass::MissingEdge));

        let mut c = base;
        c.paths.insert((0, 1), vec![v(0, 0), v(7, 0), v(1, 0)]);
        assert!(verify_certificate(&g, &c).has(ViolationClass::VertexOutOfRange));
    }

    #[test]
    fn same_fiber_step_is_a_missing_edge() {
        let g = LiftGraph::sample_uniform(&complete_base(3).unwrap(), 2, 1).unwrap();
        let cert = SubdivisionCertificate {
            branch: vec![v(0, 0), v(0, 1)],
            paths: BTreeMap::from([((0, 1), vec![v(0, 0), v(0, 1)])]),
        };
        let verdict = verify_certificate(&g, &cert);
        assert_eq!(verdict.violations, vec![Violation::MissingEdge { pair: (0, 1), u: v(0, 0), v: v(0, 1) }]);
    }

    #[test]
    fn empty_and_single_vertex_certificates() {
        let g = k4();
        assert!(verify_certificate(&g, &SubdivisionCertificate::default()).pass);
        let one = SubdivisionCertificate { branch: vec![v(3, 0)], paths: BTreeMap::new() };
        assert!(verify_certificate(&g, &one).pass);
    }

    #[test]
    fn verification_is_pure() {
        let (g, mut cert) = cycle_host();
        cert.paths.remove(&(0, 2));
        assert_eq!(verify_certificate(&g, &cert), verify_certificate(&g, &cert));
    }

    #[test]
    fn certificate_file_round_trip() {
        let (_, cert) = cycle_host();
        let text = cert.to_json();
        assert!(text.starts_with("{\"branch\":[[0,0],[2,0],[4,0]],\"paths\":{\"0-1\":[[0,0],[1,0],[2,0]]"));
        assert_eq!(SubdivisionCertificate::from_json(&text).unwrap(), cert);
        assert!(SubdivisionCertificate::from_json(r#"{"branch":[],"paths":{"x":[]}}"#).is_err());
    }
}
