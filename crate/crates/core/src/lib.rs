//! Random ℓ-lifts of graphs and constructive clique subdivisions in them.
//!
//! The crate samples uniform lifts, routes internally disjoint paths with an
//! embedding state, builds topological cliques in two regimes of ℓ, and checks
//! every certificate it emits. Exact brute-force oracles for tiny instances
//! live in [`oracle`].
//!
//! Data-parallel loops go through [`par`]; building without the `parallel`
//! feature runs them sequentially with identical results.

pub mod builder;
pub mod connector;
pub mod experiments;
pub mod lift;
pub mod oracle;
pub mod par;
pub mod props;
pub mod rng;
pub mod verifier;

pub use builder::{
    build, build_large_ell, build_small_ell, target_order, BuildConfig, BuildOutcome, BuilderChoice, BuilderKind,
};
pub use connector::{
    batch_connect, check_extendable, connect, EmbeddingState, ExtendabilityParams, PathResult, RetryPolicy,
};
pub use experiments::{run_sweep, EllSpec, SweepConfig, SweepRow, SweepSummary};
pub use lift::{complete_base, BaseGraph, LiftError, LiftGraph, VertexId};
pub use par::Execution;
pub use verifier::{
    certificate_order, certificate_vertex_count, verify_certificate, SubdivisionCertificate, Verdict, Violation,
    ViolationClass,
};
