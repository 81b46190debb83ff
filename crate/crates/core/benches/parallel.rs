//! Sequential against data-parallel execution on the hot loops.
//! Without the `parallel` feature both variants run sequentially.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use liftsub::connector::check_extendable_with;
use liftsub::props::{
    check_expansion_into_with, check_joined, estimate_avoidance_probability_with, random_pair_set, JoinMode,
    JoinedOptions,
};
use liftsub::rng::substream;
use liftsub::{
    complete_base, run_sweep, BuilderChoice, EllSpec, EmbeddingState, Execution, ExtendabilityParams, LiftGraph,
    SweepConfig, VertexId,
};

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn label(exec: Execution) -> &'static str {
    match exec {
        Execution::Sequential => "sequential",
        Execution::Parallel => "parallel",
    }
}

fn lift(n: usize, ell: usize) -> LiftGraph {
    LiftGraph::sample_uniform(&complete_base(n).unwrap(), ell, 1).unwrap()
}

fn sampling(c: &mut Criterion) {
    let base = complete_base(120).unwrap();
    let mut group = c.benchmark_group("sample_lift_n120_ell200");
    for exec in MODES {
        group.bench_function(label(exec), |b| {
            b.iter(|| LiftGraph::sample_uniform_with(&base, 200, black_box(3), exec).unwrap())
        });
    }
    group.finish();
}

fn avoidance(c: &mut Criterion) {
    let f = random_pair_set(40, 120, &mut substream(0, &[1]));
    let mut group = c.benchmark_group("avoidance_ell40");
    for exec in MODES {
        group.bench_function(label(exec), |b| {
            b.iter(|| estimate_avoidance_probability_with(&f, 40, 20_000, black_box(5), exec).unwrap())
        });
    }
    group.finish();
}

fn joined(c: &mut Criterion) {
    let g = lift(40, 40);
    let mut group = c.benchmark_group("joined_sampled_n40_ell40");
    for exec in MODES {
        let opts = JoinedOptions { mode: JoinMode::Sampled, trials: 2_000, seed: 9, exec, ..JoinedOptions::default() };
        group.bench_function(label(exec), |b| b.iter(|| check_joined(&g, 200, &opts).unwrap()));
    }
    group.finish();
}

fn expansion(c: &mut Criterion) {
    let g = lift(40, 40);
    let all: Vec<VertexId> = g.vertices().collect();
    let mut group = c.benchmark_group("expansion_n40_ell40");
    for exec in MODES {
        group.bench_function(label(exec), |b| {
            b.iter(|| check_expansion_into_with(&g, &all, 0.1, &[1, 4, 16], 500, 2, exec).unwrap())
        });
    }
    group.finish();
}

fn extendable(c: &mut Criterion) {
    let g = lift(40, 60);
    let s = EmbeddingState::new(&g, ExtendabilityParams::asymptotic(g.n(), g.ell()));
    let mut group = c.benchmark_group("extendable_n40_ell60");
    for exec in MODES {
        group.bench_function(label(exec), |b| {
            b.iter(|| check_extendable_with(&g, &s, &[2, 8, 32], 300, 4, exec).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for exec in MODES {
        for workers in [1, 0] {
            let id = BenchmarkId::new(label(exec), if workers == 1 { "1-worker" } else { "all-workers" });
            group.bench_function(id, |b| {
                b.iter(|| {
                    let mut cfg = SweepConfig::new(vec![12, 20], EllSpec::Ratios(vec![2.0]), 4);
                    cfg.builder = BuilderChoice::Large;
                    cfg.exec = exec;
                    cfg.workers = workers;
                    run_sweep(&cfg, std::io::sink()).unwrap()
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sampling, avoidance, joined, expansion, extendable, sweep);
criterion_main!(benches);
