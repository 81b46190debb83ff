use liftsub::connector::check_extendable_with;
use liftsub::props::{
    check_expansion_into_with, check_joined, estimate_avoidance_probability_with, JoinMode, JoinedOptions,
};
use liftsub::{
    batch_connect, build, complete_base, verify_certificate, BuildConfig, BuilderChoice, EmbeddingState, Execution,
    ExtendabilityParams, LiftGraph, RetryPolicy, SubdivisionCertificate, VertexId,
};

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap()
}

fn lift(n: usize, ell: usize, seed: u64) -> LiftGraph {
    LiftGraph::sample_uniform(&complete_base(n).unwrap(), ell, seed).unwrap()
}

#[test]
fn files_round_trip_through_build_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let g = lift(9, 20, 3);
    let lift_path = dir.path().join("lift.json");
    g.write_file(&lift_path).unwrap();
    let g = LiftGraph::read_file(&lift_path).unwrap();

    let out = build(&g, &BuildConfig::with_epsilon(0.5), BuilderChoice::Auto);
    let cert = out.certificate.expect("a verified certificate");
    let cert_path = dir.path().join("cert.json");
    cert.write_file(&cert_path).unwrap();
    let back = SubdivisionCertificate::read_file(&cert_path).unwrap();
    assert_eq!(back, cert);
    let v = verify_certificate(&g, &back);
    assert!(v.pass);
    assert_eq!(v.order, out.stats.branch_vertices);
}

#[test]
fn execution_mode_does_not_change_results() {
    let g = lift(12, 16, 7);
    let all: Vec<VertexId> = g.vertices().collect();

    let runs: Vec<Vec<String>> = [Execution::Sequential, Execution::Parallel]
        .into_iter()
        .map(|exec| {
            let sample = LiftGraph::sample_uniform_with(&complete_base(12).unwrap(), 16, 7, exec).unwrap();
            let joined = check_joined(
                &g,
                40,
                &JoinedOptions { mode: JoinMode::Sampled, trials: 300, seed: 1, exec, ..JoinedOptions::default() },
            )
            .unwrap();
            let expansion = check_expansion_into_with(&g, &all, 0.1, &[1, 3, 9], 100, 2, exec).unwrap();
            let avoidance = estimate_avoidance_probability_with(&[(0, 0), (1, 2), (3, 3)], 6, 5_000, 3, exec).unwrap();
            let s = EmbeddingState::new(&g, ExtendabilityParams::new(4, 6).unwrap());
            let extend = check_extendable_with(&g, &s, &[1, 2, 5], 100, 4, exec).unwrap();
            vec![sample.to_json(), json(&joined), json(&expansion), json(&avoidance), json(&extend)]
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn connector_state_survives_a_file_round_trip() {
    let g = lift(10, 30, 5);
    let params = ExtendabilityParams::asymptotic(g.n(), g.ell());
    let mut s = EmbeddingState::new(&g, params);
    let ends: Vec<VertexId> = (0..4).map(|f| VertexId::new(f, 0)).collect();
    for &v in &ends {
        s.add_vertex(v).unwrap();
    }
    let pairs: Vec<(VertexId, VertexId)> =
        (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).map(|(i, j)| (ends[i], ends[j])).collect();
    let out = batch_connect(&g, &mut s, &pairs, params.max_path_len(), RetryPolicy::default());
    assert!(out.is_complete());
    assert!(s.is_consistent());

    let text = s.to_json();
    let back = EmbeddingState::from_json(&g, &text).unwrap();
    assert_eq!(back.to_json(), text);
    assert_eq!(back.vertex_count(), s.vertex_count());
}
