mod support;

use std::fs;

use sha2::{Digest, Sha256};
use trustsim_core::export::{
    self, read_matrix, read_network, read_timeseries, write_matrix_snapshot,
};
use trustsim_core::plot::PLOT_DIR;
use trustsim_core::{
    compute_metrics, emit_plots, run_simulation, write_run, RunArtifacts, ScenarioConfig, SimError,
    Topology, WriteOptions,
};

fn quick_disaster(iterations: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::disaster();
    cfg.total_iterations = iterations;
    cfg.events.retain(|e| e.iteration <= iterations);
    cfg.snapshot_iterations = vec![iterations / 2, iterations];
    cfg
}

fn written(cfg: &ScenarioConfig) -> (RunArtifacts, tempfile::TempDir) {
    let run = run_simulation(cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_run(&run, dir.path(), WriteOptions::default()).unwrap();
    (run, dir)
}

#[test]
fn timeseries_round_trips_within_tolerance() {
    let (run, dir) = written(&quick_disaster(200));
    let parsed = read_timeseries(&dir.path().join(export::TIMESERIES_FILE)).unwrap();
    assert_eq!(parsed.rows.len(), run.log.rows.len());
    for (a, b) in run.log.rows.iter().zip(&parsed.rows) {
        assert_eq!(a.iteration, b.iteration);
        assert!(support::max_abs_diff(&a.values(), &b.values()) <= 1e-9);
    }
}

#[test]
fn twenty_agent_trust_snapshot_round_trips() {
    let (run, dir) = written(&quick_disaster(100));
    let snap = run.snapshots.iter().find(|s| s.iteration == 50).unwrap();
    let parsed = read_matrix(&dir.path().join(export::trust_snapshot_file(50))).unwrap();
    assert_eq!(parsed.len(), 20);
    for (a, b) in snap.trust.iter().zip(&parsed) {
        assert!(support::max_abs_diff(a, b) <= 1e-9);
    }
}

#[test]
fn hundred_agent_network_file_has_197_links() {
    let mut cfg = support::small(100, 0, 9);
    cfg.topology = Topology::PreferentialAttachment { m: 2 };
    let (run, dir) = written(&cfg);
    assert_eq!(run.friendship.edge_count(), 197);
    let doc = read_network(&dir.path().join(export::FRIENDSHIP_FILE)).unwrap();
    assert_eq!(doc.links.len(), 197);
    assert_eq!(doc.nodes.len(), 100);
    assert!(doc.nodes.iter().enumerate().all(|(i, n)| n.id == i));
    let keys: Vec<_> = doc.links.iter().map(|l| (l.source, l.target)).collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn manifest_fingerprints_every_artifact() {
    let (_, dir) = written(&quick_disaster(50));
    let manifest = export::RunManifest::load(dir.path()).unwrap();
    assert_eq!(manifest.seed, 42);
    assert!(manifest.timestamp_unix.is_none());
    for (name, entry) in &manifest.artifacts {
        let bytes = fs::read(dir.path().join(name)).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), entry.sha256, "{name}");
        assert!(!entry.layout.is_empty());
    }
    assert!(manifest
        .artifacts
        .contains_key(&export::allocation_file(50)));
}

#[test]
fn plots_are_a_pure_function_of_the_files() {
    let (_, dir) = written(&quick_disaster(120));
    let first: Vec<_> = emit_plots(dir.path())
        .unwrap()
        .iter()
        .map(|p| fs::read(p).unwrap())
        .collect();
    assert_eq!(first.len(), 9);
    let second: Vec<_> = emit_plots(dir.path())
        .unwrap()
        .iter()
        .map(|p| fs::read(p).unwrap())
        .collect();
    assert_eq!(first, second);

    // Same seed in a fresh directory gives the same figures.
    let (_, other) = written(&quick_disaster(120));
    let third: Vec<_> = emit_plots(other.path())
        .unwrap()
        .iter()
        .map(|p| fs::read(p).unwrap())
        .collect();
    assert_eq!(first, third);
}

#[test]
fn missing_artifact_is_named() {
    let (_, dir) = written(&quick_disaster(20));
    fs::remove_file(dir.path().join(export::INFLUENCE_FILE)).unwrap();
    let err = emit_plots(dir.path()).unwrap_err();
    assert!(matches!(err, SimError::MissingArtifact(_)), "{err:?}");
    assert!(err.to_string().contains(export::INFLUENCE_FILE), "{err}");
}

#[test]
fn header_only_timeseries_draws_empty_axes() {
    let (_, dir) = written(&quick_disaster(10));
    fs::write(
        dir.path().join(export::TIMESERIES_FILE),
        format!("{}\n", export::TIMESERIES_HEADER),
    )
    .unwrap();
    emit_plots(dir.path()).unwrap();
    let svg = fs::read_to_string(dir.path().join(PLOT_DIR).join("fig1_opinions.svg")).unwrap();
    assert!(svg.contains("<line"));
    assert!(!svg.contains("polyline"));
}

#[test]
fn runs_without_snapshots_skip_the_matrix_figures() {
    let mut cfg = quick_disaster(10);
    cfg.snapshot_iterations.clear();
    let (_, dir) = written(&cfg);
    let names: Vec<_> = emit_plots(dir.path())
        .unwrap()
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.len(), 7);
    assert!(!names
        .iter()
        .any(|n| n.starts_with("fig7") || n.starts_with("fig8")));
}

#[test]
fn metrics_match_brute_force() {
    let cfg = support::small(5, 30, 77);
    let run = run_simulation(&cfg).unwrap();
    let s = &run.final_state;
    let m = compute_metrics(s);
    let mean_opinion = s.agents.iter().map(|a| a.opinion).sum::<f64>() / 5.0;
    let mut trust = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            if i != j {
                trust += s.trust.get(i, j);
            }
        }
    }
    assert!((m.avg_opinion - mean_opinion).abs() <= 1e-12);
    assert!((m.avg_trust - trust / 20.0).abs() <= 1e-12);
    for k in 0..8 {
        let mean = s
            .agents
            .iter()
            .map(|a| a.emotions.to_array()[k])
            .sum::<f64>()
            / 5.0;
        assert!((m.emotions.to_array()[k] - mean).abs() <= 1e-12);
    }
}

#[test]
fn metrics_ignore_agent_labels() {
    let cfg = support::small(7, 25, 5);
    let s = run_simulation(&cfg).unwrap().final_state;
    let perm = [3, 6, 0, 5, 1, 4, 2];
    let mut p = s.clone();
    p.agents = perm.iter().map(|&k| s.agents[k].clone()).collect();
    let rows: Vec<Vec<f64>> = perm
        .iter()
        .map(|&a| perm.iter().map(|&b| s.trust.get(a, b)).collect())
        .collect();
    p.trust = trustsim_core::TrustMatrix::from_rows(&rows);
    let (a, b) = (compute_metrics(&s), compute_metrics(&p));
    assert!(support::max_abs_diff(&a.values(), &b.values()) <= 1e-12);
}

#[test]
fn empty_run_logs_only_the_initial_state() {
    let mut cfg = ScenarioConfig::disaster();
    cfg.total_iterations = 0;
    cfg.events.clear();
    cfg.snapshot_iterations = vec![0];
    let (run, dir) = written(&cfg);
    assert_eq!(run.log.rows.len(), 1);
    let heat = read_matrix(&dir.path().join(export::EMOTION_HEATMAP_FILE)).unwrap();
    assert!(heat.iter().all(|r| r.len() == 1));
    write_matrix_snapshot(&[vec![0.5]], &dir.path().join("one.csv")).unwrap();
    assert_eq!(
        fs::read_to_string(dir.path().join("one.csv")).unwrap(),
        "0.500000000\n"
    );
}
