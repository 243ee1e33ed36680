#![allow(dead_code)]

pub mod oracle;

use trustsim_core::{ScenarioConfig, Topology};

/// Small event-free scenario on `n` agents.
pub fn small(n: usize, iterations: u64, seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::disaster();
    cfg.n_agents = n;
    cfg.n_areas = 3;
    cfg.base_urgency = vec![3.0, 2.0, 1.0];
    cfg.total_iterations = iterations;
    cfg.topology = Topology::Complete;
    cfg.events.clear();
    cfg.snapshot_iterations.clear();
    cfg.seed = seed;
    cfg
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
