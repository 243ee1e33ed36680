//! Per-iteration population aggregates.

use crate::engine::SimulationState;
use crate::model::EmotionVector;

/// Population means at one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub iteration: u64,
    pub avg_opinion: f64,
    /// Mean off-diagonal trust; 1.0 for a single agent.
    pub avg_trust: f64,
    pub emotions: EmotionVector,
}

impl MetricsRow {
    /// Values in CSV column order, excluding `iteration`.
    pub fn values(&self) -> [f64; 10] {
        let e = self.emotions.to_array();
        let mut out = [0.0; 10];
        out[0] = self.avg_opinion;
        out[1] = self.avg_trust;
        out[2..].copy_from_slice(&e);
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsLog {
    pub rows: Vec<MetricsRow>,
}

pub fn compute_metrics(state: &SimulationState) -> MetricsRow {
    let n = state.agents.len().max(1) as f64;
    let avg_opinion = state.agents.iter().map(|a| a.opinion).sum::<f64>() / n;
    let mut sums = [0.0; 8];
    for a in &state.agents {
        for (s, v) in sums.iter_mut().zip(a.emotions.to_array()) {
            *s += v;
        }
    }
    MetricsRow {
        iteration: state.iteration,
        avg_opinion,
        avg_trust: state.trust.off_diagonal_mean().unwrap_or(1.0),
        emotions: EmotionVector::from_array(sums.map(|s| s / n)),
    }
}
