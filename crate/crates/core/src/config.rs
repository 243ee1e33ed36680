//! Scenario configuration, its JSON form, and invariant checking.
//!
//! Coefficient keys in JSON use their short symbolic names (`"η"`, `"λ"`,
//! ...). ASCII aliases (`"eta"`, `"lambda"`, ...) are accepted on input.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::model::{Channel, EmotionVector, Personality};

/// Friendship-graph family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Topology {
    Complete,
    PreferentialAttachment { m: usize },
    Tree { branching: usize },
}

/// A `(channel, magnitude)` emotion stimulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    pub channel: Channel,
    pub magnitude: f64,
}

impl Stimulus {
    pub fn new(channel: Channel, magnitude: f64) -> Self {
        Self { channel, magnitude }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// Shift the opinion of `ceil(fraction * n)` sampled agents by `delta`.
    OpinionShock { delta: f64, fraction: f64 },
    /// Replace the area urgency vector.
    UrgencyShift { urgency: Vec<f64> },
    /// Multiply every off-diagonal trust entry by `factor`.
    TrustShock { factor: f64 },
}

/// External perturbation fired at the start of `iteration`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub iteration: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub kind: EventKind,
    #[serde(default)]
    pub emotion_stimulus: Vec<Stimulus>,
}

/// Every tunable coefficient of the update rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoefficientSet {
    /// Conformity weight, scaled per agent by agreeableness.
    #[serde(rename = "α_base", alias = "alpha_base")]
    pub conformity: f64,
    #[serde(rename = "p_contrarian")]
    pub contrarian_probability: f64,
    #[serde(rename = "η", alias = "eta")]
    pub trust_rate: f64,
    /// Gate value applied to trust gains no rational scenario licenses.
    #[serde(rename = "γ_penalty", alias = "gamma_penalty")]
    pub ungated_gain: f64,
    #[serde(rename = "λ", alias = "lambda")]
    pub emotion_decay: f64,
    #[serde(rename = "ρ", alias = "rho")]
    pub opposite_coupling: f64,
    #[serde(rename = "ν", alias = "nu")]
    pub neuroticism_gain: f64,
    #[serde(rename = "σ_noise", alias = "sigma_noise")]
    pub opinion_noise: f64,
    #[serde(rename = "θ_m", alias = "theta_m")]
    pub integrity_threshold: f64,
    #[serde(rename = "θ_h", alias = "theta_h")]
    pub reliability_threshold: f64,
    #[serde(rename = "n_min")]
    pub min_history: usize,
    /// Gate value when only historical reliability holds.
    #[serde(rename = "c_h", alias = "history_certainty")]
    pub history_certainty: f64,
    #[serde(rename = "C", alias = "capacity")]
    pub capacity: usize,
    #[serde(rename = "M", alias = "memory_capacity")]
    pub memory_capacity: usize,
    #[serde(rename = "β", alias = "beta")]
    pub learning_gain: f64,
    #[serde(rename = "μ", alias = "mu")]
    pub priority_coupling: f64,
    #[serde(rename = "κ_baseline", alias = "kappa_baseline")]
    pub emotion_baseline: EmotionVector,
    /// Emotion stimulus per unit of interaction feedback.
    #[serde(rename = "s_gain")]
    pub stimulus_gain: f64,
}

impl Default for CoefficientSet {
    fn default() -> Self {
        Self {
            conformity: 0.3,
            contrarian_probability: 0.2,
            trust_rate: 0.05,
            ungated_gain: 0.0,
            emotion_decay: 0.05,
            opposite_coupling: 0.5,
            neuroticism_gain: 0.5,
            opinion_noise: 0.01,
            integrity_threshold: 0.6,
            reliability_threshold: 0.7,
            min_history: 3,
            history_certainty: 0.5,
            capacity: 5,
            memory_capacity: 50,
            learning_gain: 1.0,
            priority_coupling: 1.0,
            emotion_baseline: EmotionVector::splat(0.3),
            stimulus_gain: 0.1,
        }
    }
}

fn default_budget() -> f64 {
    10.0
}

fn default_initial_trust() -> [f64; 2] {
    [0.4, 0.6]
}

/// Complete description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_agents: usize,
    pub n_areas: usize,
    pub total_iterations: u64,
    pub topology: Topology,
    pub base_urgency: Vec<f64>,
    /// Per-agent area priorities; drawn uniformly on `[0, 1]` when absent.
    #[serde(default)]
    pub priorities: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub coefficients: CoefficientSet,
    #[serde(default)]
    pub events: Vec<EventSpec>,
    #[serde(default)]
    pub snapshot_iterations: Vec<u64>,
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: f64,
    /// Initial off-diagonal trust is drawn uniformly from `[min, max]`.
    #[serde(default = "default_initial_trust")]
    pub initial_trust: [f64; 2],
    /// Per-agent personality override; drawn uniformly when absent.
    #[serde(default)]
    pub personalities: Option<Vec<Personality>>,
    #[serde(default)]
    pub monitoring_enabled: bool,
    /// Probability that an agent is monitored.
    #[serde(default)]
    pub monitored_fraction: f64,
}

/// One violated invariant, addressed by its JSON field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.out.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    fn unit(&mut self, path: impl Into<String>, v: f64) {
        if !(0.0..=1.0).contains(&v) {
            self.push(path, format!("must be in [0, 1], got {v}"));
        }
    }

    fn non_negative(&mut self, path: impl Into<String>, v: f64) {
        if !(v.is_finite() && v >= 0.0) {
            self.push(path, format!("must be finite and >= 0, got {v}"));
        }
    }

    fn at_least_one(&mut self, path: impl Into<String>, v: usize) {
        if v < 1 {
            self.push(path, format!("must be >= 1, got {v}"));
        }
    }
}

/// Returns every violated invariant. An empty list means the config is valid.
pub fn validate_config(cfg: &ScenarioConfig) -> Vec<Violation> {
    let mut c = Checker { out: Vec::new() };

    c.at_least_one("n_agents", cfg.n_agents);
    c.at_least_one("n_areas", cfg.n_areas);

    match cfg.topology {
        Topology::Complete => {}
        Topology::PreferentialAttachment { m } => {
            // An empty population is already reported above.
            if cfg.n_agents >= 1 && (m < 1 || m >= cfg.n_agents) {
                c.push(
                    "topology.m",
                    format!("must satisfy 1 <= m < n_agents ({}), got {m}", cfg.n_agents),
                );
            }
        }
        Topology::Tree { branching } => c.at_least_one("topology.branching", branching),
    }

    if cfg.base_urgency.len() != cfg.n_areas {
        c.push(
            "base_urgency",
            format!(
                "expected {} entries, got {}",
                cfg.n_areas,
                cfg.base_urgency.len()
            ),
        );
    }
    for (a, &u) in cfg.base_urgency.iter().enumerate() {
        c.non_negative(format!("base_urgency[{a}]"), u);
    }

    if let Some(pri) = &cfg.priorities {
        if pri.len() != cfg.n_agents {
            c.push(
                "priorities",
                format!("expected {} rows, got {}", cfg.n_agents, pri.len()),
            );
        }
        for (i, row) in pri.iter().enumerate() {
            if row.len() != cfg.n_areas {
                c.push(
                    format!("priorities[{i}]"),
                    format!("expected {} entries, got {}", cfg.n_areas, row.len()),
                );
            }
            for (a, &w) in row.iter().enumerate() {
                c.non_negative(format!("priorities[{i}][{a}]"), w);
            }
        }
    }

    if let Some(ps) = &cfg.personalities {
        if ps.len() != cfg.n_agents {
            c.push(
                "personalities",
                format!("expected {} entries, got {}", cfg.n_agents, ps.len()),
            );
        }
        const TRAITS: [&str; 5] = [
            "openness",
            "conscientiousness",
            "extraversion",
            "agreeableness",
            "neuroticism",
        ];
        for (i, p) in ps.iter().enumerate() {
            for (name, v) in TRAITS.iter().zip(p.to_array()) {
                c.unit(format!("personalities[{i}].{name}"), v);
            }
        }
    }

    let k = &cfg.coefficients;
    c.unit("coefficients.α_base", k.conformity);
    c.unit("coefficients.p_contrarian", k.contrarian_probability);
    c.unit("coefficients.η", k.trust_rate);
    c.unit("coefficients.γ_penalty", k.ungated_gain);
    c.unit("coefficients.λ", k.emotion_decay);
    c.unit("coefficients.ρ", k.opposite_coupling);
    c.non_negative("coefficients.ν", k.neuroticism_gain);
    c.non_negative("coefficients.σ_noise", k.opinion_noise);
    c.unit("coefficients.θ_m", k.integrity_threshold);
    c.unit("coefficients.θ_h", k.reliability_threshold);
    c.at_least_one("coefficients.n_min", k.min_history);
    c.unit("coefficients.c_h", k.history_certainty);
    c.at_least_one("coefficients.C", k.capacity);
    c.at_least_one("coefficients.M", k.memory_capacity);
    c.non_negative("coefficients.β", k.learning_gain);
    c.non_negative("coefficients.μ", k.priority_coupling);
    c.non_negative("coefficients.s_gain", k.stimulus_gain);
    for ch in Channel::ALL {
        c.unit(
            format!("coefficients.κ_baseline.{ch}"),
            k.emotion_baseline.get(ch),
        );
    }

    for (e, ev) in cfg.events.iter().enumerate() {
        let p = format!("events[{e}]");
        if ev.iteration > cfg.total_iterations {
            c.push(
                format!("{p}.iteration"),
                format!(
                    "must be <= total_iterations ({}), got {}",
                    cfg.total_iterations, ev.iteration
                ),
            );
        }
        match &ev.kind {
            EventKind::OpinionShock { delta, fraction } => {
                if !delta.is_finite() {
                    c.push(format!("{p}.delta"), "must be finite");
                }
                c.unit(format!("{p}.fraction"), *fraction);
            }
            EventKind::UrgencyShift { urgency } => {
                if urgency.len() != cfg.n_areas {
                    c.push(
                        format!("{p}.urgency"),
                        format!("expected {} entries, got {}", cfg.n_areas, urgency.len()),
                    );
                }
                for (a, &u) in urgency.iter().enumerate() {
                    c.non_negative(format!("{p}.urgency[{a}]"), u);
                }
            }
            EventKind::TrustShock { factor } => c.non_negative(format!("{p}.factor"), *factor),
        }
        for (s, st) in ev.emotion_stimulus.iter().enumerate() {
            c.non_negative(format!("{p}.emotion_stimulus[{s}].magnitude"), st.magnitude);
        }
    }

    for (s, &it) in cfg.snapshot_iterations.iter().enumerate() {
        if it > cfg.total_iterations {
            c.push(
                format!("snapshot_iterations[{s}]"),
                format!(
                    "must be <= total_iterations ({}), got {it}",
                    cfg.total_iterations
                ),
            );
        }
    }

    c.non_negative("budget", cfg.budget);
    let [lo, hi] = cfg.initial_trust;
    c.unit("initial_trust[0]", lo);
    c.unit("initial_trust[1]", hi);
    if lo > hi {
        c.push("initial_trust", format!("min {lo} exceeds max {hi}"));
    }
    c.unit("monitored_fraction", cfg.monitored_fraction);

    c.out
}

impl ScenarioConfig {
    /// The bundled disaster-response scenario: 20 organisations, 5 areas,
    /// 5000 iterations, a news event at 2500 and an environmental change
    /// at 4000.
    pub fn disaster() -> Self {
        Self {
            n_agents: 20,
            n_areas: 5,
            total_iterations: 5000,
            topology: Topology::PreferentialAttachment { m: 2 },
            base_urgency: vec![5.0, 4.0, 3.0, 2.0, 1.0],
            priorities: None,
            coefficients: CoefficientSet::default(),
            events: vec![
                EventSpec {
                    iteration: 2500,
                    label: Some("News Event".into()),
                    kind: EventKind::OpinionShock {
                        delta: 0.15,
                        fraction: 0.5,
                    },
                    emotion_stimulus: vec![
                        Stimulus::new(Channel::Fear, 0.3),
                        Stimulus::new(Channel::Surprise, 0.3),
                    ],
                },
                EventSpec {
                    iteration: 4000,
                    label: Some("Environmental Change".into()),
                    kind: EventKind::UrgencyShift {
                        urgency: vec![1.0, 5.0, 4.0, 3.0, 2.0],
                    },
                    emotion_stimulus: vec![Stimulus::new(Channel::Anticipation, 0.3)],
                },
            ],
            snapshot_iterations: vec![750, 4000],
            seed: 42,
            budget: default_budget(),
            initial_trust: default_initial_trust(),
            personalities: None,
            monitoring_enabled: true,
            monitored_fraction: 0.25,
        }
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Reads a config file. Unreadable files and malformed JSON are errors;
    /// invariant violations are not checked here.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|source| SimError::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}
