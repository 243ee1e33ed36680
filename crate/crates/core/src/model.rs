//! Value types for agent and population state.
//!
//! Everything here is plain data. Range invariants are enforced by clamping
//! at the mutation points (`TrustMatrix::set`, `EmotionVector::set`, ...),
//! never by rejecting values.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Index of an agent in the population, `0..n`.
pub type AgentId = usize;

/// Clamp a finite value into `[0, 1]`.
///
/// Non-finite input is a programming fault and panics in debug builds.
#[inline]
pub fn clamp01(x: f64) -> f64 {
    debug_assert!(x.is_finite(), "clamp01 called with non-finite value {x}");
    x.clamp(0.0, 1.0)
}

/// The eight primary emotions, in export order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Joy,
    TrustE,
    Fear,
    Surprise,
    Sadness,
    Disgust,
    Anger,
    Anticipation,
}

impl Channel {
    pub const ALL: [Channel; 8] = [
        Channel::Joy,
        Channel::TrustE,
        Channel::Fear,
        Channel::Surprise,
        Channel::Sadness,
        Channel::Disgust,
        Channel::Anger,
        Channel::Anticipation,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    /// Opposite emotion on the wheel: joy/sadness, trust/disgust,
    /// fear/anger, surprise/anticipation.
    #[inline]
    pub fn opposite(self) -> Channel {
        Channel::ALL[(self.index() + 4) % 8]
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Joy => "joy",
            Channel::TrustE => "trust_e",
            Channel::Fear => "fear",
            Channel::Surprise => "surprise",
            Channel::Sadness => "sadness",
            Channel::Disgust => "disgust",
            Channel::Anger => "anger",
            Channel::Anticipation => "anticipation",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Eight emotion intensities, each in `[0, 1]`.
///
/// `trust_e` is the felt *emotion* of trust and has nothing to do with the
/// relational [`TrustMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionVector {
    pub joy: f64,
    pub trust_e: f64,
    pub fear: f64,
    pub surprise: f64,
    pub sadness: f64,
    pub disgust: f64,
    pub anger: f64,
    pub anticipation: f64,
}

impl EmotionVector {
    pub fn splat(v: f64) -> Self {
        Self::from_array([v; 8])
    }

    /// Builds a vector from values in [`Channel::ALL`] order, clamping each.
    pub fn from_array(v: [f64; 8]) -> Self {
        let v = v.map(clamp01);
        Self {
            joy: v[0],
            trust_e: v[1],
            fear: v[2],
            surprise: v[3],
            sadness: v[4],
            disgust: v[5],
            anger: v[6],
            anticipation: v[7],
        }
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.joy,
            self.trust_e,
            self.fear,
            self.surprise,
            self.sadness,
            self.disgust,
            self.anger,
            self.anticipation,
        ]
    }

    pub fn get(&self, channel: Channel) -> f64 {
        self.to_array()[channel.index()]
    }

    pub fn set(&mut self, channel: Channel, value: f64) {
        let mut v = self.to_array();
        v[channel.index()] = value;
        *self = Self::from_array(v);
    }
}

impl Default for EmotionVector {
    fn default() -> Self {
        Self::splat(0.3)
    }
}

/// Big Five traits, each in `[0, 1]`. Fixed for the lifetime of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Personality {
    pub openness: f64,
    pub conscientiousness: f64,
    pub extraversion: f64,
    pub agreeableness: f64,
    pub neuroticism: f64,
}

impl Personality {
    pub fn to_array(&self) -> [f64; 5] {
        [
            self.openness,
            self.conscientiousness,
            self.extraversion,
            self.agreeableness,
            self.neuroticism,
        ]
    }
}

/// One remembered interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub partner: AgentId,
    /// Alignment score in `[-1, 1]`.
    pub feedback: f64,
    pub iteration: u64,
}

/// Bounded FIFO of interaction records. The oldest record is evicted first.
#[derive(Debug, Clone, PartialEq)]
pub struct Memory {
    capacity: usize,
    records: VecDeque<InteractionRecord>,
}

impl Memory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "memory capacity must be at least 1");
        Self {
            capacity,
            records: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &InteractionRecord> {
        self.records.iter()
    }

    pub fn push(&mut self, mut record: InteractionRecord) {
        record.feedback = record.feedback.clamp(-1.0, 1.0);
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(record);
    }

    /// `(positive_count, total_count)` of remembered interactions with `partner`.
    pub fn history(&self, partner: AgentId) -> (usize, usize) {
        self.records
            .iter()
            .filter(|r| r.partner == partner)
            .fold((0, 0), |(pos, total), r| {
                (pos + usize::from(r.feedback > 0.0), total + 1)
            })
    }

    /// Mean remembered feedback from `partner`, if any record exists.
    pub fn mean_feedback(&self, partner: AgentId) -> Option<f64> {
        let (sum, count) = self
            .records
            .iter()
            .filter(|r| r.partner == partner)
            .fold((0.0, 0usize), |(s, c), r| (s + r.feedback, c + 1));
        (count > 0).then(|| sum / count as f64)
    }
}

/// Full state of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: AgentId,
    /// Position on the urgency consensus scale, `[0, 1]`.
    pub opinion: f64,
    pub emotions: EmotionVector,
    pub personality: Personality,
    pub moral_integrity: f64,
    pub memory: Memory,
    /// Resource units distributed per iteration.
    pub budget: f64,
    /// Mean incoming trust, `[0, 1]`.
    pub reputation: f64,
    /// Set when incoming requests exceeded cognitive capacity this iteration.
    pub overloaded: bool,
    /// Per-area priority weights.
    pub priorities: Vec<f64>,
    /// Whether this agent's conduct is observed by a monitoring mechanism.
    pub monitored: bool,
}

/// Directed trust levels. Entry `(i, j)` is the trust agent `i` places in `j`.
///
/// The diagonal is pinned at 1.0 and ignored by every aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustMatrix {
    n: usize,
    values: Vec<f64>,
}

impl TrustMatrix {
    /// Matrix with every off-diagonal entry set to `fill`.
    pub fn new(n: usize, fill: f64) -> Self {
        let mut m = Self {
            n,
            values: vec![clamp01(fill); n * n],
        };
        for i in 0..n {
            m.values[i * n + i] = 1.0;
        }
        m
    }

    /// Builds from row-major rows. Panics on a non-square grid.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::new(n, 0.0);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "trust matrix must be square");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: AgentId, j: AgentId) -> f64 {
        self.values[i * self.n + j]
    }

    /// Sets an off-diagonal entry, clamped to `[0, 1]`. Diagonal writes are ignored.
    #[inline]
    pub fn set(&mut self, i: AgentId, j: AgentId, value: f64) {
        if i != j {
            self.values[i * self.n + j] = clamp01(value);
        }
    }

    /// Iterates `(i, j, value)` over off-diagonal entries in row-major order.
    pub fn off_diagonal(&self) -> impl Iterator<Item = (AgentId, AgentId, f64)> + '_ {
        let n = self.n;
        self.values
            .iter()
            .enumerate()
            .filter(move |(k, _)| k / n != k % n)
            .map(move |(k, &v)| (k / n, k % n, v))
    }

    /// Mean of off-diagonal entries, or `None` for a single agent.
    pub fn off_diagonal_mean(&self) -> Option<f64> {
        if self.n < 2 {
            return None;
        }
        let sum: f64 = self.off_diagonal().map(|(_, _, v)| v).sum();
        Some(sum / (self.n * (self.n - 1)) as f64)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values
            .chunks(self.n.max(1))
            .map(<[f64]>::to_vec)
            .take(self.n)
            .collect()
    }
}
