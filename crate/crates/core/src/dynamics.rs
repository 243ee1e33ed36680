//! Per-agent update rules.
//!
//! All functions are pure: they take values and return values. The engine
//! decides when each rule fires and which snapshot it sees.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::{CoefficientSet, Stimulus};
use crate::model::{
    clamp01, AgentId, Channel, EmotionVector, InteractionRecord, Memory, Personality,
};

/// What a trustor knows about a prospective trustee when deciding whether a
/// trust gain is rationally licensed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GateContext {
    /// Affectionate relationship: a friendship edge joins the pair.
    pub friendship_edge: bool,
    /// Shared benefit: both served the same primary area last iteration.
    pub shared_area_last_step: bool,
    pub partner_integrity: f64,
    pub monitoring_enabled: bool,
    pub partner_monitored: bool,
    /// `(positive_count, total_count)` of remembered interactions.
    pub history: (usize, usize),
}

/// Gate factor applied to trust increases.
///
/// Full gate (1.0) when the pair is friends, shares a benefit, the partner
/// meets the integrity threshold, or the partner is monitored. Historical
/// reliability alone yields `c_h`. Anything else yields `γ_penalty`.
pub fn rational_gate(ctx: &GateContext, coeffs: &CoefficientSet) -> f64 {
    let strong = ctx.friendship_edge
        || ctx.shared_area_last_step
        || ctx.partner_integrity >= coeffs.integrity_threshold
        || (ctx.monitoring_enabled && ctx.partner_monitored);
    if strong {
        return 1.0;
    }
    let (positive, total) = ctx.history;
    let reliable = total >= coeffs.min_history
        && total > 0
        && positive as f64 / total as f64 >= coeffs.reliability_threshold;
    if reliable {
        coeffs.history_certainty
    } else {
        coeffs.ungated_gain
    }
}

/// Alignment of two opinions: 1 when equal, -1 at opposite ends of the scale.
#[inline]
pub fn trust_feedback(own: f64, other: f64) -> f64 {
    1.0 - 2.0 * (own - other).abs()
}

/// Moves trust by `rate * feedback`. Gains are scaled by `gate`; losses never are.
#[inline]
pub fn update_trust(trust: f64, feedback: f64, gate: f64, rate: f64) -> f64 {
    if feedback >= 0.0 {
        clamp01(trust + rate * feedback * gate)
    } else {
        clamp01(trust + rate * feedback)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Averaging,
    Contrarian,
    Stubborn,
}

/// Trust-weighted mean of peer opinions; unweighted if every weight is zero.
pub fn peer_mean(peers: &[(f64, f64)]) -> Option<f64> {
    if peers.is_empty() {
        return None;
    }
    let total: f64 = peers.iter().map(|&(_, w)| w).sum();
    if total > 0.0 {
        Some(peers.iter().map(|&(o, w)| o * w).sum::<f64>() / total)
    } else {
        Some(peers.iter().map(|&(o, _)| o).sum::<f64>() / peers.len() as f64)
    }
}

/// One opinion update. `peers` holds `(opinion, trust weight)` pairs.
/// Averaging and Contrarian fall back to Stubborn when `peers` is empty.
pub fn update_opinion(
    opinion: f64,
    peers: &[(f64, f64)],
    strategy: Strategy,
    alpha: f64,
    noise: f64,
) -> f64 {
    match (strategy, peer_mean(peers)) {
        (Strategy::Averaging, Some(m)) => clamp01((1.0 - alpha) * opinion + alpha * m + noise),
        (Strategy::Contrarian, Some(m)) => clamp01(opinion - alpha * (m - opinion) + noise),
        _ => clamp01(opinion + noise),
    }
}

/// Summed stimulus per channel, in [`Channel::ALL`] order.
fn stimulus_totals(stimuli: &[Stimulus]) -> [f64; 8] {
    let mut totals = [0.0; 8];
    for s in stimuli {
        totals[s.channel.index()] += s.magnitude;
    }
    totals
}

/// Decay toward baseline plus stimulus, with each stimulus suppressing the
/// opposite emotion. Neurotic agents react more strongly.
pub fn update_emotions(
    emotions: &EmotionVector,
    stimuli: &[Stimulus],
    coeffs: &CoefficientSet,
    neuroticism: f64,
) -> EmotionVector {
    let gain = 1.0 + coeffs.neuroticism_gain * neuroticism;
    let current = emotions.to_array();
    let baseline = coeffs.emotion_baseline.to_array();
    let totals = stimulus_totals(stimuli);
    let next = std::array::from_fn(|k| {
        let opp = Channel::ALL[k].opposite().index();
        current[k] + coeffs.emotion_decay * (baseline[k] - current[k]) + gain * totals[k]
            - coeffs.opposite_coupling * gain * totals[opp]
    });
    EmotionVector::from_array(next)
}

/// Emotional response to one interaction's feedback.
pub fn interaction_stimuli(feedback: f64, gain: f64) -> Vec<Stimulus> {
    if feedback > 0.0 {
        vec![
            Stimulus::new(Channel::Joy, feedback * gain),
            Stimulus::new(Channel::TrustE, feedback * gain),
        ]
    } else if feedback < 0.0 {
        let m = feedback.abs() * gain;
        vec![
            Stimulus::new(Channel::Sadness, m),
            Stimulus::new(Channel::Anger, m),
        ]
    } else {
        Vec::new()
    }
}

/// Keeps the first `capacity` requests in arrival order and reports overload.
pub fn cognitive_filter<T>(incoming: &[T], capacity: usize) -> (&[T], bool) {
    let capacity = capacity.max(1);
    let kept = &incoming[..incoming.len().min(capacity)];
    (kept, incoming.len() > capacity)
}

/// Selection-propensity multiplier toward `partner`: `1 + β·max(0, mean feedback)`.
pub fn propensity(memory: &Memory, partner: AgentId, learning_gain: f64) -> f64 {
    let mean = memory.mean_feedback(partner).unwrap_or(0.0);
    1.0 + learning_gain * mean.max(0.0)
}

/// Stores the interaction and returns the updated propensity toward `partner`.
pub fn record_and_learn(
    memory: &mut Memory,
    partner: AgentId,
    feedback: f64,
    iteration: u64,
    coeffs: &CoefficientSet,
) -> f64 {
    memory.push(InteractionRecord {
        partner,
        feedback,
        iteration,
    });
    propensity(memory, partner, coeffs.learning_gain)
}

/// Personality-derived behaviour for one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Behaviour {
    pub conformity: f64,
    pub contrarian_probability: f64,
    pub noise_scale: f64,
    pub initiations: usize,
}

/// Maps traits to behaviour. Overload halves conformity and doubles noise.
///
/// Conscientiousness has no effect yet; no mechanism for it is defined.
pub fn behaviour(p: &Personality, coeffs: &CoefficientSet, overloaded: bool) -> Behaviour {
    let mut conformity = coeffs.conformity * p.agreeableness;
    let mut noise_scale = coeffs.opinion_noise * (0.5 + p.neuroticism);
    if overloaded {
        conformity *= 0.5;
        noise_scale *= 2.0;
    }
    Behaviour {
        conformity,
        contrarian_probability: coeffs.contrarian_probability
            * (1.0 - p.agreeableness)
            * p.openness,
        noise_scale,
        initiations: 1 + (2.0 * p.extraversion).round() as usize,
    }
}

/// Draws a strategy from one uniform variate.
pub fn choose_strategy<R: Rng + ?Sized>(rng: &mut R, contrarian_probability: f64) -> Strategy {
    let u: f64 = rng.random();
    if u < contrarian_probability {
        Strategy::Contrarian
    } else {
        Strategy::Averaging
    }
}

/// Zero-mean normal noise truncated at ±3 standard deviations.
///
/// Always consumes the same variates for a given stream regardless of
/// `scale`, so turning noise off does not shift later draws.
pub fn truncated_noise<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() <= 3.0 {
            return scale * z;
        }
    }
}
