//! The simulation loop.
//!
//! Iterations are numbered from 1. The state after `k` steps has
//! `iteration == k`; iteration 0 is the initial state. Events scheduled for
//! iteration `k` fire at the start of step `k`, and events scheduled for 0
//! fire during initialisation.
//!
//! Each step runs a fixed phase order:
//!
//! 1. scheduled events
//! 2. partner selection, agents in ascending id order
//! 3. cognitive filtering of each agent's incoming requests
//! 4. feedback for each accepted interaction, from start-of-step opinions
//! 5. synchronous opinion updates from the same snapshot
//! 6. gated trust updates, both directions of every interaction
//! 7. memory recording
//! 8. emotion updates from interaction stimuli
//! 9. resource allocation
//! 10. reputation recomputation
//!
//! The metrics hook (phase 11) is the observer passed to
//! [`run_simulation_with`].

use std::collections::BTreeSet;

use rand::Rng;

use crate::config::{validate_config, EventKind, EventSpec, ScenarioConfig};
use crate::dynamics::{
    behaviour, choose_strategy, cognitive_filter, interaction_stimuli, propensity, rational_gate,
    record_and_learn, truncated_noise, trust_feedback, update_emotions, update_opinion,
    update_trust, GateContext,
};
use crate::error::{Result, SimError};
use crate::metrics::{compute_metrics, MetricsLog};
use crate::model::{clamp01, AgentId, AgentState, Memory, Personality, TrustMatrix};
use crate::network::{
    compute_reputation, generate_topology, influence_network, select_partners, Graph,
    InfluenceNetwork,
};
use crate::rng::{derive_stream, Stream, INIT, LOOP, TOPOLOGY};

/// Resources per area per agent for one iteration. `values[area][agent]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationMap {
    pub values: Vec<Vec<f64>>,
}

impl AllocationMap {
    pub fn from_columns(columns: &[Vec<f64>], n_areas: usize) -> Self {
        let values = (0..n_areas)
            .map(|a| columns.iter().map(|c| c[a]).collect())
            .collect();
        Self { values }
    }

    pub fn n_areas(&self) -> usize {
        self.values.len()
    }

    pub fn column(&self, agent: AgentId) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(move |row| row[agent])
    }

    pub fn column_sum(&self, agent: AgentId) -> f64 {
        self.column(agent).sum()
    }

    /// Area receiving the largest share from `agent`; ties go to the lowest index.
    pub fn primary_area(&self, agent: AgentId) -> usize {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (a, v) in self.column(agent).enumerate() {
            if v > best_v {
                best = a;
                best_v = v;
            }
        }
        best
    }
}

/// Splits `agent.budget` across areas in proportion to
/// `urgency_a · (1 + μ · opinion · priority_a)`; uniformly if every value is zero.
pub fn allocate_resources(agent: &AgentState, urgency: &[f64], priority_coupling: f64) -> Vec<f64> {
    let values: Vec<f64> = urgency
        .iter()
        .zip(&agent.priorities)
        .map(|(&u, &p)| u * (1.0 + priority_coupling * agent.opinion * p))
        .collect();
    let total: f64 = values.iter().sum();
    if total > 0.0 {
        values.iter().map(|v| agent.budget * v / total).collect()
    } else {
        vec![agent.budget / urgency.len() as f64; urgency.len()]
    }
}

/// Everything that evolves during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub iteration: u64,
    pub agents: Vec<AgentState>,
    pub trust: TrustMatrix,
    pub graph: Graph,
    pub urgency: Vec<f64>,
    /// Allocation chosen in the most recent iteration.
    pub allocation: AllocationMap,
    pub rng: Stream,
}

/// One accepted interaction of a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    pub initiator: AgentId,
    pub recipient: AgentId,
    pub feedback: f64,
}

/// What a step observed, for instrumentation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepTrace {
    /// Opinions after events, before any dynamics.
    pub start_opinions: Vec<f64>,
    pub interactions: Vec<Interaction>,
    pub overloaded: Vec<bool>,
}

impl SimulationState {
    /// Builds the initial state. Iteration-0 events are applied before the
    /// first allocation.
    pub fn initialize(cfg: &ScenarioConfig) -> Result<Self> {
        let violations = validate_config(cfg);
        if !violations.is_empty() {
            return Err(SimError::InvalidConfig(violations));
        }
        let n = cfg.n_agents;
        let coeffs = &cfg.coefficients;
        let graph = generate_topology(cfg.topology, n, &mut derive_stream(cfg.seed, TOPOLOGY))?;

        let mut init = derive_stream(cfg.seed, INIT);
        let mut agents = Vec::with_capacity(n);
        for id in 0..n {
            let opinion: f64 = init.random();
            let personality = match &cfg.personalities {
                Some(ps) => ps[id],
                None => Personality {
                    openness: init.random(),
                    conscientiousness: init.random(),
                    extraversion: init.random(),
                    agreeableness: init.random(),
                    neuroticism: init.random(),
                },
            };
            let moral_integrity: f64 = init.random();
            let priorities = match &cfg.priorities {
                Some(p) => p[id].clone(),
                None => (0..cfg.n_areas).map(|_| init.random()).collect(),
            };
            let monitored = init.random::<f64>() < cfg.monitored_fraction;
            agents.push(AgentState {
                id,
                opinion,
                emotions: coeffs.emotion_baseline,
                personality,
                moral_integrity,
                memory: Memory::new(coeffs.memory_capacity),
                budget: cfg.budget,
                reputation: 1.0,
                overloaded: false,
                priorities,
                monitored,
            });
        }

        let [lo, hi] = cfg.initial_trust;
        let mut trust = TrustMatrix::new(n, lo);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    trust.set(i, j, lo + (hi - lo) * init.random::<f64>());
                }
            }
        }

        let mut state = Self {
            iteration: 0,
            agents,
            trust,
            graph,
            urgency: cfg.base_urgency.clone(),
            allocation: AllocationMap { values: Vec::new() },
            rng: derive_stream(cfg.seed, LOOP),
        };
        for ev in cfg.events.iter().filter(|e| e.iteration == 0) {
            apply_event(&mut state, ev, cfg)?;
        }
        state.reallocate(cfg);
        state.refresh_reputation();
        Ok(state)
    }

    fn reallocate(&mut self, cfg: &ScenarioConfig) {
        let columns: Vec<Vec<f64>> = self
            .agents
            .iter()
            .map(|a| allocate_resources(a, &self.urgency, cfg.coefficients.priority_coupling))
            .collect();
        self.allocation = AllocationMap::from_columns(&columns, cfg.n_areas);
    }

    fn refresh_reputation(&mut self) {
        for (agent, rep) in self.agents.iter_mut().zip(compute_reputation(&self.trust)) {
            agent.reputation = rep;
        }
    }

    pub fn opinions(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.opinion).collect()
    }
}

/// Applies one event. The event must be scheduled for the current iteration.
pub fn apply_event(
    state: &mut SimulationState,
    ev: &EventSpec,
    cfg: &ScenarioConfig,
) -> Result<()> {
    if ev.iteration != state.iteration {
        return Err(SimError::Scheduler(format!(
            "event for iteration {} applied at iteration {}",
            ev.iteration, state.iteration
        )));
    }
    let n = state.agents.len();
    match &ev.kind {
        EventKind::OpinionShock { delta, fraction } => {
            let count = ((fraction * n as f64).ceil() as usize).min(n);
            let mut targets = rand::seq::index::sample(&mut state.rng, n, count).into_vec();
            targets.sort_unstable();
            for i in targets {
                let a = &mut state.agents[i];
                a.opinion = clamp01(a.opinion + delta);
            }
        }
        EventKind::UrgencyShift { urgency } => state.urgency = urgency.clone(),
        EventKind::TrustShock { factor } => {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let t = state.trust.get(i, j);
                        state.trust.set(i, j, t * factor);
                    }
                }
            }
        }
    }
    if !ev.emotion_stimulus.is_empty() {
        for a in &mut state.agents {
            a.emotions = update_emotions(
                &a.emotions,
                &ev.emotion_stimulus,
                &cfg.coefficients,
                a.personality.neuroticism,
            );
        }
    }
    Ok(())
}

/// Advances the state by one iteration.
pub fn step(state: &mut SimulationState, cfg: &ScenarioConfig) -> Result<StepTrace> {
    if state.iteration >= cfg.total_iterations {
        return Err(SimError::Scheduler(format!(
            "cannot step past iteration {}",
            cfg.total_iterations
        )));
    }
    state.iteration += 1;
    let now = state.iteration;
    let coeffs = &cfg.coefficients;
    let n = state.agents.len();

    // (1)
    for ev in cfg.events.iter().filter(|e| e.iteration == now) {
        apply_event(state, ev, cfg)?;
    }
    let start = state.opinions();

    // (2) requests in arrival order: initiator ascending, then pick order.
    let mut requests: Vec<(AgentId, AgentId)> = Vec::new();
    let mut incoming: Vec<Vec<AgentId>> = vec![Vec::new(); n];
    for i in 0..n {
        let agent = &state.agents[i];
        let k = behaviour(&agent.personality, coeffs, false).initiations;
        let props: Vec<f64> = (0..n)
            .map(|j| propensity(&agent.memory, j, coeffs.learning_gain))
            .collect();
        for j in select_partners(i, &state.graph, &props, k, &mut state.rng) {
            requests.push((i, j));
            incoming[j].push(i);
        }
    }

    // (3)
    let mut accepted_per = vec![0usize; n];
    let mut overloaded = vec![false; n];
    for j in 0..n {
        let (kept, over) = cognitive_filter(&incoming[j], coeffs.capacity);
        accepted_per[j] = kept.len();
        overloaded[j] = over;
    }
    let mut seen = vec![0usize; n];
    let mut interactions = Vec::new();
    for &(i, j) in &requests {
        if seen[j] < accepted_per[j] {
            // (4)
            interactions.push(Interaction {
                initiator: i,
                recipient: j,
                feedback: trust_feedback(start[i], start[j]),
            });
        }
        seen[j] += 1;
    }

    // (5)
    let mut peers: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    for it in &interactions {
        let (a, b) = (it.initiator, it.recipient);
        peers[a].push((start[b], state.trust.get(a, b)));
        peers[b].push((start[a], state.trust.get(b, a)));
    }
    let mut next = vec![0.0; n];
    for i in 0..n {
        let b = behaviour(&state.agents[i].personality, coeffs, overloaded[i]);
        let strategy = choose_strategy(&mut state.rng, b.contrarian_probability);
        let noise = truncated_noise(&mut state.rng, b.noise_scale);
        next[i] = update_opinion(start[i], &peers[i], strategy, b.conformity, noise);
    }
    for ((agent, o), over) in state.agents.iter_mut().zip(next).zip(&overloaded) {
        agent.opinion = o;
        agent.overloaded = *over;
    }

    // (6) shared benefit is judged on the previous iteration's allocation.
    let primary: Vec<usize> = (0..n).map(|i| state.allocation.primary_area(i)).collect();
    for it in &interactions {
        for (x, y) in [(it.initiator, it.recipient), (it.recipient, it.initiator)] {
            let partner = &state.agents[y];
            let ctx = GateContext {
                friendship_edge: state.graph.has_edge(x, y),
                shared_area_last_step: primary[x] == primary[y],
                partner_integrity: partner.moral_integrity,
                monitoring_enabled: cfg.monitoring_enabled,
                partner_monitored: partner.monitored,
                history: state.agents[x].memory.history(y),
            };
            let gate = rational_gate(&ctx, coeffs);
            let t = state.trust.get(x, y);
            state
                .trust
                .set(x, y, update_trust(t, it.feedback, gate, coeffs.trust_rate));
        }
    }

    // (7)
    for it in &interactions {
        let (a, b) = (it.initiator, it.recipient);
        record_and_learn(&mut state.agents[a].memory, b, it.feedback, now, coeffs);
        record_and_learn(&mut state.agents[b].memory, a, it.feedback, now, coeffs);
    }

    // (8)
    let mut stimuli = vec![Vec::new(); n];
    for it in &interactions {
        let s = interaction_stimuli(it.feedback, coeffs.stimulus_gain);
        stimuli[it.initiator].extend_from_slice(&s);
        stimuli[it.recipient].extend_from_slice(&s);
    }
    for (agent, s) in state.agents.iter_mut().zip(&stimuli) {
        agent.emotions = update_emotions(&agent.emotions, s, coeffs, agent.personality.neuroticism);
    }

    // (9), (10)
    state.reallocate(cfg);
    state.refresh_reputation();

    Ok(StepTrace {
        start_opinions: start,
        interactions,
        overloaded,
    })
}

/// Trust and allocation captured at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub iteration: u64,
    pub trust: Vec<Vec<f64>>,
    pub allocation: AllocationMap,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub config: ScenarioConfig,
    pub final_state: SimulationState,
    pub log: MetricsLog,
    pub snapshots: Vec<Snapshot>,
    pub friendship: Graph,
    pub influence: InfluenceNetwork,
}

impl RunArtifacts {
    /// Per-iteration mean emotions as an 8 × (iterations + 1) table.
    pub fn emotion_table(&self) -> Vec<Vec<f64>> {
        (0..8)
            .map(|k| {
                self.log
                    .rows
                    .iter()
                    .map(|r| r.emotions.to_array()[k])
                    .collect()
            })
            .collect()
    }
}

pub fn run_simulation(cfg: &ScenarioConfig) -> Result<RunArtifacts> {
    run_simulation_with(cfg, |_| {})
}

/// Runs `cfg` to completion, calling `observe` on the initial state and
/// after every step.
pub fn run_simulation_with<F>(cfg: &ScenarioConfig, mut observe: F) -> Result<RunArtifacts>
where
    F: FnMut(&SimulationState),
{
    let mut state = SimulationState::initialize(cfg)?;
    let wanted: BTreeSet<u64> = cfg.snapshot_iterations.iter().copied().collect();
    let mut log = MetricsLog::default();
    let mut snapshots = Vec::new();

    let record = |state: &SimulationState, log: &mut MetricsLog, snapshots: &mut Vec<Snapshot>| {
        log.rows.push(compute_metrics(state));
        if wanted.contains(&state.iteration) {
            snapshots.push(Snapshot {
                iteration: state.iteration,
                trust: state.trust.rows(),
                allocation: state.allocation.clone(),
            });
        }
    };

    record(&state, &mut log, &mut snapshots);
    observe(&state);
    while state.iteration < cfg.total_iterations {
        step(&mut state, cfg)?;
        record(&state, &mut log, &mut snapshots);
        observe(&state);
    }

    let reputations: Vec<f64> = state.agents.iter().map(|a| a.reputation).collect();
    let influence = influence_network(&state.trust, &reputations);
    Ok(RunArtifacts {
        config: cfg.clone(),
        friendship: state.graph.clone(),
        influence,
        final_state: state,
        log,
        snapshots,
    })
}
