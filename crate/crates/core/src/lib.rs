//! Deterministic agent-based simulation of rational trust in collective
//! resource allocation.
//!
//! Agents carry an opinion, an eight-channel emotion vector, Big Five
//! personality traits, a bounded interaction memory and a per-iteration
//! budget. Each iteration they pick partners over a friendship graph, compare
//! opinions, adjust opinions and directed trust, and split their budget
//! across affected areas. Trust may only *grow* when one of five rational
//! licences holds (friendship, shared benefit, moral integrity, monitoring,
//! historical reliability); it may always shrink.
//!
//! ```no_run
//! use trustsim_core::{run_simulation, write_run, ScenarioConfig, WriteOptions};
//!
//! let cfg = ScenarioConfig::disaster();
//! let run = run_simulation(&cfg).unwrap();
//! write_run(&run, "out".as_ref(), WriteOptions::default()).unwrap();
//! ```

pub mod config;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod export;
pub mod metrics;
pub mod model;
pub mod network;
pub mod plot;
pub mod rng;

pub use config::{
    validate_config, CoefficientSet, EventKind, EventSpec, ScenarioConfig, Stimulus, Topology,
    Violation,
};
pub use dynamics::{GateContext, Strategy};
pub use engine::{
    allocate_resources, apply_event, run_simulation, run_simulation_with, step, AllocationMap,
    Interaction, RunArtifacts, SimulationState, Snapshot, StepTrace,
};
pub use error::{Result, SimError};
pub use export::{write_run, RunManifest, WriteOptions};
pub use metrics::{compute_metrics, MetricsLog, MetricsRow};
pub use model::{
    clamp01, AgentId, AgentState, Channel, EmotionVector, InteractionRecord, Memory, Personality,
    TrustMatrix,
};
pub use network::{Graph, InfluenceNetwork};
pub use plot::emit_plots;
pub use rng::derive_stream;
