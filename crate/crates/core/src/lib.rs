//! Attention-guided planning for weekly hospital drug-shortage management.
//!
//! The crate is `no_std` (with `alloc`) and carries everything that is pure
//! computation: the ground-truth weekly simulator, per-drug Gaussian beliefs,
//! urgency scoring and focus selection, the shared Monte-Carlo rollout
//! planner, the six decision agents, seeded scenario generation, and the
//! closed-loop episode runner. File formats, wall-clock timing and the CLI
//! live in the `shortfall` companion crate.

#![no_std]

extern crate alloc;

pub mod agents;
pub mod attention;
pub mod belief;
pub mod config;
pub mod episode;
mod error;
pub mod planner;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod types;

pub use error::{Error, Result};

pub use agents::{Agent, AgentKind, LearnerState};
pub use attention::{AttentionWeights, Feature, FeatureWeights, UrgencyComponents};
pub use belief::DrugBelief;
pub use config::ExperimentConfig;
pub use episode::{run_episode, Clock, EpisodeResult, NullClock};
pub use planner::PlannerConfig;
pub use scenario::{generate_scenario, ScenarioSpec};
pub use sim::{Observation, WeeklyOutcome, WorldState};
pub use types::{compute_runway, ActionCategory, ActionKind, DrugTrueState, Lma, SimConfig};
