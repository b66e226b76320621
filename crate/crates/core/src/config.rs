//! The experiment configuration: one section per subsystem.

use serde::{Deserialize, Serialize};

use crate::agents::LearnerConfig;
use crate::attention::AttentionConfig;
use crate::planner::PlannerConfig;
use crate::scenario::ScenarioGenConfig;
use crate::types::SimConfig;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sim: SimConfig,
    pub planner: PlannerConfig,
    pub attention: AttentionConfig,
    pub learner: LearnerConfig,
    pub scenario_gen: ScenarioGenConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.planner.validate()?;
        self.attention.validate()?;
        self.learner.validate(&self.attention)?;
        self.scenario_gen.validate()
    }
}
