//! The six decision agents behind one interface.
//!
//! Random, Greedy and Heuristic are rule agents. Expert, Learner and
//! FullPomdp share the rollout planner and differ only in which drugs they
//! hand to it: Expert and Learner plan their urgency focus set (fixed vs.
//! adapted weights), FullPomdp plans every drug.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::attention::{component_vector, select_focus, urgency_score, AttentionConfig, AttentionWeights, Feature, FeatureWeights, FocusCandidate, ScenarioStats};
use crate::belief::{belief_runway, DrugBelief};
use crate::config::ExperimentConfig;
use crate::episode::Clock;
use crate::planner::{plan_joint, DrugPlanInput, SupplyView};
use crate::rng::{self, Stream};
use crate::types::{ActionKind, Lma, SupplierSlot};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    Random,
    Greedy,
    Heuristic,
    Expert,
    Learner,
    #[serde(rename = "FullPOMDP")]
    FullPomdp,
}

impl AgentKind {
    pub const ALL: [AgentKind; 6] = [
        AgentKind::Random,
        AgentKind::Greedy,
        AgentKind::Heuristic,
        AgentKind::Expert,
        AgentKind::Learner,
        AgentKind::FullPomdp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Random => "Random",
            AgentKind::Greedy => "Greedy",
            AgentKind::Heuristic => "Heuristic",
            AgentKind::Expert => "Expert",
            AgentKind::Learner => "Learner",
            AgentKind::FullPomdp => "FullPOMDP",
        }
    }

    pub fn uses_planner(self) -> bool {
        matches!(self, AgentKind::Expert | AgentKind::Learner | AgentKind::FullPomdp)
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).map(|c| c.to_ascii_lowercase()).collect();
        match norm.as_str() {
            "random" => Ok(AgentKind::Random),
            "greedy" => Ok(AgentKind::Greedy),
            "heuristic" => Ok(AgentKind::Heuristic),
            "expert" => Ok(AgentKind::Expert),
            "learner" => Ok(AgentKind::Learner),
            "fullpomdp" | "full" => Ok(AgentKind::FullPomdp),
            _ => Err(Error::UnknownAgent(s.into())),
        }
    }
}

/// `learner` section of the experiment config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub alpha: f64,
    pub eta: f64,
    pub temperature: f64,
    /// Starting weights; the expert weights when absent.
    pub initial_beta: Option<FeatureWeights>,
    /// Starting baseline; the first observed reward when absent.
    pub initial_baseline: Option<f64>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            alpha: 0.0003,
            eta: 0.5,
            temperature: 1.0,
            initial_beta: None,
            initial_baseline: None,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self, att: &AttentionConfig) -> Result<()> {
        if !(self.alpha >= 0.0) {
            return Err(Error::invalid("learner.alpha", "must be non-negative"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::invalid("learner.eta", "must lie in (0, 1]"));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::invalid("learner.temperature", "must be positive"));
        }
        if let Some(b) = self.initial_beta {
            for f in Feature::ALL {
                if !(0.0..=att.beta_max).contains(&b.get(f)) {
                    return Err(Error::invalid(alloc::format!("learner.initial_beta.{f}"), "outside [0, beta_max]"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub weights: AttentionWeights,
    pub baseline: Option<f64>,
    pub alpha: f64,
    pub eta: f64,
    pub temperature: f64,
    pub beta_max: f64,
}

impl LearnerState {
    pub fn new(att: &AttentionConfig, cfg: &LearnerConfig) -> Self {
        let mut weights = att.weights();
        if let Some(b) = cfg.initial_beta {
            weights.beta = b;
        }
        LearnerState {
            weights,
            baseline: cfg.initial_baseline,
            alpha: cfg.alpha,
            eta: cfg.eta,
            temperature: cfg.temperature,
            beta_max: att.beta_max,
        }
    }
}

/// Surrogate gradient of `log prod_{i in focus} p_i` with respect to each
/// feature weight, where `p = softmax(scores / T)` over all drugs and
/// `d scores_i / d beta_f = activations[i][f]`.
pub fn softmax_focus_grad(activations: &[[f64; 4]], scores: &[f64], focus: &[usize], temperature: f64) -> Result<[f64; 4]> {
    if activations.is_empty() || scores.len() != activations.len() {
        return Err(Error::EmptyDrugSet);
    }
    let zmax = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|&z| libm::exp((z - zmax) / temperature)).collect();
    let total: f64 = weights.iter().sum();
    let mut expected = [0.0; 4];
    for (w, row) in weights.iter().zip(activations) {
        let p = w / total;
        for f in 0..4 {
            expected[f] += p * row[f];
        }
    }
    let mut grad = [0.0; 4];
    for &i in focus {
        let row = activations.get(i).ok_or_else(|| Error::Contract(alloc::format!("focus index {i} out of range")))?;
        for f in 0..4 {
            grad[f] += (row[f] - expected[f]) / temperature;
        }
    }
    Ok(grad)
}

/// One row of the attention trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionTraceRow {
    pub week: u32,
    pub feature: Feature,
    pub beta: f64,
    pub advantage: f64,
}

/// REINFORCE-style weight step: `beta_f += alpha * (r - b) * g_f`, clamped
/// to `[0, beta_max]`, followed by the baseline moving average.
pub fn learner_update(
    state: &LearnerState,
    week: u32,
    reward: f64,
    activations: &[[f64; 4]],
    scores: &[f64],
    focus: &[usize],
) -> Result<(LearnerState, [AttentionTraceRow; 4])> {
    let baseline = state.baseline.unwrap_or(reward);
    let advantage = reward - baseline;
    let mut next = state.clone();
    if state.alpha != 0.0 && advantage != 0.0 {
        let g = softmax_focus_grad(activations, scores, focus, state.temperature)?;
        let mut beta = state.weights.beta.to_array();
        for f in 0..4 {
            beta[f] = (beta[f] + state.alpha * advantage * g[f]).clamp(0.0, state.beta_max);
        }
        next.weights.beta = FeatureWeights::from_array(beta);
    }
    next.baseline = Some((1.0 - state.eta) * baseline + state.eta * reward);
    let beta = next.weights.beta.to_array();
    let rows = Feature::ALL.map(|f| AttentionTraceRow {
        week,
        feature: f,
        beta: beta[f as usize],
        advantage,
    });
    Ok((next, rows))
}

/// Everything an agent may look at when choosing the week's actions.
#[derive(Debug, Clone, Copy)]
pub struct DecisionContext<'a> {
    pub week: u32,
    pub ids: &'a [String],
    pub beliefs: &'a [DrugBelief],
    pub supply: &'a [SupplyView],
    pub config: &'a ExperimentConfig,
    /// Seed of this week's planning streams.
    pub plan_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub actions: Vec<ActionKind>,
    /// Focus set (descending urgency) for attention agents, every drug for
    /// FullPomdp, absent for rule agents.
    pub focus: Option<Vec<usize>>,
    pub urgencies: Option<Vec<f64>>,
    /// Nanoseconds spent choosing actions (planner calls for planning
    /// agents, rule evaluation for rule agents).
    pub planning_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
struct AttentionSnapshot {
    activations: Vec<[f64; 4]>,
    scores: Vec<f64>,
    focus: Vec<usize>,
}

/// A stateful agent for one run.
#[derive(Debug, Clone)]
pub struct Agent {
    kind: AgentKind,
    seed: u64,
    expert: AttentionWeights,
    learner: Option<LearnerState>,
    last: Option<AttentionSnapshot>,
}

const GREEDY_WINDOW: usize = 5;
/// Drugs already in the top reward bucket are left alone.
const GREEDY_AUDIT_BELOW: f64 = 8.0;

impl Agent {
    pub fn new(kind: AgentKind, config: &ExperimentConfig, seed: u64) -> Self {
        Agent {
            kind,
            seed: rng::derive_seed(seed, &[Stream::Agent as u64]),
            expert: config.attention.weights(),
            learner: (kind == AgentKind::Learner).then(|| LearnerState::new(&config.attention, &config.learner)),
            last: None,
        }
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn learner_state(&self) -> Option<&LearnerState> {
        self.learner.as_ref()
    }

    /// The attention weights this agent currently scores urgency with.
    pub fn weights(&self) -> Option<AttentionWeights> {
        match self.kind {
            AgentKind::Expert => Some(self.expert),
            AgentKind::Learner => self.learner.as_ref().map(|l| l.weights),
            _ => None,
        }
    }

    pub fn act(&mut self, ctx: &DecisionContext<'_>, clock: &dyn Clock) -> Result<Decision> {
        let n = ctx.beliefs.len();
        if n == 0 {
            return Err(Error::EmptyDrugSet);
        }
        if ctx.ids.len() != n || ctx.supply.len() != n {
            return Err(Error::Contract("ids, beliefs and supply views must align".into()));
        }
        match self.kind {
            AgentKind::Random | AgentKind::Greedy | AgentKind::Heuristic => {
                let start = clock.now_ns();
                let actions = match self.kind {
                    AgentKind::Random => self.random(ctx),
                    AgentKind::Greedy => greedy(ctx),
                    _ => heuristic(ctx),
                };
                let planning_ns = clock.now_ns().saturating_sub(start);
                Ok(Decision {
                    actions,
                    focus: None,
                    urgencies: None,
                    planning_ns,
                })
            }
            AgentKind::FullPomdp => {
                let inputs = plan_inputs(ctx);
                let all: Vec<usize> = (0..n).collect();
                let start = clock.now_ns();
                let actions = plan_joint(&inputs, &all, &ctx.config.sim, &ctx.config.planner, ctx.plan_seed)?;
                let planning_ns = clock.now_ns().saturating_sub(start);
                Ok(Decision {
                    actions,
                    focus: Some(all),
                    urgencies: None,
                    planning_ns,
                })
            }
            AgentKind::Expert | AgentKind::Learner => {
                let weights = self.weights().expect("attention agent has weights");
                let att = &ctx.config.attention;
                let sim = &ctx.config.sim;
                let stats = ScenarioStats::from_beliefs(ctx.beliefs);
                let mut activations = Vec::with_capacity(n);
                let mut scores = Vec::with_capacity(n);
                let mut runways = Vec::with_capacity(n);
                for b in ctx.beliefs {
                    let c = component_vector(b, &stats, att, sim);
                    activations.push(c.activations());
                    scores.push(urgency_score(&c, &weights));
                    runways.push(belief_runway(b, sim).0);
                }
                let candidates: Vec<FocusCandidate<'_>> = (0..n)
                    .map(|i| FocusCandidate {
                        id: &ctx.ids[i],
                        urgency: scores[i],
                        runway_mean: runways[i],
                    })
                    .collect();
                let focus = select_focus(&candidates, &weights);
                let inputs = plan_inputs(ctx);
                let start = clock.now_ns();
                let actions = plan_joint(&inputs, &focus, sim, &ctx.config.planner, ctx.plan_seed)?;
                let planning_ns = clock.now_ns().saturating_sub(start);
                self.last = Some(AttentionSnapshot {
                    activations,
                    scores: scores.clone(),
                    focus: focus.clone(),
                });
                Ok(Decision {
                    actions,
                    focus: Some(focus),
                    urgencies: Some(scores),
                    planning_ns,
                })
            }
        }
    }

    /// Feeds the realized weekly reward back. Only the Learner reacts; it
    /// returns the week's attention-trace rows.
    pub fn observe_reward(&mut self, week: u32, reward: f64) -> Result<Option<[AttentionTraceRow; 4]>> {
        let (Some(state), Some(snap)) = (self.learner.as_ref(), self.last.as_ref()) else {
            return Ok(None);
        };
        let (next, rows) = learner_update(state, week, reward, &snap.activations, &snap.scores, &snap.focus)?;
        self.learner = Some(next);
        Ok(Some(rows))
    }

    fn random(&self, ctx: &DecisionContext<'_>) -> Vec<ActionKind> {
        (0..ctx.beliefs.len())
            .map(|d| {
                let mut r = rng::stream(self.seed, Stream::Agent, &[ctx.week as u64, d as u64]);
                ActionKind::ALL[r.random_range(0..ActionKind::ALL.len())]
            })
            .collect()
    }
}

fn plan_inputs<'a>(ctx: &DecisionContext<'a>) -> Vec<DrugPlanInput<'a>> {
    ctx.beliefs
        .iter()
        .zip(ctx.supply)
        .enumerate()
        .map(|(index, (belief, supply))| DrugPlanInput {
            index,
            belief,
            supply,
            week: ctx.week,
        })
        .collect()
}

fn greedy(ctx: &DecisionContext<'_>) -> Vec<ActionKind> {
    let sim = &ctx.config.sim;
    let runways: Vec<f64> = ctx.beliefs.iter().map(|b| belief_runway(b, sim).0).collect();
    let mut order: Vec<usize> = (0..runways.len()).collect();
    order.sort_by(|&a, &b| runways[a].total_cmp(&runways[b]).then_with(|| ctx.ids[a].cmp(&ctx.ids[b])));
    let mut actions = alloc::vec![ActionKind::Monitor; runways.len()];
    for &d in order.iter().take(GREEDY_WINDOW) {
        let r = runways[d];
        actions[d] = if r < 1.0 {
            ActionKind::GrayMarketBuy
        } else if r < 2.0 {
            ActionKind::ApplyHardLma
        } else if r < 4.0 {
            ActionKind::ApplySoftLma
        } else if r < GREEDY_AUDIT_BELOW {
            ActionKind::AuditInventory
        } else {
            ActionKind::Monitor
        };
    }
    actions
}

const HEURISTIC_AUDIT_EVERY: u32 = 4;
const HEURISTIC_QOH_STD: f64 = 20.0;
const HEURISTIC_ERD_STD: f64 = 3.0;
const HEURISTIC_MIN_RELIABILITY: f64 = 0.5;

fn heuristic(ctx: &DecisionContext<'_>) -> Vec<ActionKind> {
    let sim = &ctx.config.sim;
    ctx.beliefs
        .iter()
        .zip(ctx.supply)
        .map(|(b, s)| {
            let runway = belief_runway(b, sim).0;
            let on_primary = s.active == SupplierSlot::Primary && s.pending_switch.is_none();
            if ctx.week.saturating_sub(b.last_audit_week) > HEURISTIC_AUDIT_EVERY || b.qoh_std > HEURISTIC_QOH_STD {
                ActionKind::AuditInventory
            } else if b.erd_std.is_some_and(|s| s > HEURISTIC_ERD_STD) {
                ActionKind::ContactManufacturer
            } else if b.reliability_est < HEURISTIC_MIN_RELIABILITY && on_primary && s.alternate.reliability > b.reliability_est {
                ActionKind::SwitchToAlternate
            } else if runway < 1.0 {
                ActionKind::GrayMarketBuy
            } else if runway < 3.0 && b.lma_known == Lma::None {
                ActionKind::ApplySoftLma
            } else {
                ActionKind::Monitor
            }
        })
        .collect()
}
