//! The closed loop: beliefs → agent decision → simulator week → belief
//! update, repeated over the scenario horizon.

use alloc::string::String;
use alloc::vec::Vec;

use crate::agents::{Agent, AgentKind, AttentionTraceRow, DecisionContext};
use crate::attention::FeatureWeights;
use crate::belief::{belief_runway, steady_state_std, DrugBelief};
use crate::config::ExperimentConfig;
use crate::planner::SupplyView;
use crate::rng::{self, Stream};
use crate::scenario::ScenarioSpec;
use crate::sim::{advance_week_ordered, emit_observation, DrugStep, EnvSeeds, Observation, WorldState};
use crate::types::{ActionKind, SupplierSlot, SupplierState};
use crate::Result;

/// Monotonic time source used to measure planning cost.
pub trait Clock {
    fn now_ns(&self) -> u64;
}

/// A clock that never advances; planning time is reported as zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn now_ns(&self) -> u64 {
        0
    }
}

/// One (week, drug) row of the weekly trace. State and belief columns are
/// taken at decision time; `per_drug_score` is the score after the week.
#[derive(Debug, Clone, PartialEq)]
pub struct WeeklyTraceRow {
    pub week: u32,
    pub drug: String,
    pub qoh_true: f64,
    pub qoh_mean: f64,
    pub qoh_std: f64,
    pub utz_true: f64,
    pub utz_mean: f64,
    pub runway_mean: f64,
    pub urgency: Option<f64>,
    pub in_focus: bool,
    pub action: ActionKind,
    pub per_drug_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeekSummary {
    pub week: u32,
    pub reward: f64,
    pub stockouts: usize,
    /// `None` for agents without a focus set.
    pub focus_size: Option<usize>,
    pub planning_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub scenario: String,
    pub agent: AgentKind,
    pub seed: u64,
    pub weeks: Vec<WeekSummary>,
    pub trace: Vec<WeeklyTraceRow>,
    pub attention: Vec<AttentionTraceRow>,
    /// Learner weights after the last update.
    pub final_beta: Option<FeatureWeights>,
}

impl EpisodeResult {
    pub fn total_reward(&self) -> f64 {
        self.weeks.iter().map(|w| w.reward).sum()
    }

    /// Drug-weeks that ended stocked out.
    pub fn stockout_count(&self) -> usize {
        self.weeks.iter().map(|w| w.stockouts).sum()
    }

    pub fn avg_focus(&self) -> Option<f64> {
        let sizes: Vec<usize> = self.weeks.iter().filter_map(|w| w.focus_size).collect();
        (!sizes.is_empty()).then(|| sizes.iter().sum::<usize>() as f64 / sizes.len() as f64)
    }

    pub fn max_focus(&self) -> Option<usize> {
        self.weeks.iter().filter_map(|w| w.focus_size).max()
    }

    pub fn planning_ns(&self) -> u64 {
        self.weeks.iter().map(|w| w.planning_ns).sum()
    }

    /// Mean planning time per week in seconds.
    pub fn planning_s_per_week(&self) -> f64 {
        if self.weeks.is_empty() {
            0.0
        } else {
            self.planning_ns() as f64 * 1e-9 / self.weeks.len() as f64
        }
    }
}

fn supply_view(
    world: &WorldState,
    nominal: &[SupplierState],
    d: usize,
    obs: &Observation,
    belief: &DrugBelief,
) -> SupplyView {
    let drug = &world.drugs[d];
    let mut primary = nominal[drug.primary_supplier].clone();
    let mut alternate = nominal[drug.alternate_supplier].clone();
    let active = match obs.active_supplier {
        SupplierSlot::Primary => &mut primary,
        SupplierSlot::Alternate => &mut alternate,
    };
    active.reliability = belief.reliability_est;
    active.disrupted = obs.supplier_disrupted;
    SupplyView {
        primary,
        alternate,
        active: obs.active_supplier,
        pending_switch: obs.pending_switch,
        open_orders: obs.open_orders.clone(),
        routine_order_qty: drug.routine_order_qty,
        demand_variation: world.demand_variation,
    }
}

/// Runs `agent` on `spec` for the full horizon.
///
/// The environment streams depend only on `seed`, so every agent run with
/// the same seed faces the same demand, delivery and outage draws.
pub fn run_episode(spec: &ScenarioSpec, agent: AgentKind, seed: u64, config: &ExperimentConfig, clock: &dyn Clock) -> Result<EpisodeResult> {
    config.validate()?;
    let mut world = spec.initial_world()?;
    let sim = spec.effective_sim(&config.sim);
    let mut run_config = config.clone();
    run_config.sim = sim.clone();
    let seeds = EnvSeeds::from_run_seed(seed);
    let nominal: Vec<SupplierState> = world
        .suppliers
        .iter()
        .map(|s| SupplierState {
            disrupted: false,
            disrupted_until: 0,
            ..s.clone()
        })
        .collect();
    let ids: Vec<String> = world.drugs.iter().map(|d| d.id.clone()).collect();
    let n = ids.len();

    let mut observations: Vec<Observation> = Vec::with_capacity(n);
    let mut beliefs: Vec<DrugBelief> = Vec::with_capacity(n);
    for (d, drug) in world.drugs.iter().enumerate() {
        let mut r = rng::stream(seeds.observation, Stream::Observation, &[u64::MAX, d as u64]);
        let disrupted = world.active_supplier(drug).disrupted;
        // The opening record is as accurate as a belief that has been
        // passively tracked for a long time.
        let mut obs = emit_observation(drug, 0, &DrugStep::default(), disrupted, ActionKind::Monitor, &sim, &mut r);
        let p = &sim.belief;
        obs.obs_std_qoh = steady_state_std(obs.obs_std_qoh, p.diffusion_qoh, p.qoh_std_cap);
        obs.obs_std_utz = steady_state_std(obs.obs_std_utz, p.diffusion_utz, p.utz_std_cap);
        obs.qoh_obs = rng::normal(&mut r, drug.qoh, obs.obs_std_qoh).max(0.0);
        obs.utz_obs = rng::normal(&mut r, drug.utz, obs.obs_std_utz).max(0.0);
        let prior = nominal[drug.primary_supplier].reliability;
        beliefs.push(DrugBelief::from_observation(&obs, prior, drug.clinical_impact, drug.reputation, &sim.belief));
        observations.push(obs);
    }

    let mut agent_state = Agent::new(agent, &run_config, seed);
    let horizon = spec.horizon_weeks as usize;
    let mut weeks = Vec::with_capacity(horizon);
    let mut trace = Vec::with_capacity(horizon * n);
    let mut attention = Vec::new();

    for week in 0..spec.horizon_weeks {
        let supply: Vec<SupplyView> = (0..n)
            .map(|d| supply_view(&world, &nominal, d, &observations[d], &beliefs[d]))
            .collect();
        let ctx = DecisionContext {
            week,
            ids: &ids,
            beliefs: &beliefs,
            supply: &supply,
            config: &run_config,
            plan_seed: rng::derive_seed(seed, &[Stream::Planning as u64, week as u64]),
        };
        let decision = agent_state.act(&ctx, clock)?;
        let (next, outcome) = advance_week_ordered(&world, &decision.actions, &sim, seeds);

        let mut in_focus = alloc::vec![false; n];
        if let Some(f) = &decision.focus {
            for &i in f {
                in_focus[i] = true;
            }
        }
        for d in 0..n {
            trace.push(WeeklyTraceRow {
                week,
                drug: ids[d].clone(),
                qoh_true: world.drugs[d].qoh,
                qoh_mean: beliefs[d].qoh_mean,
                qoh_std: beliefs[d].qoh_std,
                utz_true: world.drugs[d].utz,
                utz_mean: beliefs[d].utz_mean,
                runway_mean: belief_runway(&beliefs[d], &sim).0,
                urgency: decision.urgencies.as_ref().map(|u| u[d]),
                in_focus: in_focus[d],
                action: decision.actions[d],
                per_drug_score: outcome.per_drug_scores[d],
            });
        }

        for (d, obs) in outcome.observations.iter().enumerate() {
            let mut b = beliefs[d].clone();
            b.note_restriction(obs.lma, &sim);
            beliefs[d] = b.predict(obs.delivered, &sim.belief).update(obs, &sim)?;
        }
        observations = outcome.observations;

        if let Some(rows) = agent_state.observe_reward(week, outcome.reward)? {
            attention.extend(rows);
        }
        weeks.push(WeekSummary {
            week,
            reward: outcome.reward,
            stockouts: outcome.stockout_events.len(),
            focus_size: decision.focus.as_ref().map(Vec::len),
            planning_ns: decision.planning_ns,
        });
        world = next;
    }

    Ok(EpisodeResult {
        scenario: spec.name.clone(),
        agent,
        seed,
        weeks,
        trace,
        attention,
        final_beta: agent_state.learner_state().map(|l| l.weights.beta),
    })
}
