//! Ground-truth weekly dynamics.
//!
//! Within a week every drug goes through the same fixed sequence: action
//! effects, supplier switch and standing order, deliveries, consumption,
//! stockout flag, reputation. Supplier disruption status then evolves for
//! the following week. Each drug draws from its own `(week, drug)` stream so
//! one drug's choices never shift another drug's randomness.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{self, Stream};
use crate::types::{
    runway, ActionKind, DrugTrueState, Lma, OrderSource, PendingOrder, PendingSwitch, SimConfig, SupplierSlot,
    SupplierState,
};
use crate::{Error, Result};

/// A scheduled supplier outage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisruptionWindow {
    pub supplier: usize,
    pub start_week: u32,
    pub duration_weeks: u32,
    /// Weekly probability the outage ends once the scheduled duration is over.
    pub recovery_hazard: f64,
}

/// Complete ground truth of a running scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub week: u32,
    pub drugs: Vec<DrugTrueState>,
    pub suppliers: Vec<SupplierState>,
    pub windows: Vec<DisruptionWindow>,
    /// Std of the weekly multiplicative demand shock.
    pub demand_variation: f64,
}

/// Seeds of the two environment-side random streams of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvSeeds {
    pub environment: u64,
    pub observation: u64,
}

impl EnvSeeds {
    pub fn from_run_seed(seed: u64) -> Self {
        EnvSeeds {
            environment: rng::derive_seed(seed, &[Stream::Environment as u64]),
            observation: rng::derive_seed(seed, &[Stream::Observation as u64]),
        }
    }
}

/// One action per drug, keyed by drug id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct JointAction(pub BTreeMap<String, ActionKind>);

impl JointAction {
    pub fn from_ordered(drugs: &[DrugTrueState], actions: &[ActionKind]) -> Self {
        JointAction(drugs.iter().zip(actions).map(|(d, &a)| (d.id.clone(), a)).collect())
    }

    /// Resolves the map into drug order, rejecting unknown or missing drugs.
    pub fn ordered(&self, drugs: &[DrugTrueState]) -> Result<Vec<ActionKind>> {
        for id in self.0.keys() {
            if !drugs.iter().any(|d| &d.id == id) {
                return Err(Error::UnknownDrug(id.clone()));
            }
        }
        drugs
            .iter()
            .map(|d| self.0.get(&d.id).copied().ok_or_else(|| Error::MissingAction(d.id.clone())))
            .collect()
    }
}

/// What the pharmacy sees about one drug at the end of a week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub drug: String,
    pub week: u32,
    pub qoh_obs: f64,
    pub utz_obs: f64,
    pub erd_obs: Option<f64>,
    pub obs_std_qoh: f64,
    pub obs_std_utz: f64,
    pub obs_std_erd: Option<f64>,
    pub audited: bool,
    /// Fully observed signals: the pharmacy knows what it received, whether
    /// it ran out, which restriction is in force, and its own order book.
    pub stocked_out: bool,
    pub delivered: f64,
    pub orders_due: u32,
    pub orders_failed: u32,
    pub supplier_disrupted: bool,
    pub lma: Lma,
    pub active_supplier: SupplierSlot,
    pub pending_switch: Option<PendingSwitch>,
    pub open_orders: Vec<KnownOrder>,
}

/// An open order as the pharmacy knows it: everything but the arrival week.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnownOrder {
    pub quantity: f64,
    pub placed_week: u32,
    pub source: OrderSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeeklyOutcome {
    pub week: u32,
    pub reward: f64,
    /// Bucket score plus stockout penalty, in drug order.
    pub per_drug_scores: Vec<f64>,
    /// Action and restriction charges, in drug order.
    pub action_costs: Vec<f64>,
    pub stockout_events: Vec<String>,
    pub deliveries: Vec<(String, f64)>,
    pub observations: Vec<Observation>,
}

/// Per-drug result of one simulated week.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DrugStep {
    pub delivered: f64,
    pub consumed: f64,
    pub stockout: bool,
    pub orders_due: u32,
    pub orders_failed: u32,
}

/// Read-only view of a drug's two suppliers.
#[derive(Debug, Clone, Copy)]
pub struct SupplierPair<'a> {
    pub primary: &'a SupplierState,
    pub alternate: &'a SupplierState,
}

impl<'a> SupplierPair<'a> {
    #[inline]
    pub fn get(&self, slot: SupplierSlot) -> &'a SupplierState {
        match slot {
            SupplierSlot::Primary => self.primary,
            SupplierSlot::Alternate => self.alternate,
        }
    }
}

fn set_lma<R: Rng + ?Sized>(drug: &mut DrugTrueState, lma: Lma, cfg: &SimConfig, rng: &mut R) {
    if drug.lma == lma {
        return;
    }
    drug.lma = lma;
    if lma == Lma::None {
        drug.utz = drug.base_utz;
    } else {
        let compliance = (1.0 + rng::normal(rng, 0.0, cfg.lma_compliance_std)).max(0.0);
        drug.utz = (drug.base_utz * (1.0 - cfg.lma_effect(lma)) * compliance).clamp(0.0, drug.base_utz);
    }
}

fn schedule_switch(drug: &mut DrugTrueState, to: SupplierSlot, week: u32, cfg: &SimConfig) {
    let already_heading = drug.pending_switch.map_or(drug.active_supplier, |s| s.to);
    if already_heading != to {
        drug.pending_switch = Some(PendingSwitch {
            to,
            effective_week: week + cfg.switch_delay_weeks,
        });
    }
}

fn sort_orders(orders: &mut [PendingOrder]) {
    // stable: orders with equal erd keep placement order
    orders.sort_by_key(|o| o.erd_week);
}

/// Applies the immediate effect of `action`. Returns gray-market inflow.
fn apply_action<R: Rng + ?Sized>(drug: &mut DrugTrueState, action: ActionKind, week: u32, cfg: &SimConfig, rng: &mut R) -> f64 {
    match action {
        ActionKind::Monitor
        | ActionKind::AuditInventory
        | ActionKind::ContactManufacturer
        | ActionKind::QuerySupplierErd => 0.0,
        ActionKind::ApplySoftLma => {
            set_lma(drug, Lma::Soft, cfg, rng);
            0.0
        }
        ActionKind::ApplyHardLma => {
            set_lma(drug, Lma::Hard, cfg, rng);
            0.0
        }
        ActionKind::LiftLma => {
            set_lma(drug, Lma::None, cfg, rng);
            0.0
        }
        ActionKind::SwitchToAlternate => {
            schedule_switch(drug, SupplierSlot::Alternate, week, cfg);
            0.0
        }
        ActionKind::SwitchToPrimary => {
            schedule_switch(drug, SupplierSlot::Primary, week, cfg);
            0.0
        }
        ActionKind::ExpediteOrder => {
            if let Some(order) = drug.pending_orders.iter_mut().find(|o| o.source != OrderSource::Emergency) {
                if rng::bernoulli(rng, cfg.expedite_success) {
                    order.erd_week = order.erd_week.saturating_sub(1).max(week);
                    order.expedited = true;
                }
            }
            sort_orders(&mut drug.pending_orders);
            0.0
        }
        ActionKind::EmergencyBuy => {
            let quantity = cfg.emergency_buy_multiple * drug.utz;
            if quantity > 0.0 {
                drug.pending_orders.push(PendingOrder {
                    quantity,
                    erd_week: week + cfg.emergency_latency_weeks,
                    placed_week: week,
                    expedited: false,
                    source: OrderSource::Emergency,
                });
                sort_orders(&mut drug.pending_orders);
            }
            0.0
        }
        ActionKind::GrayMarketBuy => {
            let quantity = cfg.gray_market_multiple * drug.utz;
            drug.qoh += quantity;
            quantity
        }
    }
}

/// Advances one drug by one week. Shared by the simulator and the planner's
/// rollouts so both run exactly the same transition rules.
pub fn step_drug<R: Rng + ?Sized>(
    drug: &mut DrugTrueState,
    suppliers: SupplierPair<'_>,
    action: ActionKind,
    week: u32,
    demand_variation: f64,
    cfg: &SimConfig,
    rng: &mut R,
) -> DrugStep {
    let mut step = DrugStep {
        delivered: apply_action(drug, action, week, cfg, rng),
        ..DrugStep::default()
    };

    if let Some(switch) = drug.pending_switch {
        if switch.effective_week <= week {
            drug.active_supplier = switch.to;
            drug.pending_switch = None;
        }
    }

    // Routine orders are placed even during an outage and back-order with
    // the supplier until it recovers.
    let active = suppliers.get(drug.active_supplier);
    if drug.routine_order_qty > 0.0 {
        drug.pending_orders.push(PendingOrder {
            quantity: drug.routine_order_qty,
            erd_week: week + active.lead_time_weeks.max(1),
            placed_week: week,
            expedited: false,
            source: drug.active_supplier.into(),
        });
    }

    let mut requeued = false;
    let mut i = 0;
    while i < drug.pending_orders.len() {
        let order = &mut drug.pending_orders[i];
        if order.erd_week > week {
            break;
        }
        let arrives = match order.source {
            OrderSource::Emergency => true,
            src => {
                step.orders_due += 1;
                let s = suppliers.get(if src == OrderSource::Primary {
                    SupplierSlot::Primary
                } else {
                    SupplierSlot::Alternate
                });
                !s.disrupted && rng::bernoulli(rng, s.reliability)
            }
        };
        if arrives {
            step.delivered += order.quantity;
            drug.qoh += order.quantity;
            drug.pending_orders.remove(i);
        } else {
            step.orders_failed += 1;
            order.erd_week = week + rng::uniform_int(rng, cfg.requeue_min_weeks, cfg.requeue_max_weeks);
            requeued = true;
            i += 1;
        }
    }
    if requeued {
        sort_orders(&mut drug.pending_orders);
    }

    let multiplier = (1.0 + rng::normal(rng, 0.0, demand_variation)).max(0.0);
    let demand = drug.utz * multiplier;
    step.consumed = demand.min(drug.qoh);
    drug.qoh = (drug.qoh - demand).max(0.0);
    drug.stocked_out = drug.qoh <= 0.0;
    step.stockout = drug.stocked_out;

    let event = drug.stocked_out || active.disrupted;
    let lambda = cfg.reputation_decay;
    drug.reputation = (lambda * drug.reputation + (1.0 - lambda) * if event { 1.0 } else { 0.0 }).clamp(0.0, 1.0);

    if drug.demand_drift != 0.0 {
        let f = (1.0 + drug.demand_drift).max(0.0);
        drug.base_utz *= f;
        drug.utz *= f;
        drug.routine_order_qty *= f;
    }
    step
}

/// Evolves a supplier's outage status into `next_week`.
pub fn evolve_supplier<R: Rng + ?Sized>(
    supplier: &mut SupplierState,
    index: usize,
    windows: &[DisruptionWindow],
    next_week: u32,
    rng: &mut R,
) {
    let mut scheduled = false;
    for w in windows.iter().filter(|w| w.supplier == index && w.start_week == next_week) {
        scheduled = true;
        supplier.disrupted = true;
        supplier.disrupted_until = supplier.disrupted_until.max(w.start_week + w.duration_weeks);
        supplier.recovery_hazard = w.recovery_hazard;
    }
    if !scheduled && supplier.disrupted && next_week >= supplier.disrupted_until {
        if rng::bernoulli(rng, supplier.recovery_hazard) {
            supplier.disrupted = false;
        }
    }
}

/// Per-drug score: runway bucket plus the stockout penalty.
#[inline]
pub fn drug_score(drug: &DrugTrueState, cfg: &SimConfig) -> f64 {
    let r = runway(drug.qoh, drug.utz, cfg.runway_cap);
    let mut s = cfg.bucket_score(r);
    if drug.stocked_out || (r < 1.0 && drug.qoh <= 0.0) {
        s += cfg.stockout_penalty;
    }
    s
}

/// Scores drugs that have already been advanced.
///
/// Returns the total reward (scores plus action charges) and the per-drug
/// scores without charges.
pub fn score_week(drugs: &[DrugTrueState], joint: &JointAction, cfg: &SimConfig) -> Result<(f64, Vec<f64>)> {
    let actions = joint.ordered(drugs)?;
    let (reward, scores, _) = score_ordered(drugs, &actions, cfg);
    Ok((reward, scores))
}

fn score_ordered(drugs: &[DrugTrueState], actions: &[ActionKind], cfg: &SimConfig) -> (f64, Vec<f64>, Vec<f64>) {
    let scores: Vec<f64> = drugs.iter().map(|d| drug_score(d, cfg)).collect();
    let costs: Vec<f64> = drugs
        .iter()
        .zip(actions)
        .map(|(d, &a)| cfg.action_costs.charge(a, d.lma))
        .collect();
    let reward = scores.iter().sum::<f64>() + costs.iter().sum::<f64>();
    (reward, scores, costs)
}

/// Observation noise std of inventory for the action taken this week.
#[inline]
pub fn qoh_obs_std(qoh: f64, action: ActionKind, cfg: &SimConfig) -> f64 {
    if action == ActionKind::AuditInventory {
        cfg.noise.audit_qoh_std
    } else {
        cfg.noise.passive_qoh_frac * qoh + cfg.noise.passive_qoh_abs
    }
}

#[inline]
pub fn utz_obs_std(utz: f64, cfg: &SimConfig) -> f64 {
    cfg.noise.utz_frac * utz + cfg.noise.utz_abs
}

#[inline]
pub fn erd_obs_std(action: ActionKind, cfg: &SimConfig) -> f64 {
    match action {
        ActionKind::ContactManufacturer => cfg.noise.erd_contact_std,
        ActionKind::QuerySupplierErd => cfg.noise.erd_query_std,
        _ => cfg.noise.erd_passive_std,
    }
}

/// Noisy reading of one drug after its week has been simulated.
///
/// Signals that a pharmacy knows first-hand (deliveries received, the order
/// book, whether the shelf is empty) are copied through exactly; inventory,
/// utilization and the next arrival date are Gaussian draws whose std depends
/// on the action taken. Negative draws are clamped to zero while the reported
/// std is left unchanged.
pub fn emit_observation<R: Rng + ?Sized>(
    drug: &DrugTrueState,
    week: u32,
    step: &DrugStep,
    supplier_disrupted: bool,
    action: ActionKind,
    cfg: &SimConfig,
    rng: &mut R,
) -> Observation {
    let obs_std_qoh = qoh_obs_std(drug.qoh, action, cfg);
    let obs_std_utz = utz_obs_std(drug.utz, cfg);
    let qoh_obs = rng::normal(rng, drug.qoh, obs_std_qoh).max(0.0);
    let utz_obs = rng::normal(rng, drug.utz, obs_std_utz).max(0.0);
    let next = drug.pending_orders.iter().find(|o| o.source != OrderSource::Emergency);
    let (erd_obs, obs_std_erd) = match next {
        Some(o) => {
            let s = erd_obs_std(action, cfg);
            (Some(rng::normal(rng, o.erd_week as f64, s).max(0.0)), Some(s))
        }
        None => (None, None),
    };
    Observation {
        drug: drug.id.clone(),
        week,
        qoh_obs,
        utz_obs,
        erd_obs,
        obs_std_qoh,
        obs_std_utz,
        obs_std_erd,
        audited: action == ActionKind::AuditInventory,
        stocked_out: drug.stocked_out,
        delivered: step.delivered,
        orders_due: step.orders_due,
        orders_failed: step.orders_failed,
        supplier_disrupted,
        lma: drug.lma,
        active_supplier: drug.active_supplier,
        pending_switch: drug.pending_switch,
        open_orders: drug
            .pending_orders
            .iter()
            .map(|o| KnownOrder {
                quantity: o.quantity,
                placed_week: o.placed_week,
                source: o.source,
            })
            .collect(),
    }
}

impl WorldState {
    pub fn drug_index(&self, id: &str) -> Option<usize> {
        self.drugs.iter().position(|d| d.id == id)
    }

    pub fn supplier_pair(&self, drug: &DrugTrueState) -> SupplierPair<'_> {
        SupplierPair {
            primary: &self.suppliers[drug.primary_supplier],
            alternate: &self.suppliers[drug.alternate_supplier],
        }
    }

    pub fn active_supplier(&self, drug: &DrugTrueState) -> &SupplierState {
        self.supplier_pair(drug).get(drug.active_supplier)
    }
}

/// Advances the whole world by one week under `joint`.
pub fn advance_week(
    state: &WorldState,
    joint: &JointAction,
    cfg: &SimConfig,
    seeds: EnvSeeds,
) -> Result<(WorldState, WeeklyOutcome)> {
    let actions = joint.ordered(&state.drugs)?;
    Ok(advance_week_ordered(state, &actions, cfg, seeds))
}

/// [`advance_week`] with actions already in drug order.
///
/// # Panics
/// If `actions.len()` differs from the drug count.
pub fn advance_week_ordered(
    state: &WorldState,
    actions: &[ActionKind],
    cfg: &SimConfig,
    seeds: EnvSeeds,
) -> (WorldState, WeeklyOutcome) {
    assert_eq!(actions.len(), state.drugs.len(), "one action per drug");
    let week = state.week;
    let mut next = state.clone();
    let mut outcome = WeeklyOutcome {
        week,
        reward: 0.0,
        per_drug_scores: Vec::with_capacity(state.drugs.len()),
        action_costs: Vec::with_capacity(state.drugs.len()),
        stockout_events: Vec::new(),
        deliveries: Vec::new(),
        observations: Vec::with_capacity(state.drugs.len()),
    };

    for (d, (drug, &action)) in next.drugs.iter_mut().zip(actions).enumerate() {
        let pair = SupplierPair {
            primary: &state.suppliers[drug.primary_supplier],
            alternate: &state.suppliers[drug.alternate_supplier],
        };
        let mut env = rng::stream(seeds.environment, Stream::Environment, &[week as u64, d as u64]);
        let step = step_drug(drug, pair, action, week, state.demand_variation, cfg, &mut env);
        if step.stockout {
            outcome.stockout_events.push(drug.id.clone());
        }
        if step.delivered > 0.0 {
            outcome.deliveries.push((drug.id.clone(), step.delivered));
        }
        let disrupted = pair.get(drug.active_supplier).disrupted;
        let mut obs = rng::stream(seeds.observation, Stream::Observation, &[week as u64, d as u64]);
        outcome
            .observations
            .push(emit_observation(drug, week, &step, disrupted, action, cfg, &mut obs));
    }

    let (reward, scores, costs) = score_ordered(&next.drugs, actions, cfg);
    outcome.reward = reward;
    outcome.per_drug_scores = scores;
    outcome.action_costs = costs;

    for (i, s) in next.suppliers.iter_mut().enumerate() {
        let mut r = rng::stream(seeds.environment, Stream::Supplier, &[week as u64, i as u64]);
        evolve_supplier(s, i, &state.windows, week + 1, &mut r);
    }
    next.week = week + 1;
    (next, outcome)
}
