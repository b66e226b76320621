//! The shared online planner.
//!
//! For one drug, every candidate action is scored by Monte-Carlo rollouts:
//! particles are sampled from the belief, the candidate is applied in the
//! first simulated week and a fixed rollout policy afterwards, and the
//! discounted per-drug reward is averaged. Rollout `m` of drug `d` always
//! draws from the same stream whatever the candidate, so candidates are
//! compared under common random numbers and the result does not depend on
//! which other drugs are being planned.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::belief::DrugBelief;
use crate::rng::{self, Stream, StreamRng};
use crate::sim::{drug_score, evolve_supplier, step_drug, KnownOrder, SupplierPair};
use crate::types::{
    runway, ActionKind, DrugTrueState, Lma, OrderSource, PendingOrder, PendingSwitch, SimConfig, SupplierSlot,
    SupplierState,
};
use crate::{Error, Result};

/// Policy followed after the first simulated week of a rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RolloutPolicy {
    /// Audit when the tracked inventory std is high, buy on the gray market
    /// below one week of runway, soft-restrict below three, else monitor.
    #[default]
    GreedyRunway,
    /// One-step lookahead over the candidate set.
    Myopic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub horizon: u32,
    pub rollouts: u32,
    pub discount: f64,
    pub rollout_policy: RolloutPolicy,
    /// Restricts the candidate actions; all twelve when absent.
    pub candidates: Option<Vec<ActionKind>>,
    /// Inventory std above which the greedy rollout policy audits.
    pub audit_std_threshold: f64,
    /// When false the planner is skipped and every drug is monitored.
    pub enabled: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            horizon: 6,
            rollouts: 64,
            discount: 0.95,
            rollout_policy: RolloutPolicy::GreedyRunway,
            candidates: None,
            audit_std_threshold: 20.0,
            enabled: true,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("planner.horizon", "must be at least 1"));
        }
        if self.rollouts == 0 {
            return Err(Error::invalid("planner.rollouts", "must be at least 1"));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::invalid("planner.discount", "must lie in (0, 1]"));
        }
        if let Some(c) = &self.candidates {
            if c.is_empty() {
                return Err(Error::invalid("planner.candidates", "must not be empty"));
            }
        }
        Ok(())
    }

    fn candidate_set(&self) -> &[ActionKind] {
        self.candidates.as_deref().unwrap_or(&ActionKind::ALL)
    }
}

/// What the pharmacy knows about a drug's supply side.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyView {
    /// Believed supplier states; the active one carries the reliability
    /// estimate and the observed outage flag.
    pub primary: SupplierState,
    pub alternate: SupplierState,
    pub active: SupplierSlot,
    pub pending_switch: Option<PendingSwitch>,
    pub open_orders: Vec<KnownOrder>,
    pub routine_order_qty: f64,
    pub demand_variation: f64,
}

/// Planner input for one drug.
#[derive(Debug, Clone, Copy)]
pub struct DrugPlanInput<'a> {
    /// Position of the drug in the scenario; keys its random streams.
    pub index: usize,
    pub belief: &'a DrugBelief,
    pub supply: &'a SupplyView,
    pub week: u32,
}

const POINT_MASS_STD: f64 = 1e-9;

#[inline]
fn sample_nonneg(rng: &mut StreamRng, mean: f64, std: f64) -> f64 {
    if std <= POINT_MASS_STD {
        mean.max(0.0)
    } else {
        rng::normal(rng, mean, std).max(0.0)
    }
}

struct Particle {
    drug: DrugTrueState,
    primary: SupplierState,
    alternate: SupplierState,
    qoh_std: f64,
}

fn sample_particle(input: &DrugPlanInput<'_>, cfg: &SimConfig, rng: &mut StreamRng) -> Particle {
    let b = input.belief;
    let s = input.supply;
    let qoh = sample_nonneg(rng, b.qoh_mean, b.qoh_std);
    let utz = sample_nonneg(rng, b.utz_mean, b.utz_std);
    let keep = 1.0 - cfg.lma_effect(b.lma_known);
    let base_utz = if keep > 0.0 { utz / keep } else { utz };

    let lead = |src: OrderSource| match src {
        OrderSource::Primary => s.primary.lead_time_weeks.max(1),
        OrderSource::Alternate => s.alternate.lead_time_weeks.max(1),
        OrderSource::Emergency => cfg.emergency_latency_weeks,
    };
    let mut first_routine = true;
    let mut orders: Vec<PendingOrder> = Vec::with_capacity(s.open_orders.len());
    for o in &s.open_orders {
        let nominal = (o.placed_week + lead(o.source)).max(input.week);
        let erd_week = match (o.source, first_routine, b.erd_mean, b.erd_std) {
            (OrderSource::Emergency, ..) => nominal,
            (_, true, Some(m), Some(sd)) => {
                first_routine = false;
                let e = if sd <= POINT_MASS_STD { m } else { rng::normal(rng, m, sd) };
                libm::round(e).max(input.week as f64) as u32
            }
            _ => {
                first_routine = false;
                nominal
            }
        };
        orders.push(PendingOrder {
            quantity: o.quantity,
            erd_week,
            placed_week: o.placed_week,
            expedited: false,
            source: o.source,
        });
    }
    orders.sort_by_key(|o| o.erd_week);

    let mut primary = s.primary.clone();
    let mut alternate = s.alternate.clone();
    primary.disrupted_until = 0;
    alternate.disrupted_until = 0;

    Particle {
        drug: DrugTrueState {
            id: alloc::string::String::new(),
            qoh,
            utz,
            base_utz,
            primary_supplier: 0,
            alternate_supplier: 1,
            active_supplier: s.active,
            pending_switch: s.pending_switch,
            lma: b.lma_known,
            stocked_out: false,
            reputation: b.reputation,
            clinical_impact: b.clinical_impact,
            routine_order_qty: s.routine_order_qty,
            demand_drift: 0.0,
            pending_orders: orders,
        },
        primary,
        alternate,
        qoh_std: b.qoh_std,
    }
}

fn greedy_runway(p: &Particle, cfg: &SimConfig, planner: &PlannerConfig) -> ActionKind {
    let r = runway(p.drug.qoh, p.drug.utz, cfg.runway_cap);
    if p.qoh_std > planner.audit_std_threshold {
        ActionKind::AuditInventory
    } else if r < 1.0 {
        ActionKind::GrayMarketBuy
    } else if r < 3.0 && p.drug.lma == Lma::None {
        ActionKind::ApplySoftLma
    } else {
        ActionKind::Monitor
    }
}

/// Simulates one week of a particle and returns the undiscounted reward.
fn step_particle(p: &mut Particle, action: ActionKind, week: u32, dv: f64, cfg: &SimConfig, rng: &mut StreamRng) -> f64 {
    let pair = SupplierPair {
        primary: &p.primary,
        alternate: &p.alternate,
    };
    step_drug(&mut p.drug, pair, action, week, dv, cfg, rng);
    let reward = drug_score(&p.drug, cfg) + cfg.action_costs.charge(action, p.drug.lma);
    p.qoh_std = if action == ActionKind::AuditInventory {
        cfg.noise.audit_qoh_std
    } else {
        (p.qoh_std + cfg.belief.diffusion_qoh).min(cfg.belief.qoh_std_cap)
    };
    evolve_supplier(&mut p.primary, 0, &[], week + 1, rng);
    evolve_supplier(&mut p.alternate, 1, &[], week + 1, rng);
    reward
}

/// Picks the best of `values` (indexed like `actions`): highest value, then
/// the cheaper action, then enumeration order.
fn best_action(actions: &[ActionKind], values: &[f64], cfg: &SimConfig) -> ActionKind {
    let mut best = 0;
    for i in 1..actions.len() {
        let (v, bv) = (values[i], values[best]);
        let (c, bc) = (cfg.action_costs.get(actions[i]), cfg.action_costs.get(actions[best]));
        let better = v > bv || (v == bv && (c > bc || (c == bc && actions[i].index() < actions[best].index())));
        if better {
            best = i;
        }
    }
    actions[best]
}

fn particle_clone(p: &Particle) -> Particle {
    Particle {
        drug: p.drug.clone(),
        primary: p.primary.clone(),
        alternate: p.alternate.clone(),
        qoh_std: p.qoh_std,
    }
}

fn myopic(p: &Particle, week: u32, dv: f64, candidates: &[ActionKind], cfg: &SimConfig, rng: &StreamRng) -> ActionKind {
    let values: Vec<f64> = candidates
        .iter()
        .map(|&a| {
            let mut q = particle_clone(p);
            let mut r = rng.clone();
            step_particle(&mut q, a, week, dv, cfg, &mut r)
        })
        .collect();
    best_action(candidates, &values, cfg)
}

/// Mean discounted rollout value of every candidate action, in candidate
/// order.
pub fn candidate_values(input: &DrugPlanInput<'_>, cfg: &SimConfig, planner: &PlannerConfig, seed: u64) -> Vec<(ActionKind, f64)> {
    let candidates = planner.candidate_set();
    let dv = input.supply.demand_variation;
    let mut totals = alloc::vec![0.0f64; candidates.len()];
    for m in 0..planner.rollouts {
        let mut sampler = rng::stream(seed, Stream::Rollout, &[input.index as u64, m as u64]);
        let start = sample_particle(input, cfg, &mut sampler);
        for (slot, &candidate) in candidates.iter().enumerate() {
            let mut p = particle_clone(&start);
            let mut r = sampler.clone();
            let mut value = 0.0;
            let mut discount = 1.0;
            for h in 0..planner.horizon {
                let week = input.week + h;
                let action = if h == 0 {
                    candidate
                } else {
                    match planner.rollout_policy {
                        RolloutPolicy::GreedyRunway => greedy_runway(&p, cfg, planner),
                        RolloutPolicy::Myopic => myopic(&p, week, dv, candidates, cfg, &r),
                    }
                };
                value += discount * step_particle(&mut p, action, week, dv, cfg, &mut r);
                discount *= planner.discount;
            }
            totals[slot] += value;
        }
    }
    let n = planner.rollouts as f64;
    candidates.iter().zip(totals).map(|(&a, t)| (a, t / n)).collect()
}

/// Best action for one drug by Monte-Carlo rollout.
pub fn plan_drug(input: &DrugPlanInput<'_>, cfg: &SimConfig, planner: &PlannerConfig, seed: u64) -> ActionKind {
    let scored = candidate_values(input, cfg, planner, seed);
    let (actions, values): (Vec<ActionKind>, Vec<f64>) = scored.into_iter().unzip();
    best_action(&actions, &values, cfg)
}

/// Plans every drug in `focus` and monitors the rest.
pub fn plan_joint(inputs: &[DrugPlanInput<'_>], focus: &[usize], cfg: &SimConfig, planner: &PlannerConfig, seed: u64) -> Result<Vec<ActionKind>> {
    let mut actions = alloc::vec![ActionKind::Monitor; inputs.len()];
    for &d in focus {
        let input = inputs
            .get(d)
            .ok_or_else(|| Error::Contract(alloc::format!("focus index {d} outside {} drugs", inputs.len())))?;
        if planner.enabled {
            actions[d] = plan_drug(input, cfg, planner, seed);
        }
    }
    Ok(actions)
}
