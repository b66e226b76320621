//! Shared domain vocabulary: drugs, suppliers, actions, simulator constants
//! and the runway computation.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Weeks of supply remaining.
///
/// Returns `qoh / utz` clamped to `[0, runway_cap]`, or `runway_cap` when
/// nothing is being consumed.
pub fn compute_runway(qoh: f64, utz: f64, runway_cap: f64) -> Result<f64> {
    if !(qoh >= 0.0) || !(utz >= 0.0) || !(runway_cap > 0.0) {
        return Err(Error::Contract(format!(
            "compute_runway(qoh={qoh}, utz={utz}, cap={runway_cap}) requires qoh >= 0, utz >= 0, cap > 0"
        )));
    }
    Ok(runway(qoh, utz, runway_cap))
}

/// Unchecked runway for hot paths; callers guarantee the preconditions.
#[inline]
pub(crate) fn runway(qoh: f64, utz: f64, cap: f64) -> f64 {
    if utz <= 0.0 {
        cap
    } else {
        (qoh / utz).clamp(0.0, cap)
    }
}

/// Usage restriction ("limited medical alternatives") in force for a drug.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub enum Lma {
    #[default]
    None,
    Soft,
    Hard,
}

impl Lma {
    pub fn as_str(self) -> &'static str {
        match self {
            Lma::None => "None",
            Lma::Soft => "Soft",
            Lma::Hard => "Hard",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionCategory {
    Monitoring,
    DemandLimits,
    InformationGathering,
    SwitchingSuppliers,
    Emergency,
}

/// The twelve weekly interventions available for each drug.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    Monitor,
    AuditInventory,
    #[serde(rename = "ApplySoftLMA")]
    ApplySoftLma,
    #[serde(rename = "ApplyHardLMA")]
    ApplyHardLma,
    #[serde(rename = "LiftLMA")]
    LiftLma,
    ContactManufacturer,
    #[serde(rename = "QuerySupplierERD")]
    QuerySupplierErd,
    SwitchToAlternate,
    SwitchToPrimary,
    ExpediteOrder,
    EmergencyBuy,
    GrayMarketBuy,
}

impl ActionKind {
    /// Enumeration order; also the final planner tie-break.
    pub const ALL: [ActionKind; 12] = [
        ActionKind::Monitor,
        ActionKind::AuditInventory,
        ActionKind::ApplySoftLma,
        ActionKind::ApplyHardLma,
        ActionKind::LiftLma,
        ActionKind::ContactManufacturer,
        ActionKind::QuerySupplierErd,
        ActionKind::SwitchToAlternate,
        ActionKind::SwitchToPrimary,
        ActionKind::ExpediteOrder,
        ActionKind::EmergencyBuy,
        ActionKind::GrayMarketBuy,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn category(self) -> ActionCategory {
        use ActionKind::*;
        match self {
            Monitor | AuditInventory => ActionCategory::Monitoring,
            ApplySoftLma | ApplyHardLma | LiftLma => ActionCategory::DemandLimits,
            ContactManufacturer | QuerySupplierErd => ActionCategory::InformationGathering,
            SwitchToAlternate | SwitchToPrimary | ExpediteOrder => ActionCategory::SwitchingSuppliers,
            EmergencyBuy | GrayMarketBuy => ActionCategory::Emergency,
        }
    }

    pub fn as_str(self) -> &'static str {
        use ActionKind::*;
        match self {
            Monitor => "Monitor",
            AuditInventory => "AuditInventory",
            ApplySoftLma => "ApplySoftLMA",
            ApplyHardLma => "ApplyHardLMA",
            LiftLma => "LiftLMA",
            ContactManufacturer => "ContactManufacturer",
            QuerySupplierErd => "QuerySupplierERD",
            SwitchToAlternate => "SwitchToAlternate",
            SwitchToPrimary => "SwitchToPrimary",
            ExpediteOrder => "ExpediteOrder",
            EmergencyBuy => "EmergencyBuy",
            GrayMarketBuy => "GrayMarketBuy",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ActionKind::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::invalid("action", format!("unknown action `{s}`")))
    }
}

/// Which of a drug's two contracted suppliers an order or switch refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SupplierSlot {
    #[default]
    Primary,
    Alternate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderSource {
    Primary,
    Alternate,
    /// Reserve warehouse / loan network purchase; not subject to supplier
    /// reliability or disruption.
    Emergency,
}

impl From<SupplierSlot> for OrderSource {
    fn from(slot: SupplierSlot) -> Self {
        match slot {
            SupplierSlot::Primary => OrderSource::Primary,
            SupplierSlot::Alternate => OrderSource::Alternate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendingOrder {
    pub quantity: f64,
    /// Supplier-quoted arrival week. The true arrival is decided when the
    /// order falls due.
    pub erd_week: u32,
    pub placed_week: u32,
    #[serde(default)]
    pub expedited: bool,
    pub source: OrderSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendingSwitch {
    pub to: SupplierSlot,
    pub effective_week: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplierState {
    pub id: String,
    pub reliability: f64,
    pub disrupted: bool,
    pub recovery_hazard: f64,
    pub lead_time_weeks: u32,
    /// A scheduled disruption cannot end before this week.
    pub disrupted_until: u32,
}

/// Ground truth for one drug.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrugTrueState {
    pub id: String,
    pub qoh: f64,
    pub utz: f64,
    pub base_utz: f64,
    /// Indices into the world's supplier table.
    pub primary_supplier: usize,
    pub alternate_supplier: usize,
    pub active_supplier: SupplierSlot,
    pub pending_switch: Option<PendingSwitch>,
    pub lma: Lma,
    pub stocked_out: bool,
    pub reputation: f64,
    pub clinical_impact: f64,
    /// Standing weekly order placed with the active supplier.
    pub routine_order_qty: f64,
    /// Multiplicative weekly drift of unrestricted demand.
    pub demand_drift: f64,
    /// Open orders, sorted by `erd_week`.
    pub pending_orders: Vec<PendingOrder>,
}

impl DrugTrueState {
    pub fn runway(&self, cap: f64) -> f64 {
        runway(self.qoh, self.utz, cap)
    }
}

/// A runway bucket: drugs whose runway is at least `lower` (and below the
/// previous bucket's bound) earn `score` for the week.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardBucket {
    pub lower: f64,
    pub score: f64,
}

/// Per-action weekly charges. Serialized as a map from action name to cost.
///
/// The entries for `ApplySoftLMA` and `ApplyHardLMA` are weekly holding
/// costs: they are charged every week the restriction is in force, not only
/// in the week it is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionCosts([f64; 12]);

impl ActionCosts {
    pub fn new(costs: [f64; 12]) -> Self {
        ActionCosts(costs)
    }

    #[inline]
    pub fn get(&self, a: ActionKind) -> f64 {
        self.0[a.index()]
    }

    pub fn set(&mut self, a: ActionKind, cost: f64) {
        self.0[a.index()] = cost;
    }

    /// Weekly charge for taking `action` with `lma_after` in force afterwards.
    #[inline]
    pub fn charge(&self, action: ActionKind, lma_after: Lma) -> f64 {
        let direct = match action {
            ActionKind::ApplySoftLma | ActionKind::ApplyHardLma => 0.0,
            a => self.get(a),
        };
        let holding = match lma_after {
            Lma::None => 0.0,
            Lma::Soft => self.get(ActionKind::ApplySoftLma),
            Lma::Hard => self.get(ActionKind::ApplyHardLma),
        };
        direct + holding
    }
}

impl Default for ActionCosts {
    fn default() -> Self {
        ActionCosts([0.0, -2.0, -1.0, -4.0, 0.0, -3.0, -1.0, -5.0, -5.0, -4.0, -50.0, -200.0])
    }
}

impl Serialize for ActionCosts {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<ActionKind, f64> = ActionKind::ALL.iter().map(|&a| (a, self.get(a))).collect();
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ActionCosts {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let map = BTreeMap::<ActionKind, f64>::deserialize(d)?;
        let mut costs = [0.0; 12];
        for a in ActionKind::ALL {
            costs[a.index()] = *map
                .get(&a)
                .ok_or_else(|| serde::de::Error::custom(format!("missing cost for action `{a}`")))?;
        }
        Ok(ActionCosts(costs))
    }
}

/// Observation noise model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservationNoise {
    pub audit_qoh_std: f64,
    pub passive_qoh_frac: f64,
    pub passive_qoh_abs: f64,
    pub utz_frac: f64,
    pub utz_abs: f64,
    pub erd_passive_std: f64,
    pub erd_query_std: f64,
    pub erd_contact_std: f64,
}

impl Default for ObservationNoise {
    fn default() -> Self {
        ObservationNoise {
            audit_qoh_std: 1.0,
            passive_qoh_frac: 0.06,
            passive_qoh_abs: 2.0,
            utz_frac: 0.08,
            utz_abs: 0.5,
            erd_passive_std: 2.0,
            erd_query_std: 1.0,
            erd_contact_std: 0.3,
        }
    }
}

/// Belief-filter constants: weekly diffusion of uncertainty and std caps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeliefParams {
    pub diffusion_qoh: f64,
    pub diffusion_utz: f64,
    pub diffusion_erd: f64,
    pub qoh_std_cap: f64,
    pub utz_std_cap: f64,
    pub erd_std_cap: f64,
    /// Floor for means in relative-error propagation and for stds.
    pub epsilon: f64,
    /// Step size of the supplier-reliability moving estimate.
    pub reliability_rate: f64,
}

impl Default for BeliefParams {
    fn default() -> Self {
        BeliefParams {
            diffusion_qoh: 2.0,
            diffusion_utz: 0.5,
            diffusion_erd: 0.25,
            qoh_std_cap: 40.0,
            utz_std_cap: 10.0,
            erd_std_cap: 6.0,
            epsilon: 1e-6,
            reliability_rate: 0.1,
        }
    }
}

/// Every constant of the weekly dynamics and the reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub runway_cap: f64,
    pub reward_buckets: Vec<RewardBucket>,
    pub stockout_penalty: f64,
    pub action_costs: ActionCosts,
    pub noise: ObservationNoise,
    pub belief: BeliefParams,
    pub soft_lma_effect: f64,
    pub hard_lma_effect: f64,
    pub lma_compliance_std: f64,
    pub switch_delay_weeks: u32,
    pub requeue_min_weeks: u32,
    pub requeue_max_weeks: u32,
    pub emergency_buy_multiple: f64,
    pub emergency_latency_weeks: u32,
    pub gray_market_multiple: f64,
    pub expedite_success: f64,
    pub reputation_decay: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            runway_cap: 999.0,
            reward_buckets: alloc::vec![
                RewardBucket { lower: 8.0, score: 10.0 },
                RewardBucket { lower: 4.0, score: 6.0 },
                RewardBucket { lower: 2.0, score: 2.0 },
                RewardBucket { lower: 1.0, score: -5.0 },
                RewardBucket { lower: 0.0, score: -20.0 },
            ],
            stockout_penalty: -10_000.0,
            action_costs: ActionCosts::default(),
            noise: ObservationNoise::default(),
            belief: BeliefParams::default(),
            soft_lma_effect: 0.10,
            hard_lma_effect: 0.40,
            lma_compliance_std: 0.05,
            switch_delay_weeks: 2,
            requeue_min_weeks: 1,
            requeue_max_weeks: 3,
            emergency_buy_multiple: 4.0,
            emergency_latency_weeks: 1,
            gray_market_multiple: 2.0,
            expedite_success: 0.7,
            reputation_decay: 0.9,
        }
    }
}

fn check_prob(field: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{p} is not a probability in [0, 1]")))
    }
}

fn check_positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{v} must be positive and finite")))
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("sim.runway_cap", self.runway_cap)?;
        if self.reward_buckets.is_empty() {
            return Err(Error::invalid("sim.reward_buckets", "at least one bucket is required"));
        }
        for (i, pair) in self.reward_buckets.windows(2).enumerate() {
            if !(pair[0].lower > pair[1].lower) {
                return Err(Error::invalid(
                    format!("sim.reward_buckets[{}].lower", i + 1),
                    "lower bounds must be strictly decreasing",
                ));
            }
        }
        if self.reward_buckets.last().map(|b| b.lower) != Some(0.0) {
            return Err(Error::invalid(
                format!("sim.reward_buckets[{}].lower", self.reward_buckets.len() - 1),
                "the last bucket must start at 0",
            ));
        }
        if !(self.stockout_penalty < 0.0) {
            return Err(Error::invalid("sim.stockout_penalty", "must be negative"));
        }
        for a in ActionKind::ALL {
            if !(self.action_costs.get(a) <= 0.0) {
                return Err(Error::invalid(format!("sim.action_costs.{a}"), "costs must be <= 0"));
            }
        }
        let n = &self.noise;
        for (name, v) in [
            ("sim.noise.audit_qoh_std", n.audit_qoh_std),
            ("sim.noise.erd_passive_std", n.erd_passive_std),
            ("sim.noise.erd_query_std", n.erd_query_std),
            ("sim.noise.erd_contact_std", n.erd_contact_std),
            ("sim.belief.qoh_std_cap", self.belief.qoh_std_cap),
            ("sim.belief.utz_std_cap", self.belief.utz_std_cap),
            ("sim.belief.erd_std_cap", self.belief.erd_std_cap),
            ("sim.belief.epsilon", self.belief.epsilon),
        ] {
            check_positive(name, v)?;
        }
        if !(n.passive_qoh_abs > n.audit_qoh_std) || n.passive_qoh_frac < 0.0 {
            return Err(Error::invalid(
                "sim.noise.passive_qoh_abs",
                "passive inventory noise must exceed the audit floor",
            ));
        }
        if !(n.utz_abs > 0.0) || n.utz_frac < 0.0 {
            return Err(Error::invalid("sim.noise.utz_abs", "must be positive"));
        }
        check_prob("sim.soft_lma_effect", self.soft_lma_effect)?;
        check_prob("sim.hard_lma_effect", self.hard_lma_effect)?;
        check_prob("sim.expedite_success", self.expedite_success)?;
        check_prob("sim.reputation_decay", self.reputation_decay)?;
        check_prob("sim.belief.reliability_rate", self.belief.reliability_rate)?;
        if self.requeue_min_weeks == 0 || self.requeue_max_weeks < self.requeue_min_weeks {
            return Err(Error::invalid("sim.requeue_max_weeks", "requeue range must be 1 <= min <= max"));
        }
        if self.emergency_latency_weeks == 0 {
            return Err(Error::invalid("sim.emergency_latency_weeks", "must be at least one week"));
        }
        Ok(())
    }

    /// Demand reduction fraction of a restriction level.
    #[inline]
    pub fn lma_effect(&self, lma: Lma) -> f64 {
        match lma {
            Lma::None => 0.0,
            Lma::Soft => self.soft_lma_effect,
            Lma::Hard => self.hard_lma_effect,
        }
    }

    /// Score of the bucket containing `runway`.
    #[inline]
    pub fn bucket_score(&self, runway: f64) -> f64 {
        for b in &self.reward_buckets {
            if runway >= b.lower {
                return b.score;
            }
        }
        self.reward_buckets.last().map_or(0.0, |b| b.score)
    }
}
