//! Declarative scenarios and the seeded generators for the three scenario
//! sets (3-, 10- and 52-week horizons).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{self, Stream};
use crate::sim::{DisruptionWindow, WorldState};
use crate::types::{DrugTrueState, Lma, ObservationNoise, PendingOrder, SimConfig, SupplierSlot, SupplierState};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrugSpec {
    pub id: String,
    pub qoh: f64,
    pub base_utz: f64,
    pub clinical_impact: f64,
    pub reputation: f64,
    pub primary_supplier: String,
    pub alternate_supplier: String,
    pub routine_order_qty: f64,
    #[serde(default)]
    pub demand_drift: f64,
    #[serde(default)]
    pub pending_orders: Vec<PendingOrder>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisruptionSpec {
    pub start_week: u32,
    pub duration_weeks: u32,
    pub recovery_hazard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupplierSpec {
    pub id: String,
    pub reliability: f64,
    pub recovery_hazard: f64,
    pub lead_time_weeks: u32,
    #[serde(default)]
    pub disruptions: Vec<DisruptionSpec>,
}

/// A complete scenario, as stored in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub schema_version: u32,
    pub name: String,
    pub horizon_weeks: u32,
    pub seed: u64,
    pub drugs: Vec<DrugSpec>,
    pub suppliers: Vec<SupplierSpec>,
    pub demand_variation: f64,
    /// Replaces the configured observation noise when present.
    #[serde(default)]
    pub noise: Option<ObservationNoise>,
}

fn prob(field: String, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{p} is not in [0, 1]")))
    }
}

fn nonneg(field: String, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{v} must be finite and >= 0")))
    }
}

impl ScenarioSpec {
    /// Checks every invariant; errors name the offending field path.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        if self.name.is_empty() {
            return Err(Error::invalid("name", "must not be empty"));
        }
        if self.horizon_weeks == 0 {
            return Err(Error::invalid("horizon_weeks", "must be at least 1"));
        }
        nonneg("demand_variation".into(), self.demand_variation)?;
        if self.suppliers.is_empty() {
            return Err(Error::invalid("suppliers", "at least one supplier is required"));
        }
        for (i, s) in self.suppliers.iter().enumerate() {
            let at = |f: &str| format!("suppliers[{i}].{f}");
            if s.id.is_empty() {
                return Err(Error::invalid(at("id"), "must not be empty"));
            }
            if self.suppliers[..i].iter().any(|o| o.id == s.id) {
                return Err(Error::invalid(at("id"), format!("duplicate supplier id `{}`", s.id)));
            }
            prob(at("reliability"), s.reliability)?;
            prob(at("recovery_hazard"), s.recovery_hazard)?;
            if s.lead_time_weeks == 0 {
                return Err(Error::invalid(at("lead_time_weeks"), "must be at least 1"));
            }
            for (j, w) in s.disruptions.iter().enumerate() {
                if w.duration_weeks == 0 {
                    return Err(Error::invalid(at(&format!("disruptions[{j}].duration_weeks")), "must be at least 1"));
                }
                prob(at(&format!("disruptions[{j}].recovery_hazard")), w.recovery_hazard)?;
            }
        }
        if self.drugs.is_empty() {
            return Err(Error::invalid("drugs", "at least one drug is required"));
        }
        for (i, d) in self.drugs.iter().enumerate() {
            let at = |f: &str| format!("drugs[{i}].{f}");
            if d.id.is_empty() {
                return Err(Error::invalid(at("id"), "must not be empty"));
            }
            if self.drugs[..i].iter().any(|o| o.id == d.id) {
                return Err(Error::invalid(at("id"), format!("duplicate drug id `{}`", d.id)));
            }
            nonneg(at("qoh"), d.qoh)?;
            nonneg(at("base_utz"), d.base_utz)?;
            nonneg(at("routine_order_qty"), d.routine_order_qty)?;
            prob(at("clinical_impact"), d.clinical_impact)?;
            prob(at("reputation"), d.reputation)?;
            if !(d.demand_drift > -1.0 && d.demand_drift.is_finite()) {
                return Err(Error::invalid(at("demand_drift"), "must be finite and > -1"));
            }
            for (field, sid) in [("primary_supplier", &d.primary_supplier), ("alternate_supplier", &d.alternate_supplier)] {
                if !self.suppliers.iter().any(|s| &s.id == sid) {
                    return Err(Error::invalid(at(field), format!("unknown supplier `{sid}`")));
                }
            }
            for (j, o) in d.pending_orders.iter().enumerate() {
                if !(o.quantity > 0.0 && o.quantity.is_finite()) {
                    return Err(Error::invalid(at(&format!("pending_orders[{j}].quantity")), "must be positive"));
                }
                if o.erd_week < o.placed_week {
                    return Err(Error::invalid(at(&format!("pending_orders[{j}].erd_week")), "earlier than placed_week"));
                }
            }
        }
        if let Some(n) = &self.noise {
            let mut probe = SimConfig::default();
            probe.noise = *n;
            probe.validate().map_err(|e| match e {
                Error::Invalid { field, reason } => Error::Invalid {
                    field: field.replacen("sim.noise", "noise", 1),
                    reason,
                },
                other => other,
            })?;
        }
        Ok(())
    }

    /// The simulator configuration this scenario runs under.
    pub fn effective_sim(&self, base: &SimConfig) -> SimConfig {
        let mut sim = base.clone();
        if let Some(n) = self.noise {
            sim.noise = n;
        }
        sim
    }

    /// Ground truth at week 0.
    pub fn initial_world(&self) -> Result<WorldState> {
        self.validate()?;
        let supplier_index = |id: &str| self.suppliers.iter().position(|s| s.id == id).expect("validated");
        let mut windows = Vec::new();
        let mut suppliers = Vec::with_capacity(self.suppliers.len());
        for (i, s) in self.suppliers.iter().enumerate() {
            let mut state = SupplierState {
                id: s.id.clone(),
                reliability: s.reliability,
                disrupted: false,
                recovery_hazard: s.recovery_hazard,
                lead_time_weeks: s.lead_time_weeks,
                disrupted_until: 0,
            };
            for w in &s.disruptions {
                windows.push(DisruptionWindow {
                    supplier: i,
                    start_week: w.start_week,
                    duration_weeks: w.duration_weeks,
                    recovery_hazard: w.recovery_hazard,
                });
                if w.start_week == 0 {
                    state.disrupted = true;
                    state.disrupted_until = state.disrupted_until.max(w.duration_weeks);
                    state.recovery_hazard = w.recovery_hazard;
                }
            }
            suppliers.push(state);
        }
        let drugs = self
            .drugs
            .iter()
            .map(|d| {
                let mut orders = d.pending_orders.clone();
                orders.sort_by_key(|o| o.erd_week);
                DrugTrueState {
                    id: d.id.clone(),
                    qoh: d.qoh,
                    utz: d.base_utz,
                    base_utz: d.base_utz,
                    primary_supplier: supplier_index(&d.primary_supplier),
                    alternate_supplier: supplier_index(&d.alternate_supplier),
                    active_supplier: SupplierSlot::Primary,
                    pending_switch: None,
                    lma: Lma::None,
                    stocked_out: d.qoh <= 0.0,
                    reputation: d.reputation,
                    clinical_impact: d.clinical_impact,
                    routine_order_qty: d.routine_order_qty,
                    demand_drift: d.demand_drift,
                    pending_orders: orders,
                }
            })
            .collect();
        Ok(WorldState {
            week: 0,
            drugs,
            suppliers,
            windows,
            demand_variation: self.demand_variation,
        })
    }
}

/// Generator constants for one scenario set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetParams {
    pub horizon_weeks: u32,
    /// Inclusive range of drugs started at a low runway.
    pub low_runway_drugs: [u32; 2],
    pub low_runway_weeks: [f64; 2],
    pub demand_variation: f64,
    pub primary_reliability: [f64; 2],
    pub alternate_reliability: [f64; 2],
    /// Number of scheduled outages; ignored when `disruption_spacing_weeks`
    /// is set.
    pub disruptions: u32,
    /// Inclusive range of outage start weeks.
    pub disruption_start: [u32; 2],
    /// Recurring outages: one window in every block of this many weeks.
    pub disruption_spacing_weeks: Option<u32>,
    pub disruption_duration: [u32; 2],
    pub recovery_hazard: f64,
    pub demand_drift: [f64; 2],
    pub noise: Option<ObservationNoise>,
}

/// `scenario_gen` section of the experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioGenConfig {
    pub n_drugs: usize,
    pub n_primary_suppliers: usize,
    pub n_alternate_suppliers: usize,
    pub qoh_range: [f64; 2],
    pub utz_range: [f64; 2],
    pub healthy_runway_weeks: [f64; 2],
    pub clinical_levels: Vec<f64>,
    pub clinical_weights: Vec<f64>,
    /// Drugs that start with a history of salient shortages.
    pub reputation_drugs: u32,
    pub reputation_range: [f64; 2],
    /// Standing order size as a multiple of unrestricted demand.
    pub routine_cover: f64,
    pub primary_lead_time: u32,
    pub alternate_lead_time: u32,
    pub set1: SetParams,
    pub set2: SetParams,
    pub set3: SetParams,
}

impl Default for ScenarioGenConfig {
    fn default() -> Self {
        let mild = ObservationNoise {
            passive_qoh_frac: 0.05,
            utz_frac: 0.08,
            erd_passive_std: 1.0,
            ..ObservationNoise::default()
        };
        ScenarioGenConfig {
            n_drugs: 19,
            n_primary_suppliers: 5,
            n_alternate_suppliers: 2,
            qoh_range: [20.0, 400.0],
            utz_range: [5.0, 40.0],
            healthy_runway_weeks: [10.0, 16.0],
            clinical_levels: alloc::vec![0.05, 0.15, 0.3, 1.0],
            clinical_weights: alloc::vec![0.3, 0.35, 0.25, 0.1],
            reputation_drugs: 3,
            reputation_range: [0.2, 0.5],
            routine_cover: 1.0,
            primary_lead_time: 2,
            alternate_lead_time: 1,
            set1: SetParams {
                horizon_weeks: 3,
                low_runway_drugs: [2, 4],
                low_runway_weeks: [1.0, 3.0],
                demand_variation: 0.05,
                primary_reliability: [0.92, 0.98],
                alternate_reliability: [0.85, 0.95],
                disruptions: 0,
                disruption_start: [0, 0],
                disruption_spacing_weeks: None,
                disruption_duration: [1, 1],
                recovery_hazard: 0.5,
                demand_drift: [0.0, 0.0],
                noise: Some(mild),
            },
            set2: SetParams {
                horizon_weeks: 10,
                low_runway_drugs: [1, 2],
                low_runway_weeks: [1.5, 3.0],
                demand_variation: 0.10,
                primary_reliability: [0.80, 0.92],
                alternate_reliability: [0.85, 0.95],
                disruptions: 2,
                disruption_start: [3, 6],
                disruption_spacing_weeks: None,
                disruption_duration: [2, 4],
                recovery_hazard: 0.5,
                demand_drift: [0.0, 0.0],
                noise: None,
            },
            set3: SetParams {
                horizon_weeks: 52,
                low_runway_drugs: [1, 2],
                low_runway_weeks: [1.0, 2.0],
                demand_variation: 0.15,
                primary_reliability: [0.80, 0.95],
                alternate_reliability: [0.85, 0.95],
                disruptions: 0,
                disruption_start: [3, 6],
                disruption_spacing_weeks: Some(8),
                disruption_duration: [3, 7],
                recovery_hazard: 0.4,
                demand_drift: [-0.003, 0.006],
                noise: None,
            },
        }
    }
}

fn check_range<T: PartialOrd + Copy + core::fmt::Display>(field: &str, r: [T; 2]) -> Result<()> {
    if r[0] <= r[1] {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("range [{}, {}] is reversed", r[0], r[1])))
    }
}

impl ScenarioGenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_drugs == 0 {
            return Err(Error::invalid("scenario_gen.n_drugs", "must be at least 1"));
        }
        if self.n_primary_suppliers == 0 || self.n_alternate_suppliers == 0 {
            return Err(Error::invalid("scenario_gen.n_primary_suppliers", "need at least one primary and one alternate supplier"));
        }
        check_range("scenario_gen.qoh_range", self.qoh_range)?;
        check_range("scenario_gen.utz_range", self.utz_range)?;
        check_range("scenario_gen.healthy_runway_weeks", self.healthy_runway_weeks)?;
        check_range("scenario_gen.reputation_range", self.reputation_range)?;
        if self.clinical_levels.is_empty() || self.clinical_levels.len() != self.clinical_weights.len() {
            return Err(Error::invalid("scenario_gen.clinical_weights", "needs one weight per clinical level"));
        }
        if self.clinical_weights.iter().any(|w| !(*w >= 0.0)) || !(self.clinical_weights.iter().sum::<f64>() > 0.0) {
            return Err(Error::invalid("scenario_gen.clinical_weights", "weights must be non-negative with a positive sum"));
        }
        if self.primary_lead_time == 0 || self.alternate_lead_time == 0 {
            return Err(Error::invalid("scenario_gen.primary_lead_time", "lead times must be at least 1"));
        }
        for (name, p) in [("set1", &self.set1), ("set2", &self.set2), ("set3", &self.set3)] {
            let at = |f: &str| format!("scenario_gen.{name}.{f}");
            if p.horizon_weeks == 0 {
                return Err(Error::invalid(at("horizon_weeks"), "must be at least 1"));
            }
            check_range(&at("low_runway_drugs"), p.low_runway_drugs)?;
            if p.low_runway_drugs[1] as usize > self.n_drugs {
                return Err(Error::invalid(at("low_runway_drugs"), "more low-runway drugs than drugs"));
            }
            check_range(&at("low_runway_weeks"), p.low_runway_weeks)?;
            check_range(&at("primary_reliability"), p.primary_reliability)?;
            check_range(&at("alternate_reliability"), p.alternate_reliability)?;
            check_range(&at("disruption_start"), p.disruption_start)?;
            check_range(&at("disruption_duration"), p.disruption_duration)?;
            check_range(&at("demand_drift"), p.demand_drift)?;
            if p.disruption_duration[0] == 0 {
                return Err(Error::invalid(at("disruption_duration"), "outages last at least one week"));
            }
            if p.disruption_spacing_weeks == Some(0) {
                return Err(Error::invalid(at("disruption_spacing_weeks"), "must be at least 1"));
            }
        }
        Ok(())
    }

    fn set(&self, set: u8) -> Result<&SetParams> {
        match set {
            1 => Ok(&self.set1),
            2 => Ok(&self.set2),
            3 => Ok(&self.set3),
            other => Err(Error::UnknownScenarioSet(other)),
        }
    }
}

/// Scenario for `set` with the default generator constants.
pub fn generate_scenario(set: u8, seed: u64) -> Result<ScenarioSpec> {
    generate_scenario_with(set, seed, &ScenarioGenConfig::default())
}

fn round2(x: f64) -> f64 {
    libm::round(x * 100.0) / 100.0
}

/// Scenario for `set`; a pure function of `(set, seed, gen)`.
pub fn generate_scenario_with(set: u8, seed: u64, gen: &ScenarioGenConfig) -> Result<ScenarioSpec> {
    let p = gen.set(set)?;
    gen.validate()?;
    let mut r = rng::stream(seed, Stream::Scenario, &[set as u64]);

    let mut suppliers = Vec::new();
    for i in 0..gen.n_primary_suppliers {
        suppliers.push(SupplierSpec {
            id: format!("P{}", i + 1),
            reliability: round2(rng::uniform(&mut r, p.primary_reliability[0], p.primary_reliability[1])),
            recovery_hazard: p.recovery_hazard,
            lead_time_weeks: gen.primary_lead_time,
            disruptions: Vec::new(),
        });
    }
    for i in 0..gen.n_alternate_suppliers {
        suppliers.push(SupplierSpec {
            id: format!("A{}", i + 1),
            reliability: round2(rng::uniform(&mut r, p.alternate_reliability[0], p.alternate_reliability[1])),
            recovery_hazard: p.recovery_hazard,
            lead_time_weeks: gen.alternate_lead_time,
            disruptions: Vec::new(),
        });
    }

    let mut starts = Vec::new();
    match p.disruption_spacing_weeks {
        Some(spacing) => {
            let mut block = 0;
            loop {
                let start = p.disruption_start[0] + block * spacing
                    + rng::uniform_int(&mut r, 0, p.disruption_start[1] - p.disruption_start[0]);
                if start + 2 >= p.horizon_weeks {
                    break;
                }
                starts.push(start);
                block += 1;
            }
        }
        None => {
            for _ in 0..p.disruptions {
                starts.push(rng::uniform_int(&mut r, p.disruption_start[0], p.disruption_start[1]));
            }
        }
    }
    let mut last_hit = usize::MAX;
    for start in starts {
        let mut s = r.random_range(0..gen.n_primary_suppliers);
        if s == last_hit && gen.n_primary_suppliers > 1 {
            s = (s + 1) % gen.n_primary_suppliers;
        }
        last_hit = s;
        suppliers[s].disruptions.push(DisruptionSpec {
            start_week: start,
            duration_weeks: rng::uniform_int(&mut r, p.disruption_duration[0], p.disruption_duration[1]),
            recovery_hazard: p.recovery_hazard,
        });
    }

    let n = gen.n_drugs;
    let n_low = rng::uniform_int(&mut r, p.low_runway_drugs[0], p.low_runway_drugs[1]) as usize;
    let low: Vec<usize> = sample(&mut r, n, n_low.min(n)).into_vec();
    let famous: Vec<usize> = sample(&mut r, n, (gen.reputation_drugs as usize).min(n)).into_vec();
    let weight_total: f64 = gen.clinical_weights.iter().sum();

    let mut drugs = Vec::with_capacity(n);
    for i in 0..n {
        let primary = i % gen.n_primary_suppliers;
        let alternate = gen.n_primary_suppliers + i % gen.n_alternate_suppliers;
        let short = low.contains(&i);
        let (qoh, base_utz) = if short {
            let weeks = rng::uniform(&mut r, p.low_runway_weeks[0], p.low_runway_weeks[1]);
            let utz_floor = (gen.qoh_range[0] / weeks).max(gen.utz_range[0]).min(gen.utz_range[1]);
            let utz = round2(rng::uniform(&mut r, utz_floor, gen.utz_range[1]));
            (round2(weeks * utz), utz)
        } else {
            let weeks = rng::uniform(&mut r, gen.healthy_runway_weeks[0], gen.healthy_runway_weeks[1]);
            let utz = round2(rng::uniform(&mut r, gen.utz_range[0], gen.utz_range[1]));
            (round2((weeks * utz).clamp(gen.qoh_range[0], gen.qoh_range[1])), utz)
        };
        let mut pick = rng::uniform(&mut r, 0.0, weight_total);
        let mut clinical = *gen.clinical_levels.last().expect("validated");
        for (level, w) in gen.clinical_levels.iter().zip(&gen.clinical_weights) {
            if pick < *w {
                clinical = *level;
                break;
            }
            pick -= w;
        }
        let reputation = if famous.contains(&i) {
            round2(rng::uniform(&mut r, gen.reputation_range[0], gen.reputation_range[1]))
        } else {
            0.0
        };
        let drift = libm::round(rng::uniform(&mut r, p.demand_drift[0], p.demand_drift[1]) * 1e5) / 1e5;
        let routine = round2(base_utz * gen.routine_cover);
        // Drugs that start short have also had their last orders shorted.
        let pipeline = if short { 0 } else { gen.primary_lead_time };
        let pending_orders = (0..pipeline)
            .map(|w| PendingOrder {
                quantity: routine,
                erd_week: w,
                placed_week: 0,
                expedited: false,
                source: crate::types::OrderSource::Primary,
            })
            .filter(|o| o.quantity > 0.0)
            .collect();
        drugs.push(DrugSpec {
            id: format!("D{:02}", i + 1),
            qoh,
            base_utz,
            clinical_impact: clinical,
            reputation,
            primary_supplier: suppliers[primary].id.clone(),
            alternate_supplier: suppliers[alternate].id.clone(),
            routine_order_qty: routine,
            demand_drift: drift,
            pending_orders,
        });
    }

    let spec = ScenarioSpec {
        schema_version: SCHEMA_VERSION,
        name: format!("set{set}-seed{seed}"),
        horizon_weeks: p.horizon_weeks,
        seed,
        drugs,
        suppliers,
        demand_variation: p.demand_variation,
        noise: p.noise,
    };
    spec.validate()?;
    Ok(spec)
}
