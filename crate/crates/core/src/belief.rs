//! Per-drug Gaussian beliefs.
//!
//! Inventory, utilization and the next routine arrival date are tracked as
//! independent scalar Gaussians. `predict` pushes the belief through one week
//! of expected consumption and grows the stds; `update` is the conjugate
//! correction from an [`Observation`].

use serde::{Deserialize, Serialize};

use crate::sim::Observation;
use crate::types::{runway, BeliefParams, Lma, OrderSource, SimConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrugBelief {
    pub qoh_mean: f64,
    pub qoh_std: f64,
    pub utz_mean: f64,
    pub utz_std: f64,
    /// Week index of the next routine arrival, when an order is open.
    pub erd_mean: Option<f64>,
    pub erd_std: Option<f64>,
    /// Placement week of the order the ERD estimate refers to.
    pub erd_order: Option<u32>,
    pub last_audit_week: u32,
    pub reliability_est: f64,
    pub lma_known: Lma,
    pub reputation: f64,
    pub clinical_impact: f64,
}

/// One scalar Gaussian conjugate correction, in gain form so that the
/// zero-information (`obs_std = inf`) and certain-prior (`prior_std = 0`)
/// limits are exact.
#[inline]
pub fn conjugate(prior_mean: f64, prior_std: f64, obs: f64, obs_std: f64) -> (f64, f64) {
    let pv = prior_std * prior_std;
    let ov = obs_std * obs_std;
    let gain = if pv == 0.0 || ov.is_infinite() { 0.0 } else { pv / (pv + ov) };
    let mean = prior_mean + gain * (obs - prior_mean);
    let std = prior_std * libm::sqrt(1.0 - gain);
    (mean, std)
}

fn next_routine_order(obs: &Observation) -> Option<u32> {
    obs.open_orders
        .iter()
        .find(|o| o.source != OrderSource::Emergency)
        .map(|o| o.placed_week)
}

/// Fixed point of one predict/update cycle: the std a belief settles at
/// when a variable with diffusion `diffusion` is observed every week with
/// noise `obs_std`.
pub fn steady_state_std(obs_std: f64, diffusion: f64, cap: f64) -> f64 {
    let mut s = obs_std.min(cap);
    for _ in 0..200 {
        let prior = (s + diffusion).min(cap);
        let next = conjugate(0.0, prior, 0.0, obs_std).1;
        if (next - s).abs() <= 1e-12 * s.max(1.0) {
            return next;
        }
        s = next;
    }
    s
}

impl DrugBelief {
    /// Belief formed from a single first observation.
    pub fn from_observation(obs: &Observation, reliability_prior: f64, clinical_impact: f64, reputation: f64, params: &BeliefParams) -> Self {
        DrugBelief {
            qoh_mean: obs.qoh_obs,
            qoh_std: obs.obs_std_qoh.min(params.qoh_std_cap),
            utz_mean: obs.utz_obs,
            utz_std: obs.obs_std_utz.min(params.utz_std_cap),
            erd_mean: obs.erd_obs,
            erd_std: obs.obs_std_erd.map(|s| s.min(params.erd_std_cap)),
            erd_order: next_routine_order(obs),
            last_audit_week: obs.week,
            reliability_est: reliability_prior.clamp(0.0, 1.0),
            lma_known: obs.lma,
            reputation: reputation.clamp(0.0, 1.0),
            clinical_impact: clinical_impact.clamp(0.0, 1.0),
        }
    }

    /// Rescales the utilization estimate when the restriction level changes.
    pub fn note_restriction(&mut self, lma: Lma, cfg: &SimConfig) {
        if lma == self.lma_known {
            return;
        }
        let before = 1.0 - cfg.lma_effect(self.lma_known);
        let after = 1.0 - cfg.lma_effect(lma);
        if before > 0.0 {
            let f = after / before;
            self.utz_mean *= f;
            self.utz_std = libm::hypot(self.utz_std * f, self.utz_mean * cfg.lma_compliance_std)
                .clamp(cfg.belief.epsilon, cfg.belief.utz_std_cap);
        }
        self.lma_known = lma;
    }

    /// One week of passive drift: expected consumption after the known
    /// `inflow`, and additive growth of every std up to its cap.
    pub fn predict(&self, inflow: f64, params: &BeliefParams) -> DrugBelief {
        let mut b = self.clone();
        b.qoh_mean = (self.qoh_mean + inflow - self.utz_mean).max(0.0);
        b.qoh_std = (self.qoh_std + params.diffusion_qoh).min(params.qoh_std_cap).max(params.epsilon);
        b.utz_std = (self.utz_std + params.diffusion_utz).min(params.utz_std_cap).max(params.epsilon);
        b.erd_std = self.erd_std.map(|s| (s + params.diffusion_erd).min(params.erd_std_cap));
        b
    }

    /// Conjugate correction from `obs`, plus the exactly observed signals
    /// (restriction, stockout/disruption reputation, delivery outcomes).
    pub fn update(&self, obs: &Observation, cfg: &SimConfig) -> Result<DrugBelief> {
        if !(obs.obs_std_qoh > 0.0) || !(obs.obs_std_utz > 0.0) || obs.obs_std_erd.is_some_and(|s| !(s > 0.0)) {
            return Err(Error::Contract("observation stds must be positive".into()));
        }
        let mut b = self.clone();
        (b.qoh_mean, b.qoh_std) = conjugate(self.qoh_mean, self.qoh_std, obs.qoh_obs, obs.obs_std_qoh);
        (b.utz_mean, b.utz_std) = conjugate(self.utz_mean, self.utz_std, obs.utz_obs, obs.obs_std_utz);

        let tracked = next_routine_order(obs);
        match (obs.erd_obs, obs.obs_std_erd) {
            (Some(e), Some(s)) => match (self.erd_mean, self.erd_std) {
                (Some(m), Some(ps)) if tracked == self.erd_order => {
                    let (m, s) = conjugate(m, ps, e, s);
                    b.erd_mean = Some(m);
                    b.erd_std = Some(s);
                }
                _ => {
                    b.erd_mean = Some(e);
                    b.erd_std = Some(s.min(cfg.belief.erd_std_cap));
                }
            },
            _ => {
                b.erd_mean = None;
                b.erd_std = None;
            }
        }
        b.erd_order = tracked;

        if obs.audited {
            b.last_audit_week = obs.week;
        }
        let rate = cfg.belief.reliability_rate;
        for i in 0..obs.orders_due {
            let ok = if i < obs.orders_due - obs.orders_failed.min(obs.orders_due) { 1.0 } else { 0.0 };
            b.reliability_est += rate * (ok - b.reliability_est);
        }
        b.reliability_est = b.reliability_est.clamp(0.0, 1.0);
        let lambda = cfg.reputation_decay;
        let event = obs.stocked_out || obs.supplier_disrupted;
        b.reputation = (lambda * self.reputation + (1.0 - lambda) * if event { 1.0 } else { 0.0 }).clamp(0.0, 1.0);
        b.note_restriction(obs.lma, cfg);
        Ok(b)
    }

    /// Runway estimate and its first-order std.
    pub fn runway(&self, cfg: &SimConfig) -> (f64, f64) {
        belief_runway(self, cfg)
    }
}

/// Runway mean and delta-method std:
/// `Var(q/u) ~ (sd_q / u)^2 + (q sd_u / u^2)^2`, with `u` floored at epsilon.
pub fn belief_runway(b: &DrugBelief, cfg: &SimConfig) -> (f64, f64) {
    let cap = cfg.runway_cap;
    let mean = runway(b.qoh_mean.max(0.0), b.utz_mean.max(0.0), cap);
    let u = b.utz_mean.max(cfg.belief.epsilon);
    let q = b.qoh_mean.max(0.0);
    let a = b.qoh_std / u;
    let c = q * b.utz_std / (u * u);
    let std = libm::sqrt(a * a + c * c).min(cap);
    (mean, std)
}
