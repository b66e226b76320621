//! Urgency scoring and focus-set selection.
//!
//! Each drug's belief is mapped to five components in `[0, 1]`: runway risk
//! (the base signal, implicit weight 1), belief uncertainty, atypical
//! utilization, clinical impact and shortage reputation. Urgency is the
//! runway term plus the `beta`-weighted sum of the other four; drugs at or
//! above `tau` form the focus set, with a top-`k` fallback.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::belief::{belief_runway, DrugBelief};
use crate::types::SimConfig;
use crate::{Error, Result};

/// The weighted (non-runway) urgency features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    Uncertainty,
    Utilization,
    Clinical,
    Reputation,
}

impl Feature {
    pub const ALL: [Feature; 4] = [Feature::Uncertainty, Feature::Utilization, Feature::Clinical, Feature::Reputation];

    pub fn as_str(self) -> &'static str {
        match self {
            Feature::Uncertainty => "uncertainty",
            Feature::Utilization => "utilization",
            Feature::Clinical => "clinical",
            Feature::Reputation => "reputation",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One weight per [`Feature`], in [`Feature::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureWeights {
    pub uncertainty: f64,
    pub utilization: f64,
    pub clinical: f64,
    pub reputation: f64,
}

impl FeatureWeights {
    pub fn to_array(self) -> [f64; 4] {
        [self.uncertainty, self.utilization, self.clinical, self.reputation]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        FeatureWeights {
            uncertainty: a[0],
            utilization: a[1],
            clinical: a[2],
            reputation: a[3],
        }
    }

    pub fn get(&self, f: Feature) -> f64 {
        self.to_array()[f as usize]
    }

    pub fn sum(&self) -> f64 {
        self.to_array().iter().sum()
    }
}

impl Default for FeatureWeights {
    fn default() -> Self {
        FeatureWeights {
            uncertainty: 0.5,
            utilization: 0.3,
            clinical: 0.6,
            reputation: 0.4,
        }
    }
}

/// The working attention parameters of an agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttentionWeights {
    pub beta: FeatureWeights,
    pub tau: f64,
    pub k: usize,
    pub cap: Option<usize>,
}

/// `attention` section of the experiment config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttentionConfig {
    pub beta: FeatureWeights,
    pub tau: f64,
    pub k: usize,
    pub cap: Option<usize>,
    /// Runway (weeks) at which runway risk reaches zero.
    pub r_max: f64,
    /// Runway std (weeks) at which the runway half of the uncertainty
    /// component saturates.
    pub sigma_runway_max: f64,
    pub beta_max: f64,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        AttentionConfig {
            beta: FeatureWeights::default(),
            tau: 0.65,
            k: 3,
            cap: None,
            r_max: 8.0,
            sigma_runway_max: 8.0,
            beta_max: 2.0,
        }
    }
}

impl AttentionConfig {
    pub fn weights(&self) -> AttentionWeights {
        AttentionWeights {
            beta: self.beta,
            tau: self.tau,
            k: self.k,
            cap: self.cap,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for f in Feature::ALL {
            let b = self.beta.get(f);
            if !(0.0..=self.beta_max).contains(&b) {
                return Err(Error::invalid(
                    alloc::format!("attention.beta.{f}"),
                    alloc::format!("{b} outside [0, beta_max = {}]", self.beta_max),
                ));
            }
        }
        if !(self.tau > 0.0 && self.tau <= 1.5) {
            return Err(Error::invalid("attention.tau", "must lie in (0, 1.5]"));
        }
        if self.k == 0 {
            return Err(Error::invalid("attention.k", "must be at least 1"));
        }
        if self.cap == Some(0) {
            return Err(Error::invalid("attention.cap", "must be at least 1 when set"));
        }
        if !(self.r_max > 0.0) || !(self.sigma_runway_max > 0.0) || !(self.beta_max > 0.0) {
            return Err(Error::invalid("attention.r_max", "normalizers and beta_max must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UrgencyComponents {
    pub u_runway: f64,
    pub u_uncertainty: f64,
    pub u_utilization: f64,
    pub u_clinical: f64,
    pub u_reputation: f64,
}

impl UrgencyComponents {
    /// The weighted features in [`Feature::ALL`] order.
    pub fn activations(&self) -> [f64; 4] {
        [self.u_uncertainty, self.u_utilization, self.u_clinical, self.u_reputation]
    }
}

/// Utilization statistics across all drugs in the current week.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScenarioStats {
    pub mean_utz: f64,
    pub max_utz_deviation: f64,
    pub max_utz_std: f64,
}

impl ScenarioStats {
    pub fn from_beliefs(beliefs: &[DrugBelief]) -> Self {
        if beliefs.is_empty() {
            return ScenarioStats::default();
        }
        let mean_utz = beliefs.iter().map(|b| b.utz_mean).sum::<f64>() / beliefs.len() as f64;
        let max_utz_deviation = beliefs.iter().map(|b| (b.utz_mean - mean_utz).abs()).fold(0.0, f64::max);
        let max_utz_std = beliefs.iter().map(|b| b.utz_std).fold(0.0, f64::max);
        ScenarioStats {
            mean_utz,
            max_utz_deviation,
            max_utz_std,
        }
    }
}

#[inline]
fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

pub fn component_vector(b: &DrugBelief, stats: &ScenarioStats, att: &AttentionConfig, sim: &SimConfig) -> UrgencyComponents {
    let (runway_mean, runway_std) = belief_runway(b, sim);
    UrgencyComponents {
        u_runway: (1.0 - runway_mean / att.r_max).clamp(0.0, 1.0),
        u_uncertainty: (0.5 * runway_std / att.sigma_runway_max + 0.5 * b.qoh_std / sim.belief.qoh_std_cap).clamp(0.0, 1.0),
        u_utilization: (0.5 * ratio((b.utz_mean - stats.mean_utz).abs(), stats.max_utz_deviation)
            + 0.5 * ratio(b.utz_std, stats.max_utz_std))
        .clamp(0.0, 1.0),
        u_clinical: b.clinical_impact.clamp(0.0, 1.0),
        u_reputation: b.reputation.clamp(0.0, 1.0),
    }
}

#[inline]
pub fn urgency_score(c: &UrgencyComponents, w: &AttentionWeights) -> f64 {
    let beta = w.beta.to_array();
    c.u_runway + c.activations().iter().zip(beta).map(|(x, b)| b * x).sum::<f64>()
}

/// One drug's entry for focus selection.
#[derive(Debug, Clone, Copy)]
pub struct FocusCandidate<'a> {
    pub id: &'a str,
    pub urgency: f64,
    pub runway_mean: f64,
}

/// Selects the focus set and returns candidate indices in descending
/// urgency. Ties go to the lower runway, then the lexicographically smaller
/// id.
pub fn select_focus(candidates: &[FocusCandidate<'_>], w: &AttentionWeights) -> Vec<usize> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&candidates[a], &candidates[b]);
        y.urgency
            .total_cmp(&x.urgency)
            .then_with(|| x.runway_mean.total_cmp(&y.runway_mean))
            .then_with(|| x.id.cmp(y.id))
            .then(Ordering::Equal)
    });
    let above = order.iter().take_while(|&&i| candidates[i].urgency >= w.tau).count();
    let mut size = above.max(w.k.min(candidates.len()));
    if let Some(cap) = w.cap {
        size = size.min(cap);
    }
    order.truncate(size);
    order
}
