//! Independent oracles for the conjugate update, the focus-set gradient and
//! the per-drug planner. Each check returns what it measured.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shortfall_core::agents::softmax_focus_grad;
use shortfall_core::belief::conjugate;
use shortfall_core::planner::{candidate_values, plan_drug, DrugPlanInput, RolloutPolicy, SupplyView};
use shortfall_core::sim::{drug_score, step_drug, KnownOrder, SupplierPair};
use shortfall_core::types::{
    ActionKind, DrugTrueState, Lma, OrderSource, PendingOrder, SimConfig, SupplierSlot, SupplierState,
};
use shortfall_core::{DrugBelief, PlannerConfig};

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Posterior mean and std of a Gaussian prior times a Gaussian likelihood,
/// by brute-force normalisation on an evenly spaced grid.
fn grid_posterior(prior_mean: f64, prior_std: f64, obs: f64, obs_std: f64, n: usize) -> (f64, f64) {
    // the posterior sits inside both the prior's and the likelihood's bulk
    let lo = (prior_mean - 12.0 * prior_std).max(obs - 12.0 * obs_std);
    let hi = (prior_mean + 12.0 * prior_std).min(obs + 12.0 * obs_std);
    let dx = (hi - lo) / (n - 1) as f64;
    let mut w = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(n);
    for i in 0..n {
        let x = lo + dx * i as f64;
        let lp = -0.5 * ((x - prior_mean) / prior_std).powi(2) - 0.5 * ((x - obs) / obs_std).powi(2);
        xs.push(x);
        w.push(lp);
    }
    let m = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = w.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = w.iter().sum();
    let mean = xs.iter().zip(&w).map(|(x, p)| x * p).sum::<f64>() / z;
    let var = xs.iter().zip(&w).map(|(x, p)| (x - mean).powi(2) * p).sum::<f64>() / z;
    (mean, var.sqrt())
}

/// Worst relative error of the conjugate posterior (mean and std) against a
/// 10k-point grid over 50 random cases.
pub fn grid_bayes_worst_rel_err() -> f64 {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let prior_mean = r.random_range(0.0..400.0);
        let prior_std: f64 = r.random_range(0.5..40.0);
        let obs_std = r.random_range(0.5..40.0);
        let obs = prior_mean + r.random_range(-3.0..3.0) * prior_std.hypot(obs_std);
        let (m, s) = conjugate(prior_mean, prior_std, obs, obs_std);
        let (gm, gs) = grid_posterior(prior_mean, prior_std, obs, obs_std, 10_000);
        worst = worst.max(rel_err(m, gm)).max(rel_err(s, gs));
    }
    worst
}

fn log_focus_prob(x: &[[f64; 4]], offset: &[f64], beta: [f64; 4], focus: &[usize], t: f64) -> f64 {
    let z: Vec<f64> = x
        .iter()
        .zip(offset)
        .map(|(row, u)| (u + row.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>()) / t)
        .collect();
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    focus.iter().map(|&i| z[i] - lse).sum()
}

/// Worst norm-relative error of the analytic focus-set gradient against
/// central differences over 100 random instances.
pub fn fd_gradient_worst_rel_err() -> f64 {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = r.random_range(2..=10usize);
        let x: Vec<[f64; 4]> = (0..n).map(|_| core::array::from_fn(|_| r.random_range(0.0..1.0))).collect();
        let u_runway: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
        let beta: [f64; 4] = core::array::from_fn(|_| r.random_range(0.0..2.0));
        let t = r.random_range(0.3..2.0);
        let k = r.random_range(1..=n);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            idx.swap(i, r.random_range(0..=i));
        }
        let focus = &idx[..k];
        let scores: Vec<f64> = x
            .iter()
            .zip(&u_runway)
            .map(|(row, u)| u + row.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let g = softmax_focus_grad(&x, &scores, focus, t).unwrap();
        let fd: Vec<f64> = (0..4)
            .map(|j| {
                let (mut up, mut dn) = (beta, beta);
                up[j] += h;
                dn[j] -= h;
                (log_focus_prob(&x, &u_runway, up, focus, t) - log_focus_prob(&x, &u_runway, dn, focus, t)) / (2.0 * h)
            })
            .collect();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
        let den = norm(&g).max(norm(&fd));
        worst = worst.max(if den == 0.0 { norm(&diff) } else { norm(&diff) / den });
    }
    worst
}

fn supplier(id: &str, lead: u32) -> SupplierState {
    SupplierState {
        id: id.into(),
        reliability: 1.0,
        disrupted: false,
        recovery_hazard: 0.5,
        lead_time_weeks: lead,
        disrupted_until: 0,
    }
}

pub fn point_belief(qoh: f64, utz: f64, lma: Lma) -> DrugBelief {
    DrugBelief {
        qoh_mean: qoh,
        qoh_std: 0.0,
        utz_mean: utz,
        utz_std: 0.0,
        erd_mean: None,
        erd_std: None,
        erd_order: None,
        last_audit_week: 0,
        reliability_est: 1.0,
        lma_known: lma,
        reputation: 0.2,
        clinical_impact: 0.5,
    }
}

struct Instance {
    belief: DrugBelief,
    supply: SupplyView,
    candidates: [ActionKind; 2],
}

const WEEK: u32 = 3;

fn instances() -> Vec<Instance> {
    let pairs = [
        [ActionKind::Monitor, ActionKind::GrayMarketBuy],
        [ActionKind::Monitor, ActionKind::ApplyHardLma],
        [ActionKind::AuditInventory, ActionKind::EmergencyBuy],
        [ActionKind::ApplySoftLma, ActionKind::LiftLma],
    ];
    let mut out = Vec::new();
    for qoh in [2.0, 7.0, 15.0, 60.0] {
        for (utz, lma) in [(5.0, Lma::None), (9.0, Lma::Soft)] {
            for inbound in [false, true] {
                for candidates in pairs {
                    let open_orders = if inbound {
                        vec![KnownOrder {
                            quantity: 25.0,
                            placed_week: WEEK - 1,
                            source: OrderSource::Primary,
                        }]
                    } else {
                        Vec::new()
                    };
                    out.push(Instance {
                        belief: point_belief(qoh, utz, lma),
                        supply: SupplyView {
                            primary: supplier("P", 2),
                            alternate: supplier("A", 1),
                            active: SupplierSlot::Primary,
                            pending_switch: None,
                            open_orders,
                            routine_order_qty: utz,
                            demand_variation: 0.0,
                        },
                        candidates,
                    });
                }
            }
        }
    }
    out
}

/// The true state a point-mass belief denotes.
fn true_state(inst: &Instance, cfg: &SimConfig) -> DrugTrueState {
    let b = &inst.belief;
    let s = &inst.supply;
    let keep = 1.0 - cfg.lma_effect(b.lma_known);
    DrugTrueState {
        id: String::new(),
        qoh: b.qoh_mean,
        utz: b.utz_mean,
        base_utz: b.utz_mean / keep,
        primary_supplier: 0,
        alternate_supplier: 1,
        active_supplier: SupplierSlot::Primary,
        pending_switch: None,
        lma: b.lma_known,
        stocked_out: false,
        reputation: b.reputation,
        clinical_impact: b.clinical_impact,
        routine_order_qty: s.routine_order_qty,
        demand_drift: 0.0,
        pending_orders: s
            .open_orders
            .iter()
            .map(|o| PendingOrder {
                quantity: o.quantity,
                erd_week: (o.placed_week + s.primary.lead_time_weeks).max(WEEK),
                placed_week: o.placed_week,
                expedited: false,
                source: o.source,
            })
            .collect(),
    }
}

fn transition(d: &DrugTrueState, inst: &Instance, a: ActionKind, week: u32, cfg: &SimConfig, seed: u64) -> (DrugTrueState, f64) {
    let mut next = d.clone();
    let pair = SupplierPair {
        primary: &inst.supply.primary,
        alternate: &inst.supply.alternate,
    };
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    step_drug(&mut next, pair, a, week, 0.0, cfg, &mut r);
    let reward = drug_score(&next, cfg) + cfg.action_costs.charge(a, next.lma);
    (next, reward)
}

/// Exhaustive expectimax over the candidate actions. Chance nodes collapse
/// to single outcomes in this restriction, which is checked on the way.
fn expectimax(d: &DrugTrueState, inst: &Instance, week: u32, depth: u32, discount: f64, cfg: &SimConfig) -> f64 {
    if depth == 0 {
        return 0.0;
    }
    inst.candidates
        .iter()
        .map(|&a| {
            let (next, reward) = transition(d, inst, a, week, cfg, 1);
            let (again, _) = transition(d, inst, a, week, cfg, 99);
            assert_eq!(next, again, "restriction must be deterministic");
            reward + discount * expectimax(&next, inst, week + 1, depth - 1, discount, cfg)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Instances (of 64) where the planner's choice or candidate values differ
/// from exhaustive expectimax.
pub fn expectimax_mismatches() -> Vec<usize> {
    let cfg = SimConfig {
        lma_compliance_std: 0.0,
        ..SimConfig::default()
    };
    let all = instances();
    assert_eq!(all.len(), 64);
    let mut mismatches = Vec::new();
    for (i, inst) in all.iter().enumerate() {
        let planner = PlannerConfig {
            horizon: 2,
            rollouts: 1,
            discount: 0.95,
            rollout_policy: RolloutPolicy::Myopic,
            candidates: Some(inst.candidates.to_vec()),
            ..PlannerConfig::default()
        };
        let input = DrugPlanInput {
            index: 0,
            belief: &inst.belief,
            supply: &inst.supply,
            week: WEEK,
        };
        let d0 = true_state(inst, &cfg);
        let q: Vec<f64> = inst
            .candidates
            .iter()
            .map(|&a| {
                let (next, reward) = transition(&d0, inst, a, WEEK, &cfg, 1);
                reward + 0.95 * expectimax(&next, inst, WEEK + 1, 1, 0.95, &cfg)
            })
            .collect();
        let values = candidate_values(&input, &cfg, &planner, 7);
        let values_agree = values.iter().zip(&q).all(|((_, v), o)| (v - o).abs() <= 1e-9 * o.abs().max(1.0));
        let [a, b] = inst.candidates;
        let cost = |x: ActionKind| cfg.action_costs.get(x);
        let best = if q[1] > q[0] || (q[1] == q[0] && (cost(b) > cost(a) || (cost(b) == cost(a) && b.index() < a.index()))) {
            b
        } else {
            a
        };
        if !values_agree || plan_drug(&input, &cfg, &planner, 7) != best {
            mismatches.push(i);
        }
    }
    mismatches
}

