use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shortfall_core::sim::{advance_week_ordered, emit_observation, qoh_obs_std, step_drug, DrugStep, EnvSeeds, SupplierPair};
use shortfall_core::types::{ActionKind, DrugTrueState, Lma, SimConfig, SupplierSlot, SupplierState};
use shortfall_core::{generate_scenario, WeeklyOutcome, WorldState};

fn world(set: u8, seed: u64) -> (WorldState, SimConfig) {
    let spec = generate_scenario(set, seed).unwrap();
    (spec.initial_world().unwrap(), spec.effective_sim(&SimConfig::default()))
}

fn random_actions(r: &mut ChaCha8Rng, n: usize) -> Vec<ActionKind> {
    (0..n).map(|_| ActionKind::ALL[r.random_range(0..12)]).collect()
}

fn rollout(set: u8, seed: u64, action_seed: u64, weeks: u32) -> Vec<WeeklyOutcome> {
    let (mut w, cfg) = world(set, seed);
    let seeds = EnvSeeds::from_run_seed(seed);
    let mut r = ChaCha8Rng::seed_from_u64(action_seed);
    let mut out = Vec::new();
    for _ in 0..weeks {
        let a = random_actions(&mut r, w.drugs.len());
        let (next, o) = advance_week_ordered(&w, &a, &cfg, seeds);
        w = next;
        out.push(o);
    }
    out
}

#[test]
fn inventory_never_negative_under_random_actions() {
    for trial in 0..1000u64 {
        let set = 1 + (trial % 3) as u8;
        let (mut w, cfg) = world(set, trial);
        let seeds = EnvSeeds::from_run_seed(trial);
        let mut r = ChaCha8Rng::seed_from_u64(trial ^ 0xA5A5);
        for _ in 0..10 {
            let a = random_actions(&mut r, w.drugs.len());
            w = advance_week_ordered(&w, &a, &cfg, seeds).0;
            for d in &w.drugs {
                assert!(d.qoh >= 0.0, "trial {trial}: {} has qoh {}", d.id, d.qoh);
                assert!(d.utz >= 0.0);
            }
        }
    }
}

#[test]
fn reward_is_scores_plus_costs() {
    for seed in 0..20 {
        for o in rollout(2, seed, seed + 100, 10) {
            let recomputed = o.per_drug_scores.iter().sum::<f64>() + o.action_costs.iter().sum::<f64>();
            assert_eq!(o.reward, recomputed);
        }
    }
}

#[test]
fn same_inputs_same_outcomes() {
    for seed in 0..5 {
        assert_eq!(rollout(3, seed, 9, 20), rollout(3, seed, 9, 20));
    }
    assert_ne!(rollout(3, 0, 9, 20), rollout(3, 1, 9, 20));
}

fn supplier(reliability: f64) -> SupplierState {
    SupplierState {
        id: "S".into(),
        reliability,
        disrupted: false,
        recovery_hazard: 0.5,
        lead_time_weeks: 2,
        disrupted_until: 0,
    }
}

fn drug(qoh: f64, utz: f64, routine: f64) -> DrugTrueState {
    DrugTrueState {
        id: "D".into(),
        qoh,
        utz,
        base_utz: utz,
        primary_supplier: 0,
        alternate_supplier: 1,
        active_supplier: SupplierSlot::Primary,
        pending_switch: None,
        lma: Lma::None,
        stocked_out: false,
        reputation: 0.0,
        clinical_impact: 0.5,
        routine_order_qty: routine,
        demand_drift: 0.0,
        pending_orders: Vec::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn inventory_is_conserved(
        qoh in 50.0f64..400.0,
        utz in 1.0f64..20.0,
        routine in 0.0f64..25.0,
        reliability in 0.5f64..1.0,
        actions in proptest::collection::vec(0usize..12, 1..15),
        seed in any::<u64>(),
    ) {
        let cfg = SimConfig { lma_compliance_std: 0.0, ..SimConfig::default() };
        let (p, a) = (supplier(reliability), supplier(reliability));
        let pair = SupplierPair { primary: &p, alternate: &a };
        let mut d = drug(qoh, utz, routine);
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (mut delivered, mut consumed) = (0.0, 0.0);
        let mut stocked_out = false;
        for (week, &i) in actions.iter().enumerate() {
            let demand = {
                // the demand this week is the utilization after the action
                let mut probe = d.clone();
                let mut pr = r.clone();
                step_drug(&mut probe, pair, ActionKind::ALL[i], week as u32, 0.0, &cfg, &mut pr);
                probe.utz
            };
            let step: DrugStep = step_drug(&mut d, pair, ActionKind::ALL[i], week as u32, 0.0, &cfg, &mut r);
            stocked_out |= step.stockout;
            delivered += step.delivered;
            consumed += step.consumed;
            if !step.stockout {
                prop_assert!((step.consumed - demand).abs() <= 1e-12 * demand.max(1.0));
            }
        }
        prop_assume!(!stocked_out);
        let expected = qoh + delivered - consumed;
        prop_assert!((d.qoh - expected).abs() <= 1e-9 * expected.abs().max(1.0), "{} vs {}", d.qoh, expected);
    }

    #[test]
    fn passive_std_exceeds_audit_std(qoh in 1e-6f64..1e5) {
        let cfg = SimConfig::default();
        prop_assert!(qoh_obs_std(qoh, ActionKind::Monitor, &cfg) > qoh_obs_std(qoh, ActionKind::AuditInventory, &cfg));
    }

    #[test]
    fn reported_stds_positive(qoh in 0.0f64..500.0, utz in 0.0f64..50.0, a in 0usize..12, seed in any::<u64>()) {
        let cfg = SimConfig::default();
        let d = drug(qoh, utz, 0.0);
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let o = emit_observation(&d, 0, &DrugStep::default(), false, ActionKind::ALL[a], &cfg, &mut r);
        prop_assert!(o.obs_std_qoh > 0.0 && o.obs_std_utz > 0.0);
        prop_assert!(o.qoh_obs >= 0.0 && o.utz_obs >= 0.0);
    }
}
