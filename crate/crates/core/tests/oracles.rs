use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shortfall_core::belief::{belief_runway, conjugate};
use shortfall_core::rng::{self, Stream};
use shortfall_core::sim::{emit_observation, DrugStep};
use shortfall_core::types::{ActionKind, DrugTrueState, Lma, SimConfig, SupplierSlot};
use shortfall_core::DrugBelief;

mod oracle_checks;
use oracle_checks::{point_belief, rel_err};

#[test]
fn conjugate_update_matches_grid_bayes() {
    let worst = oracle_checks::grid_bayes_worst_rel_err();
    assert!(worst <= 1e-3, "worst relative error {worst:e}");
}

#[test]
fn conjugate_example_precision_weighted() {
    let (m, s) = conjugate(100.0, 10.0, 90.0, 1.0);
    let (pp, op) = (1.0 / 100.0, 1.0);
    assert!((m - (pp * 100.0 + op * 90.0) / (pp + op)).abs() < 1e-9);
    assert!((s - (1.0 / (pp + op)).sqrt()).abs() < 1e-9);
    assert!((m - 90.0990).abs() < 5e-5 && (s - 0.9950).abs() < 5e-5);
}

#[test]
fn focus_gradient_matches_finite_differences() {
    let worst = oracle_checks::fd_gradient_worst_rel_err();
    assert!(worst <= 1e-6, "worst relative error {worst:e}");
}

#[test]
fn planner_matches_exhaustive_expectimax() {
    let mismatches = oracle_checks::expectimax_mismatches();
    assert!(mismatches.is_empty(), "planner disagrees with expectimax on {mismatches:?}");
}

#[test]
fn audit_observation_std_matches_config() {
    let cfg = SimConfig::default();
    let d = DrugTrueState {
        id: "D".into(),
        qoh: 100.0,
        utz: 10.0,
        base_utz: 10.0,
        primary_supplier: 0,
        alternate_supplier: 1,
        active_supplier: SupplierSlot::Primary,
        pending_switch: None,
        lma: Lma::None,
        stocked_out: false,
        reputation: 0.0,
        clinical_impact: 0.0,
        routine_order_qty: 0.0,
        demand_drift: 0.0,
        pending_orders: Vec::new(),
    };
    let mut r = rng::stream(3, Stream::Observation, &[]);
    let n = 10_000;
    let xs: Vec<f64> = (0..n)
        .map(|_| emit_observation(&d, 0, &DrugStep::default(), false, ActionKind::AuditInventory, &cfg, &mut r).qoh_obs)
        .collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    assert!((sd - 1.0).abs() <= 0.05, "empirical audit std {sd}");
    assert!((mean - 100.0).abs() < 0.05);
}

#[test]
fn delta_method_runway_std_tracks_monte_carlo() {
    let cfg = SimConfig::default();
    let mut r = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..40 {
        let qm = r.random_range(20.0..400.0);
        let um = r.random_range(5.0..40.0);
        let qs = qm * r.random_range(0.01..0.3);
        let us = um * r.random_range(0.01..0.15);
        let b = DrugBelief {
            qoh_std: qs,
            utz_std: us,
            ..point_belief(qm, um, Lma::None)
        };
        let (_, sd) = belief_runway(&b, &cfg);
        let n = 20_000;
        let ratios: Vec<f64> = (0..n)
            .map(|_| rng::normal(&mut r, qm, qs) / rng::normal(&mut r, um, us))
            .collect();
        let mean = ratios.iter().sum::<f64>() / n as f64;
        let mc = (ratios.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!(rel_err(sd, mc) <= 0.15, "delta {sd} vs MC {mc} (q {qm}±{qs}, u {um}±{us})");
    }
    let b = DrugBelief {
        qoh_std: 10.0,
        utz_std: 2.0,
        ..point_belief(100.0, 20.0, Lma::None)
    };
    let (m, sd) = belief_runway(&b, &cfg);
    assert_eq!(m, 5.0);
    assert!((sd - 0.5f64.sqrt()).abs() < 1e-12);
}
