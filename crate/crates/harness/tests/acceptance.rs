//! Acceptance run: one PASS/FAIL line per headline requirement, then a
//! non-zero exit if any failed.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use shortfall::experiment::Ablation;
use shortfall::{grid, summarize, AgentSummary, Experiment, Run, ScenarioSource};
use shortfall_core::{AgentKind, ExperimentConfig};

#[allow(dead_code)]
#[path = "../../core/tests/oracle_checks/mod.rs"]
mod oracle_checks;

const SEEDS: [u64; 3] = [0, 1, 2];

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn summary_of<'a>(rows: &'a [AgentSummary], agent: AgentKind) -> &'a AgentSummary {
    rows.iter().find(|s| s.agent == agent.as_str()).expect("agent summarised")
}

fn run_set(set: u8, agents: &[AgentKind], out: Option<PathBuf>, parallel: usize) -> (Vec<Run>, Vec<AgentSummary>, f64) {
    let exp = Experiment {
        config: ExperimentConfig::default(),
        parallel,
        out,
    };
    let start = Instant::now();
    let runs = exp.run_cells(&ScenarioSource::Set(set), &grid(agents, &SEEDS, None)).expect("runs");
    let secs = start.elapsed().as_secs_f64();
    let records: Vec<_> = runs.iter().map(|r| r.record.clone()).collect();
    (runs, summarize(&records, false), secs)
}

fn rewards_and_stockouts(rows: &[AgentSummary], set: u8, report: &mut Report, secs: f64) {
    use AgentKind::*;
    let r = |a| summary_of(rows, a).mean_reward;
    let planners = [Expert, Learner, FullPomdp];
    let best_rule = r(Heuristic).max(r(Greedy));
    let worst_planner = planners.iter().map(|&a| r(a)).fold(f64::INFINITY, f64::min);
    let gap = |a| (r(a) - r(FullPomdp)).abs() / r(FullPomdp).abs();
    let planner_stockouts: usize = planners.iter().map(|&a| summary_of(rows, a).total_stockouts).sum();
    let pass = r(Random) < -1000.0
        && best_rule > 0.0
        && best_rule < worst_planner
        && gap(Expert) <= 0.10
        && gap(Learner) <= 0.10
        && planner_stockouts == 0
        && secs < 300.0;
    report.line(
        &format!("set {set} rewards"),
        pass,
        format!(
            "Random {:.1} < -1000; 0 < max(Heuristic, Greedy) {best_rule:.1} < min(Expert, Learner, FullPOMDP) {worst_planner:.1}; \
             gap to FullPOMDP Expert {:.3} Learner {:.3} <= 0.10; planner stockouts {planner_stockouts} == 0; {secs:.1}s < 300s",
            r(Random),
            gap(Expert),
            gap(Learner),
        ),
    );
}

fn planning_time(rows: &[AgentSummary], set: u8, limit: f64, report: &mut Report) {
    let t = |a| summary_of(rows, a).mean_planning_s_per_week;
    let full = t(AgentKind::FullPomdp);
    let (e, l) = (t(AgentKind::Expert) / full, t(AgentKind::Learner) / full);
    report.line(
        &format!("set {set} planning time"),
        e <= limit && l <= limit,
        format!("Expert/FullPOMDP {e:.3}, Learner/FullPOMDP {l:.3} <= {limit}; FullPOMDP {full:.5} s/week"),
    );
}

/// Mean weekly focus size over all seeds for the first and last 13 weeks.
fn focus_quarters(runs: &[Run], agent: AgentKind) -> (f64, f64) {
    let sizes = |lo: u32, hi: u32| {
        let xs: Vec<f64> = runs
            .iter()
            .filter(|r| r.episode.agent == agent)
            .flat_map(|r| r.episode.weeks.iter())
            .filter(|w| (lo..=hi).contains(&w.week))
            .map(|w| w.focus_size.expect("focus agent") as f64)
            .collect();
        xs.iter().sum::<f64>() / xs.len() as f64
    };
    (sizes(0, 12), sizes(39, 51))
}

fn long_horizon(runs: &[Run], rows: &[AgentSummary], secs: f64, report: &mut Report) {
    use AgentKind::*;
    let stockouts = |a| summary_of(rows, a).total_stockouts;
    let max_focus = [Expert, Learner].iter().filter_map(|&a| summary_of(rows, a).max_focus).max().unwrap();
    let (ef, el) = focus_quarters(runs, Expert);
    let (lf, ll) = focus_quarters(runs, Learner);
    let pass = stockouts(Expert) == 0
        && stockouts(Learner) == 0
        && max_focus <= 10
        && el <= ef + 1.0
        && ll <= lf + 1.0
        && (stockouts(Heuristic) >= 1 || stockouts(Random) >= 1)
        && secs < 1200.0;
    report.line(
        "set 3 long horizon",
        pass,
        format!(
            "stockouts Expert {} Learner {} == 0; max focus {max_focus} <= 10; \
             focus first/last quarter Expert {ef:.2}/{el:.2} Learner {lf:.2}/{ll:.2} (last <= first + 1); \
             stockouts Heuristic {} Random {} (one >= 1); {secs:.1}s < 1200s",
            stockouts(Expert),
            stockouts(Learner),
            stockouts(Heuristic),
            stockouts(Random),
        ),
    );
}

fn spread(xs: &[f64]) -> (f64, f64) {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn tau_robustness(ablation: &Ablation, report: &mut Report) {
    let col = |f: fn(&shortfall::experiment::AblationRow) -> Option<f64>| -> Vec<f64> {
        ablation.rows.iter().map(|r| f(r).unwrap()).collect()
    };
    // reward spread relative to the smallest magnitude in the column
    let reward_var = |xs: Vec<f64>| {
        let (lo, hi) = spread(&xs);
        let base = xs.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
        (hi - lo) / base
    };
    let focus_var = |xs: Vec<f64>| {
        let (lo, hi) = spread(&xs);
        hi - lo
    };
    let er = reward_var(col(|r| r.expert_reward));
    let lr = reward_var(col(|r| r.learner_reward));
    let ef = focus_var(col(|r| r.expert_avg_focus));
    let lf = focus_var(col(|r| r.learner_avg_focus));
    report.line(
        "threshold robustness",
        er <= 0.10 && lr <= 0.10 && ef <= 2.0 && lf <= 2.0,
        format!(
            "tau 0.55/0.65/0.75 reward spread Expert {er:.3} Learner {lr:.3} <= 0.10; focus spread Expert {ef:.2} Learner {lf:.2} <= 2"
        ),
    );
}

fn trace_files(root: &Path) -> Vec<PathBuf> {
    let mut files = Vec::new();
    for run in fs::read_dir(root.join("traces")).unwrap() {
        for f in fs::read_dir(run.unwrap().path()).unwrap() {
            files.push(f.unwrap().path().strip_prefix(root).unwrap().to_path_buf());
        }
    }
    files.sort();
    files
}

fn reproducibility(report: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let roots: Vec<PathBuf> = ["serial-a", "serial-b", "parallel"].iter().map(|d| dir.path().join(d)).collect();
    for (root, parallel) in roots.iter().zip([1, 1, 4]) {
        run_set(2, &AgentKind::ALL, Some(root.clone()), parallel);
    }
    let files = trace_files(&roots[0]);
    let mut differing = 0;
    for f in &files {
        let a = fs::read(roots[0].join(f)).unwrap();
        for other in &roots[1..] {
            if fs::read(other.join(f)).ok().as_ref() != Some(&a) {
                differing += 1;
            }
        }
    }
    report.line(
        "reproducible traces",
        differing == 0 && files.len() == 2 * AgentKind::ALL.len() * SEEDS.len(),
        format!("{} trace files, {differing} differ across two serial runs and --parallel 4", files.len()),
    );
}

fn frozen_learner(report: &mut Report) {
    let mut cfg = ExperimentConfig::default();
    cfg.learner.alpha = 0.0;
    let exp = Experiment::new(cfg);
    let mut compared = 0;
    let mut differing = 0;
    for set in 1..=3u8 {
        let source = ScenarioSource::Set(set);
        let runs = exp
            .run_cells(&source, &grid(&[AgentKind::Expert, AgentKind::Learner], &SEEDS, None))
            .unwrap();
        let (expert, learner) = runs.split_at(SEEDS.len());
        for (e, l) in expert.iter().zip(learner) {
            compared += 1;
            let same_weeks = e.episode.weeks.len() == l.episode.weeks.len()
                && e.episode.weeks.iter().zip(&l.episode.weeks).all(|(a, b)| {
                    a.reward.to_bits() == b.reward.to_bits() && a.stockouts == b.stockouts && a.focus_size == b.focus_size
                });
            let same_trace = format!("{:?}", e.episode.trace) == format!("{:?}", l.episode.trace);
            if !(same_weeks && same_trace) {
                differing += 1;
            }
        }
    }
    report.line(
        "frozen learner equals expert",
        differing == 0,
        format!("{compared} episodes over sets 1-3, {differing} differ"),
    );
}

fn main() {
    use AgentKind::*;
    let mut report = Report { failed: 0 };

    let mut set_rows = Vec::new();
    for set in [1u8, 2] {
        let (_, rows, secs) = run_set(set, &AgentKind::ALL, None, 1);
        rewards_and_stockouts(&rows, set, &mut report, secs);
        set_rows.push((set, rows));
    }
    for (set, rows) in &set_rows {
        planning_time(rows, *set, if *set == 1 { 0.6 } else { 0.5 }, &mut report);
    }

    let (runs, rows, secs) = run_set(3, &[Random, Greedy, Heuristic, Expert, Learner], None, 1);
    long_horizon(&runs, &rows, secs, &mut report);

    let ablation = Experiment::new(ExperimentConfig::default())
        .ablate_tau(&ScenarioSource::Set(3), &[0.55, 0.65, 0.75], &SEEDS)
        .unwrap();
    tau_robustness(&ablation, &mut report);

    let fd = oracle_checks::fd_gradient_worst_rel_err();
    report.line("focus gradient", fd <= 1e-6, format!("worst relative error {fd:.2e} <= 1e-6 over 100 instances"));

    let bayes = oracle_checks::grid_bayes_worst_rel_err();
    report.line("conjugate update", bayes <= 1e-3, format!("worst relative error {bayes:.2e} <= 1e-3 against a 10k-point grid, 50 cases"));

    let mismatches = oracle_checks::expectimax_mismatches();
    report.line(
        "planner vs expectimax",
        mismatches.is_empty(),
        format!("{} of 64 instances disagree {mismatches:?}", mismatches.len()),
    );

    reproducibility(&mut report);
    frozen_learner(&mut report);

    if report.failed > 0 {
        println!("{} acceptance check(s) failed", report.failed);
        std::process::exit(1);
    }
    println!("all acceptance checks passed");
}
