//! Grids of (scenario, agent, seed) runs, their aggregation and the
//! threshold ablation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use shortfall_core::episode::EpisodeResult;
use shortfall_core::scenario::generate_scenario_with;
use shortfall_core::{run_episode, AgentKind, Clock, ExperimentConfig, ScenarioSpec};

use crate::error::{HarnessError, Result};
use crate::output;

/// Monotonic wall clock.
#[derive(Debug, Clone, Copy)]
pub struct StdClock {
    origin: Instant,
}

impl StdClock {
    pub fn new() -> Self {
        StdClock { origin: Instant::now() }
    }
}

impl Default for StdClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for StdClock {
    fn now_ns(&self) -> u64 {
        self.origin.elapsed().as_nanos() as u64
    }
}

#[derive(Debug, Clone)]
pub enum ScenarioSource {
    /// Generated per seed from one of the three scenario sets.
    Set(u8),
    /// One fixed scenario; seeds vary only the run.
    Fixed(ScenarioSpec),
}

impl ScenarioSource {
    pub fn label(&self) -> String {
        match self {
            ScenarioSource::Set(s) => format!("set{s}"),
            ScenarioSource::Fixed(spec) => spec
                .name
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
                .collect(),
        }
    }

    pub fn scenario(&self, seed: u64, config: &ExperimentConfig) -> Result<ScenarioSpec> {
        match self {
            ScenarioSource::Set(s) => Ok(generate_scenario_with(*s, seed, &config.scenario_gen)?),
            ScenarioSource::Fixed(spec) => Ok(spec.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub agent: AgentKind,
    pub seed: u64,
    /// Overrides `attention.tau` when set.
    pub tau: Option<f64>,
}

/// Every agent × seed combination, agent-major.
pub fn grid(agents: &[AgentKind], seeds: &[u64], tau: Option<f64>) -> Vec<Cell> {
    agents
        .iter()
        .flat_map(|&agent| seeds.iter().map(move |&seed| Cell { agent, seed, tau }))
        .collect()
}

/// One row of `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub run_id: String,
    pub scenario: String,
    pub agent: String,
    pub seed: u64,
    pub tau: f64,
    pub weeks: usize,
    pub total_reward: f64,
    pub stockouts: usize,
    pub avg_focus: Option<f64>,
    pub max_focus: Option<usize>,
    pub planning_s_per_week: f64,
}

#[derive(Debug, Clone)]
pub struct Run {
    pub record: RunRecord,
    pub episode: EpisodeResult,
}

pub fn run_id(label: &str, cell: &Cell) -> String {
    match cell.tau {
        Some(t) => format!("{label}-{}-seed{}-tau{t}", cell.agent, cell.seed),
        None => format!("{label}-{}-seed{}", cell.agent, cell.seed),
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    /// Worker threads for grid cells.
    pub parallel: usize,
    /// Trace files go to `<out>/traces/<run_id>/` when set.
    pub out: Option<PathBuf>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Self {
        Experiment {
            config,
            parallel: 1,
            out: None,
        }
    }

    fn cell_config(&self, cell: &Cell) -> Result<ExperimentConfig> {
        let mut cfg = self.config.clone();
        if let Some(t) = cell.tau {
            cfg.attention.tau = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn run_cell(&self, source: &ScenarioSource, cell: &Cell) -> Result<Run> {
        let cfg = self.cell_config(cell)?;
        let scenario = source.scenario(cell.seed, &cfg)?;
        let episode = run_episode(&scenario, cell.agent, cell.seed, &cfg, &StdClock::new())?;
        let id = run_id(&source.label(), cell);
        if let Some(out) = &self.out {
            let dir = out.join("traces").join(&id);
            output::write_weekly(&dir.join("weekly.csv"), &episode.trace)?;
            output::write_attention(&dir.join("attention.csv"), &episode.attention)?;
        }
        let record = RunRecord {
            run_id: id,
            scenario: scenario.name.clone(),
            agent: cell.agent.to_string(),
            seed: cell.seed,
            tau: cfg.attention.tau,
            weeks: episode.weeks.len(),
            total_reward: episode.total_reward(),
            stockouts: episode.stockout_count(),
            avg_focus: episode.avg_focus(),
            max_focus: episode.max_focus(),
            planning_s_per_week: episode.planning_s_per_week(),
        };
        Ok(Run { record, episode })
    }

    /// Runs all cells, in parallel when configured; results keep cell order.
    pub fn run_cells(&self, source: &ScenarioSource, cells: &[Cell]) -> Result<Vec<Run>> {
        if self.parallel <= 1 {
            return cells.iter().map(|c| self.run_cell(source, c)).collect();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.parallel)
            .build()
            .map_err(|e| HarnessError::Output(e.to_string()))?;
        pool.install(|| cells.par_iter().map(|c| self.run_cell(source, c)).collect())
    }
}

/// Per-agent aggregate over seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentSummary {
    pub agent: String,
    pub tau: Option<f64>,
    pub runs: usize,
    pub mean_reward: f64,
    pub reward_std: f64,
    pub total_stockouts: usize,
    pub mean_planning_s_per_week: f64,
    pub mean_avg_focus: Option<f64>,
    pub max_focus: Option<usize>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Groups records by (agent, tau) in first-appearance order.
pub fn summarize(records: &[RunRecord], with_tau: bool) -> Vec<AgentSummary> {
    let mut order: Vec<(String, u64)> = Vec::new();
    let mut groups: BTreeMap<(String, u64), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let key = (r.agent.clone(), if with_tau { r.tau.to_bits() } else { 0 });
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let rs = &groups[&key];
            let rewards: Vec<f64> = rs.iter().map(|r| r.total_reward).collect();
            let focus: Vec<f64> = rs.iter().filter_map(|r| r.avg_focus).collect();
            let plan: Vec<f64> = rs.iter().map(|r| r.planning_s_per_week).collect();
            AgentSummary {
                agent: key.0,
                tau: with_tau.then(|| f64::from_bits(key.1)),
                runs: rs.len(),
                mean_reward: mean(&rewards),
                reward_std: sample_std(&rewards),
                total_stockouts: rs.iter().map(|r| r.stockouts).sum(),
                mean_planning_s_per_week: mean(&plan),
                mean_avg_focus: (!focus.is_empty()).then(|| mean(&focus)),
                max_focus: rs.iter().filter_map(|r| r.max_focus).max(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub tau: f64,
    pub expert_reward: Option<f64>,
    pub learner_reward: Option<f64>,
    pub expert_avg_focus: Option<f64>,
    pub learner_avg_focus: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Ablation {
    pub rows: Vec<AblationRow>,
    pub runs: Vec<Run>,
}

impl Experiment {
    /// Runs Expert and Learner for each threshold; a repeated threshold
    /// is computed once and reported once per occurrence.
    pub fn ablate_tau(&self, source: &ScenarioSource, taus: &[f64], seeds: &[u64]) -> Result<Ablation> {
        if taus.is_empty() {
            return Err(HarnessError::Usage("at least one tau is required".into()));
        }
        if seeds.is_empty() {
            return Err(HarnessError::Usage("at least one seed is required".into()));
        }
        let mut unique: Vec<f64> = Vec::new();
        for &t in taus {
            if !(t > 0.0 && t <= 1.5) {
                return Err(HarnessError::Usage(format!("tau {t} outside (0, 1.5]")));
            }
            if !unique.iter().any(|u| u.to_bits() == t.to_bits()) {
                unique.push(t);
            }
        }
        let agents = [AgentKind::Expert, AgentKind::Learner];
        let cells: Vec<Cell> = unique.iter().flat_map(|&t| grid(&agents, seeds, Some(t))).collect();
        let runs = self.run_cells(source, &cells)?;
        let records: Vec<RunRecord> = runs.iter().map(|r| r.record.clone()).collect();
        let summary = summarize(&records, true);
        let pick = |agent: AgentKind, t: f64| {
            summary
                .iter()
                .find(|s| s.agent == agent.as_str() && s.tau.map(f64::to_bits) == Some(t.to_bits()))
        };
        let rows = taus
            .iter()
            .map(|&t| AblationRow {
                tau: t,
                expert_reward: pick(AgentKind::Expert, t).map(|s| s.mean_reward),
                learner_reward: pick(AgentKind::Learner, t).map(|s| s.mean_reward),
                expert_avg_focus: pick(AgentKind::Expert, t).and_then(|s| s.mean_avg_focus),
                learner_avg_focus: pick(AgentKind::Learner, t).and_then(|s| s.mean_avg_focus),
            })
            .collect();
        Ok(Ablation { rows, runs })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary<'a> {
    pub scenario: String,
    pub seeds: &'a [u64],
    pub agents: &'a [AgentSummary],
}

/// Writes `runs.csv` and `summary.json` under `out`.
pub fn write_outputs(out: &Path, label: &str, seeds: &[u64], runs: &[Run], summary: &[AgentSummary]) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let records: Vec<RunRecord> = runs.iter().map(|r| r.record.clone()).collect();
    output::write_runs(&out.join("runs.csv"), &records)?;
    crate::io::write_json(
        &Summary {
            scenario: label.into(),
            seeds,
            agents: summary,
        },
        &out.join("summary.json"),
    )
}
