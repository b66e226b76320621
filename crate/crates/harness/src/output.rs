//! CSV traces, run tables and summaries.

use std::fs;
use std::path::Path;

use serde::Serialize;
use shortfall_core::agents::AttentionTraceRow;
use shortfall_core::episode::WeeklyTraceRow;

use crate::error::{HarnessError, Result};
use crate::experiment::{AblationRow, AgentSummary, RunRecord};

pub const WEEKLY_HEADER: [&str; 12] = [
    "week",
    "drug",
    "qoh_true",
    "qoh_mean",
    "qoh_std",
    "utz_true",
    "utz_mean",
    "runway_mean",
    "urgency",
    "in_focus",
    "action",
    "per_drug_score",
];

pub const ATTENTION_HEADER: [&str; 4] = ["week", "feature", "beta", "advantage"];

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn write_weekly(path: &Path, rows: &[WeeklyTraceRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(WEEKLY_HEADER)?;
    for r in rows {
        w.write_record([
            r.week.to_string(),
            r.drug.clone(),
            r.qoh_true.to_string(),
            r.qoh_mean.to_string(),
            r.qoh_std.to_string(),
            r.utz_true.to_string(),
            r.utz_mean.to_string(),
            r.runway_mean.to_string(),
            r.urgency.map(|u| u.to_string()).unwrap_or_default(),
            r.in_focus.to_string(),
            r.action.as_str().to_string(),
            r.per_drug_score.to_string(),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_attention(path: &Path, rows: &[AttentionTraceRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(ATTENTION_HEADER)?;
    for r in rows {
        w.write_record([
            r.week.to_string(),
            r.feature.as_str().to_string(),
            r.beta.to_string(),
            r.advantage.to_string(),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = writer(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_runs(path: &Path, runs: &[RunRecord]) -> Result<()> {
    write_rows(path, runs)
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map(|x| format!("{x:.prec$}")).unwrap_or_else(|| "-".into())
}

/// Aligned plain-text table of per-agent summaries.
pub fn summary_table(rows: &[AgentSummary]) -> String {
    let mut out = format!(
        "{:<10} {:>6} {:>5} {:>14} {:>12} {:>10} {:>12} {:>10} {:>9}\n",
        "agent", "tau", "runs", "mean_reward", "reward_std", "stockouts", "plan_s/week", "avg_focus", "max_focus"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<10} {:>6} {:>5} {:>14.1} {:>12.1} {:>10} {:>12.6} {:>10} {:>9}\n",
            r.agent,
            opt(r.tau, 2),
            r.runs,
            r.mean_reward,
            r.reward_std,
            r.total_stockouts,
            r.mean_planning_s_per_week,
            opt(r.mean_avg_focus, 2),
            r.max_focus.map(|m| m.to_string()).unwrap_or_else(|| "-".into()),
        ));
    }
    out
}

pub fn ablation_table(rows: &[AblationRow]) -> String {
    let mut out = format!(
        "{:>6} {:>14} {:>14} {:>12} {:>13}\n",
        "tau", "expert_reward", "learner_reward", "expert_focus", "learner_focus"
    );
    for r in rows {
        out.push_str(&format!(
            "{:>6.2} {:>14} {:>14} {:>12} {:>13}\n",
            r.tau,
            opt(r.expert_reward, 1),
            opt(r.learner_reward, 1),
            opt(r.expert_avg_focus, 2),
            opt(r.learner_avg_focus, 2),
        ));
    }
    out
}
