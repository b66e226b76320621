//! Experiment harness for `shortfall-core`: scenario and config files,
//! grids of runs, CSV traces and summaries, and the `shortfall` CLI.

pub mod error;
pub mod experiment;
pub mod io;
pub mod output;

pub use error::{HarnessError, Result};
pub use experiment::{grid, summarize, AgentSummary, Cell, Experiment, Run, RunRecord, ScenarioSource, StdClock};
