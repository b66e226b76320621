use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shortfall::experiment::{write_outputs, Experiment, ScenarioSource};
use shortfall::{grid, io, output, summarize, HarnessError, Result};
use shortfall_core::scenario::generate_scenario_with;
use shortfall_core::{AgentKind, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "shortfall", version, about = "Weekly drug-shortage simulator and agent benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON with sections sim, planner, attention, learner, scenario_gen).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// First seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Number of consecutive seeds starting at --seed.
    #[arg(long, global = true)]
    seeds: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long = "scenario-set", global = true, value_parser = clap::value_parser!(u8).range(1..=3))]
    scenario_set: Option<u8>,
    /// Comma-separated agent names.
    #[arg(long, global = true, value_delimiter = ',')]
    agents: Option<Vec<String>>,
    /// Urgency threshold override.
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Grid cells run concurrently.
    #[arg(long, global = true, default_value_t = 1)]
    parallel: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write generated scenario files.
    GenScenarios,
    /// Run agents on one scenario per seed and write traces.
    Run {
        /// Scenario file to use instead of a generated set.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Compare agents across seeds.
    Compare,
    /// Expert and Learner across urgency thresholds.
    AblateTau {
        #[arg(long, value_delimiter = ',', default_values_t = [0.55, 0.65, 0.75])]
        taus: Vec<f64>,
    },
    /// Learner run with its attention-weight trace.
    TraceAttention,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => io::load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(t) = cli.tau {
        cfg.attention.tau = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_agents(cli: &Cli, default: &[AgentKind]) -> Result<Vec<AgentKind>> {
    let Some(names) = &cli.agents else {
        return Ok(default.to_vec());
    };
    let agents = names
        .iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<AgentKind>().map_err(|e| HarnessError::Usage(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    if agents.is_empty() {
        return Err(HarnessError::Usage("--agents must name at least one agent".into()));
    }
    Ok(agents)
}

fn seed_list(cli: &Cli, default_count: u64) -> Result<Vec<u64>> {
    let n = cli.seeds.unwrap_or(default_count);
    if n == 0 {
        return Err(HarnessError::Usage("--seeds must be at least 1".into()));
    }
    Ok((0..n).map(|i| cli.seed.wrapping_add(i)).collect())
}

fn experiment(cli: &Cli, cfg: ExperimentConfig) -> Result<Experiment> {
    if cli.parallel == 0 {
        return Err(HarnessError::Usage("--parallel must be at least 1".into()));
    }
    Ok(Experiment {
        config: cfg,
        parallel: cli.parallel,
        out: Some(cli.out.clone()),
    })
}

fn flag_full_on_long_horizon(set: Option<u8>, agents: &[AgentKind]) {
    if set == Some(3) && agents.contains(&AgentKind::FullPomdp) {
        eprintln!("warning: FullPOMDP on the 52-week set plans every drug every week and is slow");
    }
}

fn compare_like(cli: &Cli, source: ScenarioSource, agents: &[AgentKind], seeds: &[u64]) -> Result<()> {
    let cfg = load_config(cli)?;
    let exp = experiment(cli, cfg)?;
    let cells = grid(agents, seeds, None);
    let runs = exp.run_cells(&source, &cells)?;
    let records: Vec<_> = runs.iter().map(|r| r.record.clone()).collect();
    let summary = summarize(&records, false);
    write_outputs(&cli.out, &source.label(), seeds, &runs, &summary)?;
    output::write_rows(&cli.out.join("summary.csv"), &summary)?;
    print!("{}", output::summary_table(&summary));
    Ok(())
}

fn gen_scenarios(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let set = cli.scenario_set.unwrap_or(1);
    std::fs::create_dir_all(&cli.out).map_err(|e| HarnessError::Io {
        path: cli.out.clone(),
        source: e,
    })?;
    for seed in seed_list(cli, 1)? {
        let spec = generate_scenario_with(set, seed, &cfg.scenario_gen)?;
        let path = cli.out.join(format!("{}.json", spec.name));
        io::save_scenario(&spec, &path)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn run(cli: &Cli, scenario: Option<&Path>) -> Result<()> {
    let source = match scenario {
        Some(p) => ScenarioSource::Fixed(io::load_scenario(p)?),
        None => ScenarioSource::Set(cli.scenario_set.unwrap_or(1)),
    };
    let agents = parse_agents(cli, &[AgentKind::Expert])?;
    if let ScenarioSource::Set(s) = source {
        flag_full_on_long_horizon(Some(s), &agents);
    }
    compare_like(cli, source, &agents, &seed_list(cli, 1)?)
}

fn compare(cli: &Cli) -> Result<()> {
    let set = cli.scenario_set.unwrap_or(1);
    let default: Vec<AgentKind> = AgentKind::ALL
        .into_iter()
        .filter(|&a| set != 3 || a != AgentKind::FullPomdp)
        .collect();
    let agents = parse_agents(cli, &default)?;
    flag_full_on_long_horizon(Some(set), &agents);
    compare_like(cli, ScenarioSource::Set(set), &agents, &seed_list(cli, 3)?)
}

fn ablate_tau(cli: &Cli, taus: &[f64]) -> Result<()> {
    if cli.tau.is_some() {
        return Err(HarnessError::Usage("ablate-tau takes --taus, not --tau".into()));
    }
    if cli.agents.is_some() {
        return Err(HarnessError::Usage("ablate-tau always runs Expert and Learner".into()));
    }
    let cfg = load_config(cli)?;
    let exp = experiment(cli, cfg)?;
    let source = ScenarioSource::Set(cli.scenario_set.unwrap_or(3));
    let seeds = seed_list(cli, 3)?;
    let ablation = exp.ablate_tau(&source, taus, &seeds)?;
    let records: Vec<_> = ablation.runs.iter().map(|r| r.record.clone()).collect();
    let summary = summarize(&records, true);
    write_outputs(&cli.out, &source.label(), &seeds, &ablation.runs, &summary)?;
    output::write_rows(&cli.out.join("ablation.csv"), &ablation.rows)?;
    print!("{}", output::ablation_table(&ablation.rows));
    Ok(())
}

fn trace_attention(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let exp = experiment(cli, cfg)?;
    let source = ScenarioSource::Set(cli.scenario_set.unwrap_or(3));
    let agents = parse_agents(cli, &[AgentKind::Learner])?;
    let seeds = seed_list(cli, 1)?;
    let runs = exp.run_cells(&source, &grid(&agents, &seeds, None))?;
    let records: Vec<_> = runs.iter().map(|r| r.record.clone()).collect();
    write_outputs(&cli.out, &source.label(), &seeds, &runs, &summarize(&records, false))?;
    for r in &runs {
        let path = cli.out.join("traces").join(&r.record.run_id).join("attention.csv");
        match r.episode.final_beta {
            Some(b) => println!(
                "{}  final beta: uncertainty {:.4} utilization {:.4} clinical {:.4} reputation {:.4}",
                path.display(),
                b.uncertainty,
                b.utilization,
                b.clinical,
                b.reputation
            ),
            None => println!("{}  (no learned weights for {})", path.display(), r.record.agent),
        }
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenScenarios => gen_scenarios(cli),
        Command::Run { scenario } => run(cli, scenario.as_deref()),
        Command::Compare => compare(cli),
        Command::AblateTau { taus } => ablate_tau(cli, taus),
        Command::TraceAttention => trace_attention(cli),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
