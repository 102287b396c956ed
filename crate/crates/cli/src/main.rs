use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use gap_bnp::campaign::{self, CampaignConfig};
use gap_bnp::network::{self, RunConfig, DEFAULT_ROUND_CAP};
use gap_bnp::{generate, GapInstance, GraphKind, Mode, Model, NetworkSchedule, ScenarioConfig, SolveStatus, Variant};

#[derive(Parser)]
#[command(name = "gap-bnp", version, about = "Distributed branch-and-price for the generalized assignment problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random instance and write it in text form.
    Generate {
        #[arg(long)]
        model: Model,
        #[arg(long)]
        agents: usize,
        #[arg(long)]
        tasks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one instance file over a simulated network.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Accepted for symmetry with the other commands; runs are deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the result as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the per-round trace to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Monte Carlo campaign over seeded instances; CSV output.
    Campaign {
        #[arg(long)]
        model: Model,
        #[arg(long)]
        agents: usize,
        #[arg(long)]
        tasks: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// First seed; trial `t` uses `seed + t`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        run: RunArgs,
        /// CSV file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a dynamic robot scenario described by a JSON file.
    Dynamic {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Record file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value_t = GraphArg::Cycle)]
    graph: GraphArg,
    /// Defaults to exact for `solve` and first-incumbent for `campaign`.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum, default_value_t = VariantArg::Distributed)]
    variant: VariantArg,
    #[arg(long, default_value_t = DEFAULT_ROUND_CAP)]
    round_cap: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphArg {
    Cycle,
    Complete,
    PeriodicEdge,
}

impl From<GraphArg> for GraphKind {
    fn from(g: GraphArg) -> Self {
        match g {
            GraphArg::Cycle => GraphKind::Cycle,
            GraphArg::Complete => GraphKind::Complete,
            GraphArg::PeriodicEdge => GraphKind::PeriodicEdge,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    FirstIncumbent,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::FirstIncumbent => Mode::FirstIncumbent,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Distributed,
    Cloud,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Distributed => Variant::Distributed,
            VariantArg::Cloud => Variant::Cloud,
        }
    }
}

const EXIT_SUBOPTIMAL: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    }
}

fn solve(instance_path: &Path, run: &RunArgs, out: Option<&Path>, trace: Option<&Path>) -> Result<ExitCode> {
    let text = fs::read_to_string(instance_path).with_context(|| format!("reading {}", instance_path.display()))?;
    let instance = GapInstance::from_text(&text).with_context(|| format!("parsing {}", instance_path.display()))?;
    let schedule = NetworkSchedule::new(instance.n_agents(), run.graph.into());
    let config = RunConfig {
        mode: run.mode.map_or(Mode::Exact, Mode::from),
        round_cap: run.round_cap,
        trace: trace.is_some(),
    };
    let outcome = network::run(&instance, &schedule, run.variant.into(), config)?;
    let m = &outcome.metrics;
    let stored = m.cloud_stored_nodes.unwrap_or(m.max_stored_nodes);

    let mut human = format!("status: {}\n", m.status);
    match m.incumbent_cost {
        Some(c) => human.push_str(&format!("cost: {c}\n")),
        None => human.push_str("cost: none\n"),
    }
    human.push_str(&format!(
        "communication rounds: {}\nmax stored nodes: {stored}\nproblems solved: {}\n",
        m.communication_rounds, m.nodes_solved
    ));
    if let Some(a) = &m.incumbent {
        human.push_str("assignment:\n");
        human.push_str(&a.to_string());
    }
    print!("{human}");

    if let Some(path) = out {
        let record = json!({
            "status": m.status.to_string(),
            "cost": m.incumbent_cost,
            "assignment": m.incumbent.as_ref().map(|a| a.rows().to_vec()),
            "communication_rounds": m.communication_rounds,
            "max_stored_nodes": stored,
            "problems_solved": m.nodes_solved,
        });
        write_output(Some(path), &format!("{}\n", serde_json::to_string(&record)?))?;
    }
    if let Some(path) = trace {
        let lines: String = outcome.trace.iter().map(|r| format!("{r}\n")).collect();
        write_output(Some(path), &format!("t, agent, label, basis_hash, unchanged_rounds, event\n{lines}"))?;
    }
    Ok(match m.status {
        SolveStatus::Optimal => ExitCode::SUCCESS,
        SolveStatus::FeasibleSuboptimal => ExitCode::from(EXIT_SUBOPTIMAL),
        SolveStatus::Infeasible => ExitCode::from(EXIT_INFEASIBLE),
    })
}

fn run_cli(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate {
            model,
            agents,
            tasks,
            seed,
            out,
        } => {
            let instance = generate(model, agents, tasks, seed)?;
            write_output(out.as_deref(), &instance.to_text())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve {
            instance,
            run,
            seed: _,
            out,
            trace,
        } => solve(&instance, &run, out.as_deref(), trace.as_deref()),
        Command::Campaign {
            model,
            agents,
            tasks,
            trials,
            seed,
            run,
            out,
        } => {
            let config = CampaignConfig {
                model,
                n_agents: agents,
                n_tasks: tasks,
                trials,
                base_seed: seed,
                graph: run.graph.into(),
                mode: run.mode.map_or(Mode::FirstIncumbent, Mode::from),
                variant: run.variant.into(),
                round_cap: run.round_cap,
            };
            let rows = campaign::run_campaign(&config)?;
            let mut buf = Vec::new();
            campaign::write_csv(&mut buf, &rows)?;
            write_output(out.as_deref(), std::str::from_utf8(&buf)?)?;
            let s = campaign::summarize(&rows);
            eprintln!(
                "{model} N={agents} M={tasks}: {} trials, {} failed, avg rounds {:.2}, avg relative error {:.3}%, avg max stored nodes {:.2}",
                s.trials, s.failures, s.avg_communication_rounds, s.avg_relative_error_pct, s.avg_max_stored_nodes
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Dynamic { config, seed, out } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let scenario: ScenarioConfig =
                serde_json::from_str(&text).with_context(|| format!("parsing scenario {}", config.display()))?;
            let log = gap_bnp::simulate(&scenario, seed)?;
            let mut text = String::from("time, entity, event, x, y\n");
            for r in &log.records {
                text.push_str(&format!("{r}\n"));
            }
            write_output(out.as_deref(), &text)?;
            for (task, t) in log.service_times() {
                eprintln!("task{task} served after {t:.2} s");
            }
            if let Some(reason) = &log.aborted {
                anyhow::bail!("scenario aborted: {reason}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run_cli(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
