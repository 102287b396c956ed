//! Monte Carlo benchmark campaigns: many seeded instances of one model and
//! size, solved by the distributed scheme and scored against a reference
//! optimum.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::agent::{Mode, Variant};
use crate::centralized::solve_centralized;
use crate::error::{Error, Result};
use crate::model::{generate, oracle_solve, Model, ORACLE_LIMIT};
use crate::network::{self, GraphKind, NetworkSchedule, RunConfig, DEFAULT_ROUND_CAP};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampaignConfig {
    pub model: Model,
    pub n_agents: usize,
    pub n_tasks: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub graph: GraphKind,
    pub mode: Mode,
    pub variant: Variant,
    pub round_cap: u64,
}

impl CampaignConfig {
    /// First-incumbent runs on the cycle, as in the benchmark table.
    pub fn new(model: Model, n_agents: usize, n_tasks: usize, trials: usize) -> Self {
        Self {
            model,
            n_agents,
            n_tasks,
            trials,
            base_seed: 0,
            graph: GraphKind::Cycle,
            mode: Mode::FirstIncumbent,
            variant: Variant::Distributed,
            round_cap: DEFAULT_ROUND_CAP,
        }
    }
}

/// One trial. Column order is the CSV schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignRow {
    pub model: String,
    #[serde(rename = "N")]
    pub n_agents: usize,
    #[serde(rename = "M")]
    pub n_tasks: usize,
    pub trial: usize,
    pub seed: u64,
    pub communication_rounds: Option<u64>,
    pub incumbent_cost: Option<f64>,
    pub oracle_cost: Option<f64>,
    pub relative_error_pct: Option<f64>,
    pub max_stored_nodes: Option<usize>,
    pub variant: String,
    pub wall_time_ms: u128,
    /// Failure message of the trial, empty on success.
    pub error: String,
}

impl CampaignRow {
    /// The row without its timing, for reproducibility checks.
    pub fn timeless(&self) -> Self {
        Self {
            wall_time_ms: 0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CampaignSummary {
    pub trials: usize,
    pub failures: usize,
    pub avg_communication_rounds: f64,
    pub avg_relative_error_pct: f64,
    pub avg_max_stored_nodes: f64,
}

fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Distributed => "distributed",
        Variant::Cloud => "cloud",
    }
}

/// Exact optimum by enumeration when small enough, by the centralized
/// branch-and-price otherwise.
pub fn reference_cost(instance: &crate::model::GapInstance) -> Result<Option<f64>> {
    if instance.n_agents() * instance.n_tasks() <= ORACLE_LIMIT {
        Ok(oracle_solve(instance)?.cost)
    } else {
        Ok(solve_centralized(instance)?.report.cost)
    }
}

fn run_trial(config: &CampaignConfig, trial: usize) -> CampaignRow {
    let seed = config.base_seed + trial as u64;
    let start = Instant::now();
    let mut row = CampaignRow {
        model: config.model.to_string(),
        n_agents: config.n_agents,
        n_tasks: config.n_tasks,
        trial,
        seed,
        communication_rounds: None,
        incumbent_cost: None,
        oracle_cost: None,
        relative_error_pct: None,
        max_stored_nodes: None,
        variant: variant_name(config.variant).to_string(),
        wall_time_ms: 0,
        error: String::new(),
    };
    let result = (|| -> Result<()> {
        let instance = generate(config.model, config.n_agents, config.n_tasks, seed)?;
        let schedule = NetworkSchedule::new(config.n_agents, config.graph);
        let run = RunConfig {
            mode: config.mode,
            round_cap: config.round_cap,
            trace: false,
        };
        let outcome = network::run(&instance, &schedule, config.variant, run)?;
        let m = &outcome.metrics;
        row.communication_rounds = Some(m.communication_rounds);
        row.incumbent_cost = m.incumbent_cost;
        row.max_stored_nodes = Some(m.cloud_stored_nodes.unwrap_or(m.max_stored_nodes));
        row.oracle_cost = reference_cost(&instance)?;
        row.relative_error_pct = network::relative_error_pct(row.oracle_cost, row.incumbent_cost);
        Ok(())
    })();
    if let Err(e) = result {
        log::warn!("trial {trial} (seed {seed}) failed: {e}");
        row.error = e.to_string();
    }
    row.wall_time_ms = start.elapsed().as_millis();
    log::debug!("trial {trial}: {:?} rounds in {} ms", row.communication_rounds, row.wall_time_ms);
    row
}

/// Runs every trial (in parallel) and returns the rows in trial order.
pub fn run_campaign(config: &CampaignConfig) -> Result<Vec<CampaignRow>> {
    if config.trials == 0 {
        return Err(Error::Invalid("a campaign needs at least one trial".into()));
    }
    if config.n_agents == 0 || config.n_tasks == 0 {
        return Err(Error::Dimension("N and M must be at least 1".into()));
    }
    Ok((0..config.trials).into_par_iter().map(|t| run_trial(config, t)).collect())
}

pub fn summarize(rows: &[CampaignRow]) -> CampaignSummary {
    let mean = |xs: Vec<f64>| if xs.is_empty() { f64::NAN } else { xs.iter().sum::<f64>() / xs.len() as f64 };
    CampaignSummary {
        trials: rows.len(),
        failures: rows.iter().filter(|r| !r.error.is_empty()).count(),
        avg_communication_rounds: mean(rows.iter().filter_map(|r| r.communication_rounds.map(|x| x as f64)).collect()),
        avg_relative_error_pct: mean(rows.iter().filter_map(|r| r.relative_error_pct).collect()),
        avg_max_stored_nodes: mean(rows.iter().filter_map(|r| r.max_stored_nodes.map(|x| x as f64)).collect()),
    }
}

/// One CSV line per trial, then an `avg` line over the successful ones.
pub fn write_csv<W: Write>(out: W, rows: &[CampaignRow]) -> Result<()> {
    let io = |e: csv::Error| Error::Invalid(format!("csv output: {e}"));
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    if let Some(first) = rows.first() {
        let s = summarize(rows);
        let wall: u128 = rows.iter().map(|r| r.wall_time_ms).sum::<u128>() / rows.len() as u128;
        w.write_record([
            first.model.clone(),
            first.n_agents.to_string(),
            first.n_tasks.to_string(),
            "avg".into(),
            String::new(),
            s.avg_communication_rounds.to_string(),
            String::new(),
            String::new(),
            s.avg_relative_error_pct.to_string(),
            s.avg_max_stored_nodes.to_string(),
            first.variant.clone(),
            wall.to_string(),
            format!("{} failed", s.failures),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Invalid(format!("csv output: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_trial_average_equals_row() {
        let rows = run_campaign(&CampaignConfig::new(Model::A, 2, 4, 1)).unwrap();
        let s = summarize(&rows);
        assert_eq!(s.avg_communication_rounds, rows[0].communication_rounds.unwrap() as f64);
        assert_eq!(Some(s.avg_relative_error_pct), rows[0].relative_error_pct);
    }

    #[test]
    fn rows_are_reproducible_and_ordered() {
        let mut cfg = CampaignConfig::new(Model::B, 3, 6, 4);
        cfg.base_seed = 7;
        let a = run_campaign(&cfg).unwrap();
        let b = run_campaign(&cfg).unwrap();
        assert_eq!(a.iter().map(CampaignRow::timeless).collect::<Vec<_>>(), b.iter().map(CampaignRow::timeless).collect::<Vec<_>>());
        assert_eq!(a.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![7, 8, 9, 10]);
    }

    #[test]
    fn csv_header_order() {
        let rows = run_campaign(&CampaignConfig::new(Model::A, 2, 4, 2)).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "model,N,M,trial,seed,communication_rounds,incumbent_cost,oracle_cost,relative_error_pct,max_stored_nodes,variant,wall_time_ms,error"
        );
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().last().unwrap().starts_with("A,2,4,avg,"));
    }

    #[test]
    fn failures_stay_in_their_row() {
        let mut cfg = CampaignConfig::new(Model::A, 2, 4, 2);
        cfg.round_cap = 3;
        let rows = run_campaign(&cfg).unwrap();
        assert!(rows.iter().all(|r| r.error.contains("round cap")));
        assert!(rows.iter().all(|r| r.communication_rounds.is_none()));
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(run_campaign(&CampaignConfig::new(Model::A, 2, 4, 0)).is_err());
    }
}
