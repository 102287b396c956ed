//! Deterministic round-based execution over time-varying digraphs, for both
//! the purely distributed scheme and the cloud-assisted one.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{AgentContext, AgentState, Broadcast, Message, Mode, StepEvent, Variant};
use crate::error::{Error, Result};
use crate::lp::{self, LpShape, LpSolution};
use crate::model::{Assignment, GapInstance, SolveStatus};
use crate::tree::{self, Action, BranchNode, Tree};

pub const DEFAULT_ROUND_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraphKind {
    /// Edges `(i, i+1 mod N)` every round.
    Cycle,
    /// Every ordered pair every round.
    Complete,
    /// Only edge `(t mod N, t+1 mod N)` at round `t`.
    PeriodicEdge,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphKind::Cycle => "cycle",
            GraphKind::Complete => "complete",
            GraphKind::PeriodicEdge => "periodic-edge",
        })
    }
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cycle" => Ok(GraphKind::Cycle),
            "complete" => Ok(GraphKind::Complete),
            "periodic-edge" => Ok(GraphKind::PeriodicEdge),
            other => Err(Error::Invalid(format!(
                "unknown graph `{other}` (expected cycle, complete or periodic-edge)"
            ))),
        }
    }
}

/// Time-varying digraph `E^t`. Built-in kinds, or an explicit list of edge
/// sets repeated cyclically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum NetworkSchedule {
    Builtin { n_agents: usize, kind: GraphKind },
    Explicit {
        n_agents: usize,
        period: usize,
        rounds: Vec<Vec<(usize, usize)>>,
    },
}

impl NetworkSchedule {
    pub fn new(n_agents: usize, kind: GraphKind) -> Self {
        NetworkSchedule::Builtin { n_agents, kind }
    }

    pub fn n_agents(&self) -> usize {
        match self {
            NetworkSchedule::Builtin { n_agents, .. } | NetworkSchedule::Explicit { n_agents, .. } => *n_agents,
        }
    }

    /// The connectivity period `L` the schedule claims.
    pub fn period(&self) -> usize {
        match self {
            NetworkSchedule::Builtin {
                kind: GraphKind::PeriodicEdge,
                n_agents,
            } => (*n_agents).max(1),
            NetworkSchedule::Builtin { .. } => 1,
            NetworkSchedule::Explicit { period, .. } => *period,
        }
    }

    /// Length after which `edges(t)` repeats.
    fn pattern_length(&self) -> usize {
        match self {
            NetworkSchedule::Builtin {
                kind: GraphKind::PeriodicEdge,
                n_agents,
            } => (*n_agents).max(1),
            NetworkSchedule::Builtin { .. } => 1,
            NetworkSchedule::Explicit { rounds, .. } => rounds.len().max(1),
        }
    }

    pub fn edges(&self, t: u64) -> Vec<(usize, usize)> {
        match self {
            NetworkSchedule::Builtin { n_agents, kind } => {
                let n = *n_agents;
                if n < 2 {
                    return Vec::new();
                }
                match kind {
                    GraphKind::Cycle => (0..n).map(|i| (i, (i + 1) % n)).collect(),
                    GraphKind::Complete => (0..n)
                        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                        .collect(),
                    GraphKind::PeriodicEdge => {
                        let i = (t % n as u64) as usize;
                        vec![(i, (i + 1) % n)]
                    }
                }
            }
            NetworkSchedule::Explicit { rounds, .. } => {
                if rounds.is_empty() {
                    Vec::new()
                } else {
                    rounds[(t % rounds.len() as u64) as usize].clone()
                }
            }
        }
    }

    pub fn in_neighbors(&self, t: u64, agent: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .edges(t)
            .into_iter()
            .filter(|&(from, to)| to == agent && from != agent)
            .map(|(from, _)| from)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Checks that the union of edges over every window of `L` consecutive
/// rounds is strongly connected.
pub fn check_schedule(schedule: &NetworkSchedule) -> bool {
    let n = schedule.n_agents();
    if n == 0 {
        return false;
    }
    if n == 1 {
        return true;
    }
    let l = schedule.period();
    if l == 0 {
        return false;
    }
    (0..schedule.pattern_length() as u64).all(|start| {
        let mut adj = vec![Vec::new(); n];
        let mut radj = vec![Vec::new(); n];
        for t in start..start + l as u64 {
            for (a, b) in schedule.edges(t) {
                if a < n && b < n {
                    adj[a].push(b);
                    radj[b].push(a);
                }
            }
        }
        reaches_all(&adj) && reaches_all(&radj)
    })
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub mode: Mode,
    pub round_cap: u64,
    pub trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Exact,
            round_cap: DEFAULT_ROUND_CAP,
            trace: false,
        }
    }
}

impl RunConfig {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn first_incumbent() -> Self {
        Self {
            mode: Mode::FirstIncumbent,
            ..Self::default()
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Rounds until every agent halted.
    pub communication_rounds: u64,
    /// High-water mark over agents of their local tree size.
    pub max_stored_nodes: usize,
    /// High-water mark of the cloud tree (cloud variant only).
    pub cloud_stored_nodes: Option<usize>,
    /// Problems solved (labels consumed).
    pub nodes_solved: u64,
    pub incumbent_cost: Option<f64>,
    pub incumbent: Option<Assignment>,
    pub status: SolveStatus,
    pub relative_error_pct: Option<f64>,
}

impl RunMetrics {
    /// `100 (J_ref - J_inc) / J_ref` against a reference optimum.
    pub fn with_reference(mut self, reference: Option<f64>) -> Self {
        self.relative_error_pct = relative_error_pct(reference, self.incumbent_cost);
        self
    }
}

pub fn relative_error_pct(reference: Option<f64>, found: Option<f64>) -> Option<f64> {
    match (reference, found) {
        (Some(r), Some(f)) if r != 0.0 => Some(100.0 * (r - f) / r.abs()),
        (Some(r), Some(f)) if r == f => Some(0.0),
        _ => None,
    }
}

/// One line of the optional trace: `t, agent, label, basis_hash,
/// unchanged_rounds, event`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    pub agent: usize,
    pub label: u64,
    pub basis_hash: u64,
    pub unchanged_rounds: usize,
    pub event: String,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}, {}, {}, {:016x}, {}, {}",
            self.t, self.agent, self.label, self.basis_hash, self.unchanged_rounds, self.event
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub metrics: RunMetrics,
    pub agents: Vec<AgentState>,
    pub trace: Vec<TraceRecord>,
}

fn agent_context(instance: &GapInstance, schedule: &NetworkSchedule, mode: Mode, variant: Variant) -> Result<AgentContext> {
    if schedule.n_agents() != instance.n_agents() {
        return Err(Error::Dimension(format!(
            "schedule over {} agents, instance has {}",
            schedule.n_agents(),
            instance.n_agents()
        )));
    }
    Ok(AgentContext {
        shape: LpShape::for_instance(instance),
        period: schedule.period(),
        mode,
        variant,
    })
}

fn event_name(e: &StepEvent) -> String {
    match e {
        StepEvent::ColumnGeneration { changed: true } => "pivot".into(),
        StepEvent::ColumnGeneration { changed: false } => "stable".into(),
        StepEvent::NodeDone {
            action,
            solved_label,
            basis_fingerprint,
            halted,
        } => format!(
            "node {solved_label} {} {:016x}{}",
            match action {
                Action::UpdateIncumbent => "incumbent",
                Action::Branch => "branch",
                Action::Prune => "prune",
            },
            basis_fingerprint,
            if *halted { " halt" } else { "" }
        ),
        StepEvent::Upload => "upload".into(),
    }
}

/// Outgoing message, events and cloud upload of one agent in one round.
type RoundResult = (Option<Message>, Vec<StepEvent>, Option<LpSolution>);

/// Steps every live agent once on the previous round's messages.
fn run_round(
    t: u64,
    agents: &mut [AgentState],
    outbox: &[Option<Message>],
    instance: &GapInstance,
    schedule: &NetworkSchedule,
    ctx: &AgentContext,
) -> Result<Vec<RoundResult>> {
    let edges = schedule.edges(t);
    agents
        .par_iter_mut()
        .map(|agent| {
            if agent.halted {
                return Ok((None, Vec::new(), None));
            }
            let mut senders: Vec<usize> = edges
                .iter()
                .filter(|&&(from, to)| to == agent.id && from != agent.id)
                .map(|&(from, _)| from)
                .collect();
            senders.sort_unstable();
            senders.dedup();
            let inbox: Vec<Message> = senders.iter().filter_map(|&j| outbox[j].clone()).collect();
            let report = agent.step(&inbox, instance.agent_data(agent.id), ctx)?;
            Ok((Some(report.message), report.events, report.upload))
        })
        .collect()
}

fn record(trace: &mut Vec<TraceRecord>, t: u64, agent: &AgentState, events: &[StepEvent]) {
    for e in events {
        trace.push(TraceRecord {
            t,
            agent: agent.id,
            label: agent.label,
            basis_hash: agent.solution.basis.fingerprint(),
            unchanged_rounds: agent.unchanged_rounds,
            event: event_name(e),
        });
    }
}

fn status_of(mode: Mode, cost: Option<f64>) -> SolveStatus {
    match (cost, mode) {
        (None, _) => SolveStatus::Infeasible,
        (Some(_), Mode::Exact) => SolveStatus::Optimal,
        (Some(_), Mode::FirstIncumbent) => SolveStatus::FeasibleSuboptimal,
    }
}

fn round_cap_error(cap: u64, agents: &[AgentState]) -> Error {
    Error::RoundCap {
        cap,
        label: agents.iter().map(|a| a.label).max().unwrap_or(0),
        halted: agents.iter().filter(|a| a.halted).count(),
        agents: agents.len(),
    }
}

/// Purely distributed run: every agent keeps its own tree and advances
/// labels on its own.
pub fn run_distributed(instance: &GapInstance, schedule: &NetworkSchedule, config: RunConfig) -> Result<RunOutcome> {
    let ctx = agent_context(instance, schedule, config.mode, Variant::Distributed)?;
    let n = instance.n_agents();
    let mut agents: Vec<AgentState> = (0..n).map(|i| AgentState::new(i, &ctx)).collect();
    let mut outbox: Vec<Option<Message>> = agents.iter().map(|a| Some(a.outbound())).collect();
    let mut trace = Vec::new();
    let mut t = 0;

    while agents.iter().any(|a| !a.halted) {
        if t >= config.round_cap {
            return Err(round_cap_error(config.round_cap, &agents));
        }
        let results = run_round(t, &mut agents, &outbox, instance, schedule, &ctx)?;
        for (agent, (msg, events, _)) in agents.iter().zip(results) {
            if config.trace {
                record(&mut trace, t, agent, &events);
            }
            outbox[agent.id] = msg;
        }
        t += 1;
    }

    // All agents follow the same tree, so any of them holds the common
    // incumbent; take the best in case of disagreement.
    let best = agents
        .iter()
        .filter(|a| a.incumbent_cost.is_some())
        .max_by(|a, b| a.incumbent_cost.partial_cmp(&b.incumbent_cost).unwrap_or(std::cmp::Ordering::Equal));
    let incumbent_cost = best.and_then(|a| a.incumbent_cost);
    let metrics = RunMetrics {
        communication_rounds: t,
        max_stored_nodes: agents.iter().map(AgentState::stored_nodes).max().unwrap_or(0),
        cloud_stored_nodes: None,
        nodes_solved: agents.iter().map(|a| a.label).max().unwrap_or(0),
        incumbent_cost,
        incumbent: best.and_then(|a| a.incumbent_z.clone()),
        status: status_of(config.mode, incumbent_cost),
        relative_error_pct: None,
    };
    Ok(RunOutcome {
        metrics,
        agents,
        trace,
    })
}

/// The auxiliary node of the cloud-assisted variant: stores the tree and
/// the incumbent, judges converged bases and hands out the next problem.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudState {
    pub tree: Tree,
    pub node: BranchNode,
    pub label: u64,
    pub incumbent_cost: Option<f64>,
    pub incumbent_z: Option<Assignment>,
    pub halted: bool,
}

impl Default for CloudState {
    fn default() -> Self {
        Self::new()
    }
}

impl CloudState {
    pub fn new() -> Self {
        let mut tree = Tree::with_root();
        let node = tree.extract().expect("fresh tree holds the root");
        Self {
            tree,
            node,
            label: 0,
            incumbent_cost: None,
            incumbent_z: None,
            halted: false,
        }
    }

    /// Handles the converged basis of the current problem. Returns one
    /// broadcast per agent.
    pub fn process(&mut self, solution: &LpSolution, n_agents: usize, n_tasks: usize, mode: Mode) -> Result<Vec<Broadcast>> {
        let extracted = lp::extract_solution(solution, n_agents, n_tasks);
        let node_cost = (!extracted.contains_artificial).then_some(extracted.cost);
        let action = tree::consider(node_cost, &extracted.z, self.incumbent_cost);
        let mut stop = false;
        match action {
            Action::UpdateIncumbent => {
                self.incumbent_cost = node_cost;
                self.incumbent_z = Some(tree::round_assignment(&extracted.z));
                stop = mode == Mode::FirstIncumbent;
            }
            Action::Branch => {
                self.tree.branch(&extracted.z, &self.node)?;
            }
            Action::Prune => {}
        }
        self.label += 1;
        let next = if stop { None } else { self.tree.extract() };
        Ok(match next {
            Some(node) => {
                let out = node
                    .all_fixings(n_agents)
                    .into_iter()
                    .map(|fixings| Broadcast::Solve {
                        label: self.label,
                        fixings,
                    })
                    .collect();
                self.node = node;
                out
            }
            None => {
                self.halted = true;
                let halt = Broadcast::Halt {
                    incumbent_cost: self.incumbent_cost,
                    incumbent_z: self.incumbent_z.clone(),
                };
                vec![halt; n_agents]
            }
        })
    }
}

/// Cloud-assisted run: agents only generate columns and detect convergence;
/// the cloud owns the tree. Cloud broadcasts reach agents at the start of
/// the next round.
pub fn run_cloud_assisted(instance: &GapInstance, schedule: &NetworkSchedule, config: RunConfig) -> Result<(RunOutcome, CloudState)> {
    let ctx = agent_context(instance, schedule, config.mode, Variant::Cloud)?;
    let (n, m) = (instance.n_agents(), instance.n_tasks());
    let mut agents: Vec<AgentState> = (0..n).map(|i| AgentState::new(i, &ctx)).collect();
    let mut outbox: Vec<Option<Message>> = agents.iter().map(|a| Some(a.outbound())).collect();
    let mut cloud = CloudState::new();
    let mut pending: Option<Vec<Broadcast>> = None;
    let mut trace = Vec::new();
    let mut t = 0;

    while agents.iter().any(|a| !a.halted) {
        if t >= config.round_cap {
            return Err(round_cap_error(config.round_cap, &agents));
        }
        if let Some(broadcasts) = pending.take() {
            for (agent, b) in agents.iter_mut().zip(&broadcasts) {
                agent.apply_broadcast(b, &ctx)?;
                if config.trace {
                    let event = match b {
                        Broadcast::Solve { label, .. } => format!("cloud-solve {label}"),
                        Broadcast::Halt { .. } => "cloud-halt".to_string(),
                    };
                    trace.push(TraceRecord {
                        t,
                        agent: agent.id,
                        label: agent.label,
                        basis_hash: agent.solution.basis.fingerprint(),
                        unchanged_rounds: agent.unchanged_rounds,
                        event,
                    });
                }
            }
            // Messages from before the switch carry the old label and are
            // ignored as stale; halted agents stop sending.
            for agent in &agents {
                if agent.halted {
                    outbox[agent.id] = None;
                }
            }
            if agents.iter().all(|a| a.halted) {
                break;
            }
        }
        let results = run_round(t, &mut agents, &outbox, instance, schedule, &ctx)?;
        let mut upload: Option<LpSolution> = None;
        for (agent, (msg, events, up)) in agents.iter().zip(results) {
            if config.trace {
                record(&mut trace, t, agent, &events);
            }
            outbox[agent.id] = msg;
            // The lowest-indexed uploader wins; in exact consensus all
            // uploads of a label carry the same basis.
            if upload.is_none() {
                upload = up;
            }
        }
        if let Some(solution) = upload {
            pending = Some(cloud.process(&solution, n, m, config.mode)?);
        }
        t += 1;
    }

    let metrics = RunMetrics {
        communication_rounds: t,
        max_stored_nodes: agents.iter().map(AgentState::stored_nodes).max().unwrap_or(0),
        cloud_stored_nodes: Some(cloud.tree.max_stored()),
        nodes_solved: cloud.label,
        incumbent_cost: cloud.incumbent_cost,
        incumbent: cloud.incumbent_z.clone(),
        status: status_of(config.mode, cloud.incumbent_cost),
        relative_error_pct: None,
    };
    Ok((
        RunOutcome {
            metrics,
            agents,
            trace,
        },
        cloud,
    ))
}

/// Dispatches on the variant.
pub fn run(instance: &GapInstance, schedule: &NetworkSchedule, variant: Variant, config: RunConfig) -> Result<RunOutcome> {
    match variant {
        Variant::Distributed => run_distributed(instance, schedule, config),
        Variant::Cloud => run_cloud_assisted(instance, schedule, config).map(|(o, _)| o),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> GapInstance {
        GapInstance::new(
            vec![vec![10.0, 1.0], vec![1.0, 10.0]],
            vec![vec![1, 1], vec![1, 1]],
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn schedules_satisfy_connectivity() {
        assert!(check_schedule(&NetworkSchedule::new(5, GraphKind::Cycle)));
        let p = NetworkSchedule::new(3, GraphKind::PeriodicEdge);
        assert_eq!(p.period(), 3);
        assert!(check_schedule(&p));
        let edgeless = NetworkSchedule::Explicit {
            n_agents: 3,
            period: 1,
            rounds: vec![vec![]],
        };
        assert!(!check_schedule(&edgeless));
        // Single-edge schedule claiming L=1 is not 1-strongly connected.
        let lying = NetworkSchedule::Explicit {
            n_agents: 3,
            period: 1,
            rounds: vec![vec![(0, 1)], vec![(1, 2)], vec![(2, 0)]],
        };
        assert!(!check_schedule(&lying));
    }

    #[test]
    fn periodic_edge_rotates() {
        let p = NetworkSchedule::new(3, GraphKind::PeriodicEdge);
        assert_eq!(p.edges(0), vec![(0, 1)]);
        assert_eq!(p.edges(4), vec![(1, 2)]);
        assert_eq!(p.in_neighbors(5, 0), vec![2]);
    }

    #[test]
    fn toy_distributed_exact() {
        let out = run_distributed(&toy(), &NetworkSchedule::new(2, GraphKind::Cycle), RunConfig::exact()).unwrap();
        assert_eq!(out.metrics.incumbent_cost, Some(20.0));
        assert_eq!(out.metrics.status, SolveStatus::Optimal);
        for a in &out.agents {
            assert!(a.halted);
            assert_eq!(a.incumbent_cost, Some(20.0));
            assert_eq!(a.incumbent_z, out.agents[0].incumbent_z);
        }
    }

    #[test]
    fn infeasible_instance_terminates_without_incumbent() {
        let inst = GapInstance::new(vec![vec![7.0]], vec![vec![5]], vec![2.0]).unwrap();
        let out = run_distributed(&inst, &NetworkSchedule::new(1, GraphKind::Cycle), RunConfig::exact()).unwrap();
        assert_eq!(out.metrics.status, SolveStatus::Infeasible);
        assert_eq!(out.metrics.incumbent_cost, None);
    }

    #[test]
    fn runs_are_deterministic() {
        let s = NetworkSchedule::new(2, GraphKind::Cycle);
        let a = run_distributed(&toy(), &s, RunConfig::exact().with_trace()).unwrap();
        let b = run_distributed(&toy(), &s, RunConfig::exact().with_trace()).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn cloud_matches_distributed_on_toy() {
        let s = NetworkSchedule::new(2, GraphKind::Cycle);
        let (out, cloud) = run_cloud_assisted(&toy(), &s, RunConfig::exact()).unwrap();
        assert_eq!(out.metrics.incumbent_cost, Some(20.0));
        assert_eq!(out.metrics.max_stored_nodes, 0);
        assert!(cloud.halted);
        assert!(out.agents.iter().all(|a| a.incumbent_cost == Some(20.0)));
    }

    #[test]
    fn cloud_routes_fixings_per_agent() {
        // Branch on (agent 0, task 0); the z=0 child is solved next.
        let mut cloud = CloudState::new();
        // Agent 0 can only take one task, agent 1 both or none: the master
        // optimum mixes each pair at one half.
        let cols = vec![
            lp::Column::with_cost(0, vec![true, false], 1.0),
            lp::Column::with_cost(0, vec![false, true], 1.0),
            lp::Column::with_cost(1, vec![true, true], 3.0),
            lp::Column::with_cost(1, vec![false, false], 0.0),
        ];
        let frac = lp::solve_rmp(&cols, &LpShape::new(2, 2, 100.0)).unwrap();
        let e = lp::extract_solution(&frac, 2, 2);
        assert_eq!(tree::first_fractional(&e.z), Some((0, 0)));
        let out = cloud.process(&frac, 2, 2, Mode::Exact).unwrap();
        match (&out[0], &out[1]) {
            (Broadcast::Solve { label: 1, fixings: f0 }, Broadcast::Solve { label: 1, fixings: f1 }) => {
                assert_eq!(f0.iter().collect::<Vec<_>>(), vec![(0, false)]);
                assert!(f1.is_empty());
            }
            other => panic!("unexpected broadcast {other:?}"),
        }
    }
}
