//! Generalized assignment instances, random benchmark families, and an
//! exhaustive reference solver.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `N * M` the exhaustive oracle accepts.
pub const ORACLE_LIMIT: usize = 24;

/// Profit, weight and capacity data for `N` agents and `M` tasks.
///
/// Weights are integral in every benchmark family, which lets the pricing
/// knapsack run an exact integer DP. Profits and capacities are reals; the
/// random families only ever produce integer profits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapInstance {
    n_agents: usize,
    n_tasks: usize,
    profits: Vec<Vec<f64>>,
    weights: Vec<Vec<u64>>,
    capacities: Vec<f64>,
}

impl GapInstance {
    pub fn new(profits: Vec<Vec<f64>>, weights: Vec<Vec<u64>>, capacities: Vec<f64>) -> Result<Self> {
        let n_agents = profits.len();
        if n_agents == 0 {
            return Err(Error::Dimension("at least one agent is required".into()));
        }
        let n_tasks = profits[0].len();
        if n_tasks == 0 {
            return Err(Error::Dimension("at least one task is required".into()));
        }
        if weights.len() != n_agents || capacities.len() != n_agents {
            return Err(Error::Dimension(format!(
                "{} profit rows, {} weight rows, {} capacities",
                n_agents,
                weights.len(),
                capacities.len()
            )));
        }
        for (i, (p, w)) in profits.iter().zip(&weights).enumerate() {
            if p.len() != n_tasks || w.len() != n_tasks {
                return Err(Error::Dimension(format!(
                    "agent {i}: expected {n_tasks} entries, got {} profits and {} weights",
                    p.len(),
                    w.len()
                )));
            }
        }
        if profits.iter().flatten().chain(&capacities).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("profits and capacities must be finite".into()));
        }
        if capacities.iter().any(|&g| g < 0.0) {
            return Err(Error::Invalid("capacities must be nonnegative".into()));
        }
        Ok(Self {
            n_agents,
            n_tasks,
            profits,
            weights,
            capacities,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    /// Profit row `c_i` of one agent.
    pub fn profits(&self, agent: usize) -> &[f64] {
        &self.profits[agent]
    }

    /// Weight row `D_i` of one agent.
    pub fn weights(&self, agent: usize) -> &[u64] {
        &self.weights[agent]
    }

    pub fn capacity(&self, agent: usize) -> f64 {
        self.capacities[agent]
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    /// The private data one agent holds.
    pub fn agent_data(&self, agent: usize) -> AgentData<'_> {
        AgentData {
            profits: &self.profits[agent],
            weights: &self.weights[agent],
            capacity: self.capacities[agent],
        }
    }

    /// Sum of absolute profits; used to size the Big-M penalty.
    pub fn abs_profit_sum(&self) -> f64 {
        self.profits.iter().flatten().map(|p| p.abs()).sum()
    }

    /// Serializes to the line-oriented text format:
    /// `N M`, N profit rows, N weight rows, one capacity row.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n_agents, self.n_tasks);
        for row in &self.profits {
            out.push_str(&join(row.iter()));
            out.push('\n');
        }
        for row in &self.weights {
            out.push_str(&join(row.iter()));
            out.push('\n');
        }
        out.push_str(&join(self.capacities.iter()));
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty input".into(),
        })?;
        let dims: Vec<usize> = parse_row(line, header)?;
        if dims.len() != 2 {
            return Err(Error::Parse {
                line,
                msg: "header must be `N M`".into(),
            });
        }
        let (n, m) = (dims[0], dims[1]);
        let mut next_row = |what: &str| -> Result<(usize, &str)> {
            lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("unexpected end of input while reading {what}"),
            })
        };

        let mut profits = Vec::with_capacity(n);
        for _ in 0..n {
            let (line, l) = next_row("profits")?;
            profits.push(sized(line, parse_row::<f64>(line, l)?, m)?);
        }
        let mut weights = Vec::with_capacity(n);
        for _ in 0..n {
            let (line, l) = next_row("weights")?;
            weights.push(sized(line, parse_row::<u64>(line, l)?, m)?);
        }
        let (line, l) = next_row("capacities")?;
        let capacities = sized(line, parse_row::<f64>(line, l)?, n)?;
        if let Some((line, _)) = lines.next() {
            return Err(Error::Parse {
                line,
                msg: "trailing data after capacity row".into(),
            });
        }
        GapInstance::new(profits, weights, capacities)
    }
}

fn join<T: fmt::Display>(items: impl Iterator<Item = T>) -> String {
    items.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_row<T: FromStr>(line: usize, text: &str) -> Result<Vec<T>> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<T>().map_err(|_| Error::Parse {
                line,
                msg: format!("cannot parse `{tok}`"),
            })
        })
        .collect()
}

fn sized<T>(line: usize, row: Vec<T>, len: usize) -> Result<Vec<T>> {
    if row.len() != len {
        return Err(Error::Parse {
            line,
            msg: format!("expected {len} entries, found {}", row.len()),
        });
    }
    Ok(row)
}

/// Borrowed view of a single agent's private data (`c_i`, `D_i`, `g_i`).
#[derive(Debug, Clone, Copy)]
pub struct AgentData<'a> {
    pub profits: &'a [f64],
    pub weights: &'a [u64],
    pub capacity: f64,
}

/// Binary assignment matrix `x[i][m]`; row `i` is the vector `z_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    rows: Vec<Vec<bool>>,
}

impl Assignment {
    pub fn empty(n_agents: usize, n_tasks: usize) -> Self {
        Self {
            rows: vec![vec![false; n_tasks]; n_agents],
        }
    }

    pub fn from_rows(rows: Vec<Vec<bool>>) -> Self {
        Self { rows }
    }

    /// Builds an assignment from the agent chosen for each task.
    pub fn from_owners(n_agents: usize, owners: &[usize]) -> Self {
        let mut a = Self::empty(n_agents, owners.len());
        for (m, &i) in owners.iter().enumerate() {
            a.rows[i][m] = true;
        }
        a
    }

    pub fn n_agents(&self) -> usize {
        self.rows.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn get(&self, agent: usize, task: usize) -> bool {
        self.rows[agent][task]
    }

    pub fn set(&mut self, agent: usize, task: usize, value: bool) {
        self.rows[agent][task] = value;
    }

    pub fn row(&self, agent: usize) -> &[bool] {
        &self.rows[agent]
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    /// Agent holding each task, if exactly one does.
    pub fn owner_of(&self, task: usize) -> Option<usize> {
        let mut owners = (0..self.rows.len()).filter(|&i| self.rows[i][task]);
        match (owners.next(), owners.next()) {
            (Some(i), None) => Some(i),
            _ => None,
        }
    }

    pub fn tasks_of(&self, agent: usize) -> Vec<usize> {
        self.rows[agent]
            .iter()
            .enumerate()
            .filter_map(|(m, &x)| x.then_some(m))
            .collect()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            let line: Vec<&str> = row.iter().map(|&x| if x { "1" } else { "0" }).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    TaskUnassigned { task: usize },
    TaskMultiplyAssigned { task: usize, count: usize },
    CapacityExceeded { agent: usize, load: u64, capacity: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TaskUnassigned { task } => write!(f, "task {} unassigned", task + 1),
            Violation::TaskMultiplyAssigned { task, count } => {
                write!(f, "task {} assigned {count} times", task + 1)
            }
            Violation::CapacityExceeded {
                agent,
                load,
                capacity,
            } => write!(f, "capacity of agent {} exceeded ({load} > {capacity})", agent + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evaluation {
    Feasible(f64),
    Violated(Vec<Violation>),
}

impl Evaluation {
    pub fn cost(&self) -> Option<f64> {
        match self {
            Evaluation::Feasible(c) => Some(*c),
            Evaluation::Violated(_) => None,
        }
    }
}

/// Objective value of `assignment`, or every constraint it violates.
pub fn evaluate(instance: &GapInstance, assignment: &Assignment) -> Result<Evaluation> {
    if assignment.n_agents() != instance.n_agents() || assignment.n_tasks() != instance.n_tasks() {
        return Err(Error::Dimension(format!(
            "assignment is {}x{}, instance is {}x{}",
            assignment.n_agents(),
            assignment.n_tasks(),
            instance.n_agents(),
            instance.n_tasks()
        )));
    }
    let mut violations = Vec::new();
    for m in 0..instance.n_tasks() {
        let count = (0..instance.n_agents()).filter(|&i| assignment.get(i, m)).count();
        match count {
            0 => violations.push(Violation::TaskUnassigned { task: m }),
            1 => {}
            count => violations.push(Violation::TaskMultiplyAssigned { task: m, count }),
        }
    }
    for i in 0..instance.n_agents() {
        let load: u64 = assignment.tasks_of(i).iter().map(|&m| instance.weights(i)[m]).sum();
        if load as f64 > instance.capacity(i) {
            violations.push(Violation::CapacityExceeded {
                agent: i,
                load,
                capacity: instance.capacity(i),
            });
        }
    }
    if !violations.is_empty() {
        return Ok(Evaluation::Violated(violations));
    }
    let cost = (0..instance.n_agents())
        .flat_map(|i| assignment.tasks_of(i).into_iter().map(move |m| (i, m)))
        .map(|(i, m)| instance.profits(i)[m])
        .sum();
    Ok(Evaluation::Feasible(cost))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    FeasibleSuboptimal,
    Infeasible,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::FeasibleSuboptimal => "feasible-suboptimal",
            SolveStatus::Infeasible => "infeasible",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub cost: Option<f64>,
    pub assignment: Option<Assignment>,
}

impl SolveReport {
    pub fn infeasible() -> Self {
        Self {
            status: SolveStatus::Infeasible,
            cost: None,
            assignment: None,
        }
    }
}

/// Exact optimum by depth-first enumeration of the agent chosen for each
/// task, pruning branches that overflow a capacity.
///
/// Ties keep the first optimum met in lexicographic order of the per-task
/// agent choices.
pub fn oracle_solve(instance: &GapInstance) -> Result<SolveReport> {
    let (n, m) = (instance.n_agents(), instance.n_tasks());
    if n * m > ORACLE_LIMIT {
        return Err(Error::OracleGuard {
            n_agents: n,
            n_tasks: m,
            limit: ORACLE_LIMIT,
        });
    }

    struct Search<'a> {
        instance: &'a GapInstance,
        owners: Vec<usize>,
        loads: Vec<u64>,
        best: Option<(f64, Vec<usize>)>,
    }

    impl Search<'_> {
        fn visit(&mut self, task: usize, profit: f64) {
            if task == self.instance.n_tasks() {
                if self.best.as_ref().is_none_or(|(c, _)| profit > *c) {
                    self.best = Some((profit, self.owners.clone()));
                }
                return;
            }
            for i in 0..self.instance.n_agents() {
                let load = self.loads[i] + self.instance.weights(i)[task];
                if load as f64 > self.instance.capacity(i) {
                    continue;
                }
                let prev = self.loads[i];
                self.loads[i] = load;
                self.owners[task] = i;
                self.visit(task + 1, profit + self.instance.profits(i)[task]);
                self.loads[i] = prev;
            }
        }
    }

    let mut search = Search {
        instance,
        owners: vec![0; m],
        loads: vec![0; n],
        best: None,
    };
    search.visit(0, 0.0);
    Ok(match search.best {
        None => SolveReport::infeasible(),
        Some((_, owners)) => {
            let assignment = Assignment::from_owners(n, &owners);
            // Recompute in a fixed summation order so the reported cost is
            // exactly `evaluate` on the reported assignment.
            let cost = evaluate(instance, &assignment)?.cost();
            SolveReport {
                status: SolveStatus::Optimal,
                cost,
                assignment: Some(assignment),
            }
        }
    })
}

/// Random benchmark families of increasing difficulty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    A,
    B,
    C,
    D,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::A, Model::B, Model::C, Model::D];
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Model::A => "A",
            Model::B => "B",
            Model::C => "C",
            Model::D => "D",
        };
        f.write_str(s)
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Model::A),
            "B" => Ok(Model::B),
            "C" => Ok(Model::C),
            "D" => Ok(Model::D),
            other => Err(Error::Invalid(format!("unknown model `{other}` (expected A, B, C or D)"))),
        }
    }
}

/// Draws an instance of the given family. Identical arguments always give
/// the identical instance, and families A, B and C share `w` and `p` for a
/// given seed.
pub fn generate(model: Model, n_agents: usize, n_tasks: usize, seed: u64) -> Result<GapInstance> {
    if n_agents == 0 || n_tasks == 0 {
        return Err(Error::Dimension("N and M must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (weights, profits): (Vec<Vec<u64>>, Vec<Vec<f64>>) = match model {
        Model::A | Model::B | Model::C => {
            let w = draw_matrix(&mut rng, n_agents, n_tasks, 10, 25);
            let p = draw_matrix(&mut rng, n_agents, n_tasks, 5, 25);
            (w, p.into_iter().map(|r| r.into_iter().map(|x| x as f64).collect()).collect())
        }
        Model::D => {
            let w = draw_matrix(&mut rng, n_agents, n_tasks, 1, 100);
            let k = draw_matrix(&mut rng, n_agents, n_tasks, 1, 21);
            let p = w
                .iter()
                .zip(&k)
                .map(|(wr, kr)| wr.iter().zip(kr).map(|(&w, &k)| model_d_profit(w, k)).collect())
                .collect();
            (w, p)
        }
    };
    let capacities = match model {
        Model::A => model_a_capacities(&profits, &weights),
        Model::B => model_a_capacities(&profits, &weights)
            .into_iter()
            .map(model_b_capacity)
            .collect(),
        Model::C | Model::D => weights.iter().map(|row| model_c_capacity(row)).collect(),
    };
    GapInstance::new(profits, weights, capacities)
}

fn draw_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: u64, hi: u64) -> Vec<Vec<u64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(lo..=hi)).collect())
        .collect()
}

/// `g = 9 M/N + 0.4 max_l sum_{m in J*_l} w_lm`, where `J*_l` holds the tasks
/// whose lowest profit belongs to agent `l` (ties to the lowest index).
pub fn model_a_capacities(profits: &[Vec<f64>], weights: &[Vec<u64>]) -> Vec<f64> {
    let n = profits.len();
    let m = profits[0].len();
    let mut sums = vec![0u64; n];
    for task in 0..m {
        let argmin = (0..n)
            .min_by(|&a, &b| profits[a][task].total_cmp(&profits[b][task]).then(a.cmp(&b)))
            .expect("at least one agent");
        sums[argmin] += weights[argmin][task];
    }
    let max_sum = sums.into_iter().max().unwrap_or(0) as f64;
    let g = 9.0 * (m as f64 / n as f64) + 0.4 * max_sum;
    vec![g; n]
}

pub fn model_b_capacity(model_a_capacity: f64) -> f64 {
    0.7 * model_a_capacity
}

/// `g = sum_{m=1..M} w_m / m` with 1-based task index `m`.
pub fn model_c_capacity(weights: &[u64]) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(m, &w)| w as f64 / (m + 1) as f64)
        .sum()
}

pub fn model_d_profit(weight: u64, k: u64) -> f64 {
    (100 + k) as f64 - weight as f64
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

    /// All 2^(N*M) binary matrices, in test code only.
    fn brute_force_best(instance: &GapInstance) -> Option<f64> {
        let (n, m) = (instance.n_agents(), instance.n_tasks());
        let mut best: Option<f64> = None;
        for bits in 0u32..(1 << (n * m)) {
            let rows = (0..n)
                .map(|i| (0..m).map(|k| bits >> (i * m + k) & 1 == 1).collect())
                .collect();
            if let Evaluation::Feasible(c) = evaluate(instance, &Assignment::from_rows(rows)).unwrap() {
                best = Some(best.map_or(c, |b: f64| b.max(c)));
            }
        }
        best
    }

    #[test]
    fn evaluate_diagonal_is_optimal() {
        let inst = toy();
        let diag = Assignment::from_rows(vec![vec![true, false], vec![false, true]]);
        assert_eq!(evaluate(&inst, &diag).unwrap(), Evaluation::Feasible(20.0));
        assert_eq!(brute_force_best(&inst), Some(20.0));
    }

    #[test]
    fn evaluate_reports_unassigned_task() {
        let inst = toy();
        match evaluate(&inst, &Assignment::empty(2, 2)).unwrap() {
            Evaluation::Violated(v) => assert_eq!(v[0], Violation::TaskUnassigned { task: 0 }),
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn evaluate_reports_capacity() {
        let inst = toy();
        let x = Assignment::from_rows(vec![vec![true, true], vec![false, false]]);
        match evaluate(&inst, &x).unwrap() {
            Evaluation::Violated(v) => assert_eq!(
                v,
                vec![Violation::CapacityExceeded {
                    agent: 0,
                    load: 2,
                    capacity: 1.0
                }]
            ),
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn evaluate_rejects_dimension_mismatch() {
        assert!(matches!(
            evaluate(&toy(), &Assignment::empty(3, 2)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn instance_rejects_ragged_rows() {
        let r = GapInstance::new(vec![vec![1.0], vec![1.0, 2.0]], vec![vec![1], vec![1, 1]], vec![1.0, 1.0]);
        assert!(matches!(r, Err(Error::Dimension(_))));
    }

    #[test]
    fn capacity_formulas() {
        assert_eq!(model_b_capacity(50.0), 35.0);
        assert_eq!(model_d_profit(40, 5), 65.0);
        assert_eq!(model_c_capacity(&[10, 20]), 20.0);
    }

    #[test]
    fn model_a_argmin_ties_go_to_lowest_agent() {
        // Task 0 tie between agents 0 and 1 -> agent 0; task 1 -> agent 1.
        let p = vec![vec![5.0, 9.0], vec![5.0, 6.0]];
        let w = vec![vec![10, 11], vec![12, 13]];
        // N=2, M=2: 9 * 1 + 0.4 * max(10, 13)
        assert_eq!(model_a_capacities(&p, &w), vec![9.0 + 0.4 * 13.0; 2]);
    }

    #[test]
    fn oracle_examples() {
        let r = oracle_solve(&toy()).unwrap();
        assert_eq!(r.cost, Some(20.0));
        assert_eq!(
            r.assignment.unwrap(),
            Assignment::from_rows(vec![vec![true, false], vec![false, true]])
        );

        let inf = GapInstance::new(vec![vec![7.0]], vec![vec![3]], vec![2.0]).unwrap();
        assert_eq!(oracle_solve(&inf).unwrap().status, SolveStatus::Infeasible);

        let two = GapInstance::new(vec![vec![5.0], vec![9.0]], vec![vec![1], vec![1]], vec![1.0, 1.0]).unwrap();
        let r = oracle_solve(&two).unwrap();
        assert_eq!(r.cost, Some(9.0));
        assert_eq!(r.assignment.unwrap().owner_of(0), Some(1));
    }

    #[test]
    fn oracle_guard() {
        let inst = generate(Model::A, 5, 5, 0).unwrap();
        assert!(matches!(oracle_solve(&inst), Err(Error::OracleGuard { .. })));
    }

    #[test]
    fn oracle_matches_brute_force_on_small_instances() {
        for seed in 0..40 {
            for model in Model::ALL {
                let inst = generate(model, 2, 4, seed).unwrap();
                let r = oracle_solve(&inst).unwrap();
                assert_eq!(r.cost, brute_force_best(&inst), "{model} seed {seed}");
            }
        }
    }

    #[test]
    fn generator_ranges() {
        let a = generate(Model::A, 5, 20, 1).unwrap();
        for i in 0..5 {
            assert!(a.profits(i).iter().all(|&p| (5.0..=25.0).contains(&p) && p.fract() == 0.0));
            assert!(a.weights(i).iter().all(|&w| (10..=25).contains(&w)));
        }
        let d = generate(Model::D, 5, 20, 1).unwrap();
        for i in 0..5 {
            for (&p, &w) in d.profits(i).iter().zip(d.weights(i)) {
                assert!((1..=100).contains(&w));
                let k = p - 100.0 + w as f64;
                assert!((1.0..=21.0).contains(&k));
            }
            assert_eq!(d.capacity(i), model_c_capacity(d.weights(i)));
        }
    }

    #[test]
    fn text_format_parses_whitespace_variants() {
        let text = "2 2\n10 1\n1   10\n\n1 1\n1 1\n1 1\n";
        assert_eq!(GapInstance::from_text(text).unwrap(), toy());
        assert_eq!(GapInstance::from_text(&toy().to_text()).unwrap(), toy());
    }

    #[test]
    fn text_format_errors_name_the_line() {
        let err = GapInstance::from_text("2 2\n10 1\n1 x\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 3,
                msg: "cannot parse `x`".into()
            }
        );
        assert!(GapInstance::from_text("1 2\n1 2\n1 2\n3\n4\n").is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn generate_is_reproducible(seed in any::<u64>(), n in 1usize..6, m in 1usize..12) {
                for model in Model::ALL {
                    prop_assert_eq!(generate(model, n, m, seed).unwrap(), generate(model, n, m, seed).unwrap());
                }
            }

            #[test]
            fn model_b_scales_model_a(seed in any::<u64>(), n in 1usize..6, m in 1usize..12) {
                let a = generate(Model::A, n, m, seed).unwrap();
                let b = generate(Model::B, n, m, seed).unwrap();
                for i in 0..n {
                    prop_assert_eq!(a.profits(i), b.profits(i));
                    prop_assert_eq!(a.weights(i), b.weights(i));
                    prop_assert_eq!(b.capacity(i), 0.7 * a.capacity(i));
                }
            }

            #[test]
            fn text_round_trip(seed in any::<u64>(), n in 1usize..5, m in 1usize..8, model in 0usize..4) {
                let inst = generate(Model::ALL[model], n, m, seed).unwrap();
                prop_assert_eq!(GapInstance::from_text(&inst.to_text()).unwrap(), inst);
            }

            #[test]
            fn oracle_cost_is_recomputable(seed in any::<u64>(), n in 1usize..4, m in 1usize..7, model in 0usize..4) {
                let inst = generate(Model::ALL[model], n, m, seed).unwrap();
                let r = oracle_solve(&inst).unwrap();
                if let Some(x) = &r.assignment {
                    prop_assert_eq!(evaluate(&inst, x).unwrap().cost(), r.cost);
                }
            }
        }
    }
}
