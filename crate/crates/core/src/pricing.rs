//! Column generation for one agent: the 0/1 knapsack
//! `max (c_i - pi)^T z  s.t.  D_i z <= g_i, z in {0,1}^M`, with branching
//! fixings applied.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::Column;
use crate::model::AgentData;

const EPS_TIE: f64 = 1e-9;

/// Branching fixings `z_k = value` for one agent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FixingSet(BTreeMap<usize, bool>);

impl FixingSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `z_task = value`. Re-adding the same fixing is a no-op; a
    /// contradicting one is an error.
    pub fn fix(&mut self, task: usize, value: bool) -> Result<()> {
        match self.0.insert(task, value) {
            Some(prev) if prev != value => {
                self.0.insert(task, prev);
                Err(Error::Invalid(format!("task {task} already fixed to {}", prev as u8)))
            }
            _ => Ok(()),
        }
    }

    pub fn get(&self, task: usize) -> Option<bool> {
        self.0.get(&task).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    /// Whether a vertex respects every fixing.
    pub fn admits(&self, vertex: &[bool]) -> bool {
        self.0.iter().all(|(&k, &v)| vertex.get(k) == Some(&v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricedVertex {
    pub vertex: Vec<bool>,
    /// `(c_i - pi)^T v`.
    pub pricing_value: f64,
    /// `pricing_value - mu_i`.
    pub reduced_cost: f64,
}

impl PricedVertex {
    pub fn to_column(&self, owner: usize, profits: &[f64]) -> Column {
        Column::vertex(owner, self.vertex.clone(), profits)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PricingOutcome {
    Vertex(PricedVertex),
    /// The fixings alone overflow the capacity.
    NodeInfeasible,
}

/// Exact knapsack pricing by dynamic programming over integer capacity
/// `floor(g_i)`. Among optimal vertexes the lexicographically smallest
/// bitstring wins.
pub fn solve_pricing(agent: AgentData<'_>, pi: &[f64], mu: f64, fixings: &FixingSet) -> Result<PricingOutcome> {
    let m = agent.profits.len();
    if agent.weights.len() != m || pi.len() != m {
        return Err(Error::Dimension(format!(
            "pricing with {m} profits, {} weights and {} duals",
            agent.weights.len(),
            pi.len()
        )));
    }
    if fixings.iter().any(|(k, _)| k >= m) {
        return Err(Error::Dimension("fixing refers to a task outside the instance".into()));
    }
    let value: Vec<f64> = agent.profits.iter().zip(pi).map(|(c, p)| c - p).collect();

    let fixed_load: u64 = fixings.iter().filter(|&(_, v)| v).map(|(k, _)| agent.weights[k]).sum();
    let cap = agent.capacity.floor();
    if cap < 0.0 || fixed_load as f64 > cap {
        return Ok(PricingOutcome::NodeInfeasible);
    }
    let free: Vec<usize> = (0..m).filter(|&k| fixings.get(k).is_none()).collect();
    let free_load: u64 = free.iter().map(|&k| agent.weights[k]).sum();
    // Capacity beyond what the free items can use changes nothing.
    let room = ((cap as u64) - fixed_load).min(free_load) as usize;

    // best[k][c]: optimum over free items k.. with capacity c.
    let mut best = vec![vec![0.0f64; room + 1]; free.len() + 1];
    for k in (0..free.len()).rev() {
        let task = free[k];
        let w = agent.weights[task] as usize;
        for c in 0..=room {
            let skip = best[k + 1][c];
            best[k][c] = if w <= c {
                skip.max(value[task] + best[k + 1][c - w])
            } else {
                skip
            };
        }
    }

    let mut vertex = vec![false; m];
    for (k, v) in fixings.iter() {
        vertex[k] = v;
    }
    let mut c = room;
    for (k, &task) in free.iter().enumerate() {
        let w = agent.weights[task] as usize;
        if w <= c && value[task] + best[k + 1][c - w] > best[k + 1][c] + EPS_TIE {
            vertex[task] = true;
            c -= w;
        }
    }
    let pricing_value = vertex.iter().zip(&value).filter(|(&x, _)| x).map(|(_, v)| v).sum::<f64>();
    Ok(PricingOutcome::Vertex(PricedVertex {
        vertex,
        pricing_value,
        reduced_cost: pricing_value - mu,
    }))
}
