//! Depth-first branching tree over master problems that differ by variable
//! fixings `z_{i,k} in {0,1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pricing::FixingSet;

/// Integrality tolerance.
pub const EPS_INT: f64 = 1e-6;

/// One branching decision `z_{agent,task} = value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Branching {
    pub agent: usize,
    pub task: usize,
    pub value: bool,
}

/// A master problem, identified by the decisions on the path from the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BranchNode {
    pub decisions: Vec<Branching>,
    pub depth: usize,
    pub creation_order: u64,
}

impl BranchNode {
    pub fn root() -> Self {
        Self {
            decisions: Vec::new(),
            depth: 0,
            creation_order: 0,
        }
    }

    /// Fixings of one agent. A task fixed to 1 for some other agent is
    /// fixed to 0 here, since every task has exactly one owner.
    pub fn fixings_for(&self, agent: usize) -> FixingSet {
        let mut set = FixingSet::new();
        for d in &self.decisions {
            let value = if d.agent == agent {
                d.value
            } else if d.value {
                false
            } else {
                continue;
            };
            // Decisions along one path never contradict: a variable is only
            // branched on while fractional, and fixed variables are integral.
            let _ = set.fix(d.task, value);
        }
        set
    }

    pub fn all_fixings(&self, n_agents: usize) -> Vec<FixingSet> {
        (0..n_agents).map(|i| self.fixings_for(i)).collect()
    }
}

/// What to do with a solved node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    UpdateIncumbent,
    Branch,
    Prune,
}

/// Incumbent update on integral `z` with `J >= J_inc`, branching on
/// fractional `z` with `J >= J_inc`, pruning when `J < J_inc` or the node is
/// infeasible.
pub fn consider(node_cost: Option<f64>, z: &[Vec<f64>], incumbent: Option<f64>) -> Action {
    let Some(cost) = node_cost else {
        return Action::Prune;
    };
    if incumbent.is_some_and(|inc| cost < inc) {
        return Action::Prune;
    }
    if first_fractional(z).is_none() {
        Action::UpdateIncumbent
    } else {
        Action::Branch
    }
}

/// First entry with `|z - round(z)| > EPS_INT`, scanning agents then tasks.
pub fn first_fractional(z: &[Vec<f64>]) -> Option<(usize, usize)> {
    z.iter().enumerate().find_map(|(i, row)| {
        row.iter()
            .position(|&v| (v - v.round()).abs() > EPS_INT)
            .map(|m| (i, m))
    })
}

pub fn round_assignment(z: &[Vec<f64>]) -> crate::model::Assignment {
    crate::model::Assignment::from_rows(z.iter().map(|row| row.iter().map(|&v| v > 0.5).collect()).collect())
}

/// LIFO stack of unsolved problems.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tree {
    stack: Vec<BranchNode>,
    next_label: u64,
    created: u64,
    high_water: usize,
}

impl Default for Tree {
    fn default() -> Self {
        Self::with_root()
    }
}

impl Tree {
    pub fn with_root() -> Self {
        Self {
            stack: vec![BranchNode::root()],
            next_label: 0,
            created: 1,
            high_water: 1,
        }
    }

    pub fn empty() -> Self {
        Self {
            stack: Vec::new(),
            next_label: 0,
            created: 0,
            high_water: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.stack.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stack.is_empty()
    }

    /// Label the next extracted node will receive.
    pub fn next_label(&self) -> u64 {
        self.next_label
    }

    /// Total nodes ever created, root included.
    pub fn created(&self) -> u64 {
        self.created
    }

    /// High-water mark of the stack size.
    pub fn max_stored(&self) -> usize {
        self.high_water
    }

    pub fn top(&self) -> Option<&BranchNode> {
        self.stack.last()
    }

    /// Branches `parent` on the first fractional entry of `z`. The `z = 1`
    /// child is pushed first and the `z = 0` child last, so the latter is
    /// extracted next.
    pub fn branch(&mut self, z: &[Vec<f64>], parent: &BranchNode) -> Result<Branching> {
        let (agent, task) = first_fractional(z).ok_or(Error::IntegralBranch)?;
        for value in [true, false] {
            let mut decisions = parent.decisions.clone();
            decisions.push(Branching { agent, task, value });
            self.stack.push(BranchNode {
                decisions,
                depth: parent.depth + 1,
                creation_order: self.created,
            });
            self.created += 1;
        }
        self.high_water = self.high_water.max(self.stack.len());
        Ok(Branching {
            agent,
            task,
            value: false,
        })
    }

    /// Pops the next problem; `None` means the search is over.
    pub fn extract(&mut self) -> Option<BranchNode> {
        let node = self.stack.pop()?;
        self.next_label += 1;
        Some(node)
    }
}
