//! Per-agent round logic of the distributed branch-and-price scheme.
//!
//! Each round an agent either runs one column-generation step on the master
//! problem it is currently solving (merging the bases received from
//! in-neighbors that solve the same problem), or moves on to the next
//! problem of the branching tree. Moving on happens when its own basis has
//! been stable for `2NL + 1` rounds or when a neighbor already carries a
//! higher label.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, Column, LpShape, LpSolution};
use crate::model::{AgentData, Assignment};
use crate::pricing::{self, FixingSet, PricingOutcome};
use crate::tree::{self, Action, BranchNode, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Explore the tree until it is empty.
    Exact,
    /// Stop at the first incumbent update.
    FirstIncumbent,
}

/// Where the branching tree lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Distributed,
    Cloud,
}

/// Parameters every agent knows: problem shape, network size and
/// connectivity period `L`.
#[derive(Debug, Clone, Copy)]
pub struct AgentContext {
    pub shape: LpShape,
    pub period: usize,
    pub mode: Mode,
    pub variant: Variant,
}

impl AgentContext {
    /// `2 N L + 1`.
    pub fn convergence_threshold(&self) -> usize {
        convergence_threshold(self.shape.n_agents, self.period)
    }
}

pub fn convergence_threshold(n_agents: usize, period: usize) -> usize {
    2 * n_agents * period + 1
}

/// What an agent sends to its out-neighbors: the non-artificial columns of
/// its basis and its label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub sender: usize,
    pub label: u64,
    pub columns: Vec<Column>,
}

impl Message {
    /// `sender label` followed by one `owner|cost|bits|0` token per column.
    pub fn encode(&self) -> String {
        let mut out = format!("{} {}", self.sender, self.label);
        for c in &self.columns {
            let bits: String = c
                .vertex_bits()
                .unwrap_or_default()
                .iter()
                .map(|&b| if b { '1' } else { '0' })
                .collect();
            out.push_str(&format!(" {}|{}|{}|0", c.owner().unwrap_or_default(), c.cost(), bits));
        }
        out
    }

    pub fn decode(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse {
            line: 1,
            msg: msg.to_string(),
        };
        let mut toks = text.split_whitespace();
        let sender = toks.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("missing sender"))?;
        let label = toks.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("missing label"))?;
        let columns = toks
            .map(|tok| {
                let parts: Vec<&str> = tok.split('|').collect();
                if parts.len() != 4 || parts[3] != "0" {
                    return Err(bad("column must be owner|cost|bits|0"));
                }
                let owner = parts[0].parse().map_err(|_| bad("bad owner"))?;
                let cost = parts[1].parse().map_err(|_| bad("bad cost"))?;
                let vertex = parts[2]
                    .chars()
                    .map(|ch| match ch {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(bad("bad vertex bit")),
                    })
                    .collect::<Result<Vec<bool>>>()?;
                Ok(Column::with_cost(owner, vertex, cost))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sender, label, columns })
    }
}

/// Notable things that happened during one round.
#[derive(Debug, Clone, PartialEq)]
pub enum StepEvent {
    /// A column-generation step; `changed` tells whether the basis moved.
    ColumnGeneration { changed: bool },
    /// The agent moved to the next problem after handling the one it solved.
    NodeDone {
        action: Action,
        solved_label: u64,
        basis_fingerprint: u64,
        halted: bool,
    },
    /// Cloud variant: convergence detected, basis uploaded.
    Upload,
}

#[derive(Debug, Clone)]
pub struct StepReport {
    pub message: Message,
    pub events: Vec<StepEvent>,
    /// Cloud variant: the converged solution handed to the cloud.
    pub upload: Option<LpSolution>,
}

/// Instruction from the cloud node.
#[derive(Debug, Clone, PartialEq)]
pub enum Broadcast {
    /// Start solving the problem with this label under these fixings.
    Solve { label: u64, fixings: FixingSet },
    Halt {
        incumbent_cost: Option<f64>,
        incumbent_z: Option<Assignment>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: usize,
    /// Current basis with its values and duals.
    pub solution: LpSolution,
    pub label: u64,
    pub incumbent_cost: Option<f64>,
    pub incumbent_z: Option<Assignment>,
    pub node: BranchNode,
    pub fixings: FixingSet,
    /// Local tree; `None` in the cloud variant.
    pub tree: Option<Tree>,
    pub unchanged_rounds: usize,
    pub halted: bool,
    /// Cloud variant: basis already uploaded for the current label.
    pub uploaded: bool,
}

impl AgentState {
    /// Fresh agent solving the root problem from the Big-M basis.
    pub fn new(id: usize, ctx: &AgentContext) -> Self {
        let (node, tree) = match ctx.variant {
            Variant::Distributed => {
                let mut tree = Tree::with_root();
                let root = tree.extract().expect("fresh tree holds the root");
                (root, Some(tree))
            }
            Variant::Cloud => (BranchNode::root(), None),
        };
        Self {
            id,
            solution: LpSolution::big_m(&ctx.shape),
            label: 0,
            incumbent_cost: None,
            incumbent_z: None,
            node,
            fixings: FixingSet::new(),
            tree,
            unchanged_rounds: 0,
            halted: false,
            uploaded: false,
        }
    }

    pub fn detect_convergence(&self, ctx: &AgentContext) -> bool {
        self.unchanged_rounds >= ctx.convergence_threshold()
    }

    pub fn stored_nodes(&self) -> usize {
        self.tree.as_ref().map_or(0, Tree::max_stored)
    }

    pub fn outbound(&self) -> Message {
        Message {
            sender: self.id,
            label: self.label,
            columns: self.solution.basis.real_columns().cloned().collect(),
        }
    }

    /// One communication round.
    pub fn step(&mut self, inbox: &[Message], data: AgentData<'_>, ctx: &AgentContext) -> Result<StepReport> {
        debug_assert!(!self.halted, "halted agents are not stepped");
        let mut events = Vec::new();
        let mut upload = None;
        let ahead = inbox.iter().any(|m| m.label > self.label);

        if ahead && ctx.variant == Variant::Distributed {
            events.push(self.advance(ctx)?);
        } else {
            let changed = self.column_generation(inbox, data, ctx)?;
            events.push(StepEvent::ColumnGeneration { changed });
            if self.detect_convergence(ctx) {
                match ctx.variant {
                    Variant::Distributed => events.push(self.advance(ctx)?),
                    Variant::Cloud if !self.uploaded => {
                        self.uploaded = true;
                        upload = Some(self.solution.clone());
                        events.push(StepEvent::Upload);
                    }
                    Variant::Cloud => {}
                }
            }
        }
        Ok(StepReport {
            message: self.outbound(),
            events,
            upload,
        })
    }

    /// Merge neighbor bases of the same label, re-solve, price, pivot.
    fn column_generation(&mut self, inbox: &[Message], data: AgentData<'_>, ctx: &AgentContext) -> Result<bool> {
        let shape = &ctx.shape;
        let received = inbox
            .iter()
            .filter(|m| m.label == self.label && m.sender != self.id)
            .flat_map(|m| m.columns.iter());
        let merged = lp::solve_rmp(self.solution.basis.columns().iter().chain(received), shape)?;

        let next = match pricing::solve_pricing(data, &merged.pi, merged.mu[self.id], &self.fixings)? {
            PricingOutcome::Vertex(v) if v.reduced_cost > lp::EPS_RC => {
                let column = v.to_column(self.id, data.profits);
                lp::pivot(&merged, &column, v.reduced_cost, shape)?
            }
            _ => merged,
        };

        let changed = !next.basis.ids().eq(self.solution.basis.ids());
        self.solution = next;
        if changed {
            self.unchanged_rounds = 0;
        } else {
            self.unchanged_rounds += 1;
        }
        Ok(changed)
    }

    /// Label advance: judge the solved node, grow or prune the local tree,
    /// and load the next problem.
    fn advance(&mut self, ctx: &AgentContext) -> Result<StepEvent> {
        let solved_label = self.label;
        self.label += 1;
        let basis_fingerprint = self.solution.basis.fingerprint();
        let (n, m) = (ctx.shape.n_agents, ctx.shape.n_tasks);
        let extracted = lp::extract_solution(&self.solution, n, m);
        let node_cost = (!extracted.contains_artificial).then_some(extracted.cost);
        let action = tree::consider(node_cost, &extracted.z, self.incumbent_cost);

        let tree = self.tree.as_mut().expect("distributed agents own a tree");
        let mut halted = false;
        match action {
            Action::UpdateIncumbent => {
                self.incumbent_cost = node_cost;
                self.incumbent_z = Some(tree::round_assignment(&extracted.z));
                halted = ctx.mode == Mode::FirstIncumbent;
            }
            Action::Branch => {
                tree.branch(&extracted.z, &self.node)?;
            }
            Action::Prune => {}
        }
        if !halted {
            match tree.extract() {
                Some(next) => {
                    let fixings = next.fixings_for(self.id);
                    self.node = next;
                    self.enter_node(fixings, ctx)?;
                }
                None => halted = true,
            }
        }
        self.halted = halted;
        Ok(StepEvent::NodeDone {
            action,
            solved_label,
            basis_fingerprint,
            halted,
        })
    }

    /// Restart column generation under new fixings, keeping own columns that
    /// still satisfy them.
    fn enter_node(&mut self, fixings: FixingSet, ctx: &AgentContext) -> Result<()> {
        let kept: Vec<Column> = self
            .solution
            .basis
            .real_columns()
            .filter(|c| c.owner() == Some(self.id) && fixings.admits(c.vertex_bits().unwrap_or_default()))
            .cloned()
            .collect();
        self.fixings = fixings;
        self.solution = lp::solve_rmp(&kept, &ctx.shape)?;
        self.unchanged_rounds = 0;
        self.uploaded = false;
        Ok(())
    }

    /// Cloud variant: act on an instruction from the cloud.
    pub fn apply_broadcast(&mut self, broadcast: &Broadcast, ctx: &AgentContext) -> Result<()> {
        match broadcast {
            Broadcast::Solve { label, fixings } => {
                self.label = *label;
                self.enter_node(fixings.clone(), ctx)
            }
            Broadcast::Halt {
                incumbent_cost,
                incumbent_z,
            } => {
                self.incumbent_cost = *incumbent_cost;
                self.incumbent_z = incumbent_z.clone();
                self.halted = true;
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GapInstance;

    fn ctx(instance: &GapInstance, mode: Mode) -> AgentContext {
        AgentContext {
            shape: LpShape::for_instance(instance),
            period: 1,
            mode,
            variant: Variant::Distributed,
        }
    }

    #[test]
    fn convergence_threshold_values() {
        assert_eq!(convergence_threshold(2, 1), 5);
        assert_eq!(convergence_threshold(5, 1), 11);
        let inst = GapInstance::new(vec![vec![1.0]; 2], vec![vec![1]; 2], vec![1.0; 2]).unwrap();
        let c = ctx(&inst, Mode::Exact);
        let mut a = AgentState::new(0, &c);
        a.unchanged_rounds = 5;
        assert!(a.detect_convergence(&c));
        a.unchanged_rounds = 4;
        assert!(!a.detect_convergence(&c));
    }

    #[test]
    fn single_agent_single_task() {
        let inst = GapInstance::new(vec![vec![7.0]], vec![vec![1]], vec![1.0]).unwrap();
        let c = ctx(&inst, Mode::Exact);
        let mut a = AgentState::new(0, &c);
        let mut rounds = 0;
        while !a.halted {
            a.step(&[], inst.agent_data(0), &c).unwrap();
            rounds += 1;
            assert!(rounds < 100);
        }
        assert_eq!(a.incumbent_cost, Some(7.0));
        assert_eq!(a.incumbent_z, Some(Assignment::from_rows(vec![vec![true]])));
        assert_eq!(a.label, 1);
    }

    #[test]
    fn higher_neighbor_label_advances_by_one() {
        let inst = GapInstance::new(vec![vec![3.0, 1.0]; 2], vec![vec![1, 1]; 2], vec![2.0; 2]).unwrap();
        let c = ctx(&inst, Mode::Exact);
        let mut a = AgentState::new(0, &c);
        let msg = Message {
            sender: 1,
            label: 4,
            columns: vec![],
        };
        let r = a.step(&[msg], inst.agent_data(0), &c).unwrap();
        assert_eq!(a.label, 1);
        assert_eq!(r.message.label, 1);
    }

    #[test]
    fn stale_messages_are_ignored() {
        let inst = GapInstance::new(vec![vec![3.0, 1.0]; 2], vec![vec![1, 1]; 2], vec![2.0; 2]).unwrap();
        let c = ctx(&inst, Mode::Exact);
        let mut a = AgentState::new(0, &c);
        a.label = 3;
        let stale = Message {
            sender: 1,
            label: 2,
            columns: vec![Column::vertex(1, vec![true, true], inst.profits(1))],
        };
        a.step(&[stale], inst.agent_data(0), &c).unwrap();
        assert!(a.solution.basis.real_columns().all(|c| c.owner() == Some(0)));
    }

    #[test]
    fn message_wire_round_trip() {
        let m = Message {
            sender: 2,
            label: 7,
            columns: vec![
                Column::with_cost(0, vec![true, false, true], 12.5),
                Column::with_cost(2, vec![false, false, false], 0.0),
            ],
        };
        assert_eq!(m.encode(), "2 7 0|12.5|101|0 2|0|000|0");
        assert_eq!(Message::decode(&m.encode()).unwrap(), m);
        assert!(Message::decode("1 2 0|1|1x|0").is_err());
    }

    #[test]
    fn messages_never_carry_artificials() {
        let inst = GapInstance::new(vec![vec![3.0, 1.0]; 2], vec![vec![1, 1]; 2], vec![2.0; 2]).unwrap();
        let c = ctx(&inst, Mode::Exact);
        let mut a = AgentState::new(0, &c);
        let r = a.step(&[], inst.agent_data(0), &c).unwrap();
        assert!(r.message.columns.iter().all(|c| !c.is_artificial()));
        assert!(r.message.columns.len() <= c.shape.rows());
    }
}
