//! Distributed branch-and-price for the generalized assignment problem.
//!
//! Agents own one capacity constraint each and cooperate over a
//! time-varying network: they generate columns for a shared master problem,
//! agree on its unique optimal basis and walk the same branching tree in
//! lockstep. A cloud-assisted variant moves the tree to a central node.

pub mod agent;
pub mod campaign;
pub mod centralized;
pub mod error;
pub mod lp;
pub mod model;
pub mod network;
pub mod pricing;
pub mod scenario;
pub mod tree;

pub use agent::{AgentContext, AgentState, Message, Mode, Variant};
pub use campaign::{run_campaign, CampaignConfig, CampaignRow, CampaignSummary};
pub use centralized::{solve_centralized, ReferenceSolution};
pub use error::{Error, Result};
pub use lp::{Basis, Column, ColumnId, LpShape, LpSolution};
pub use model::{evaluate, generate, oracle_solve, Assignment, Evaluation, GapInstance, Model, SolveReport, SolveStatus};
pub use network::{check_schedule, run_cloud_assisted, run_distributed, GraphKind, NetworkSchedule, RunConfig, RunMetrics};
pub use pricing::{solve_pricing, FixingSet, PricingOutcome};
pub use scenario::{simulate, ScenarioConfig, ScenarioLog};
pub use tree::{BranchNode, Tree};
