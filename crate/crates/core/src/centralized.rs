//! Single-process exact branch-and-price, used as the reference optimum for
//! instances too large for enumeration.
//!
//! Same master problem, pricing and branching rule as the agents, but with a
//! shared column pool, every agent priced each iteration and best-bound
//! pruning.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::lp::{self, Column, ColumnId, LpShape};
use crate::model::{evaluate, Assignment, GapInstance, SolveReport, SolveStatus};
use crate::pricing::{solve_pricing, PricingOutcome};
use crate::tree::{self, Tree};

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub report: SolveReport,
    pub nodes_solved: u64,
    pub columns_generated: usize,
}

pub fn solve_centralized(instance: &GapInstance) -> Result<ReferenceSolution> {
    let (n, m) = (instance.n_agents(), instance.n_tasks());
    let shape = LpShape::for_instance(instance);
    let mut pool: BTreeMap<ColumnId, Column> = BTreeMap::new();
    let mut tree = Tree::with_root();
    let mut best: Option<(f64, Assignment)> = None;
    let mut nodes = 0;

    while let Some(node) = tree.extract() {
        nodes += 1;
        let fixings = node.all_fixings(n);
        let mut infeasible = false;
        let solution = loop {
            let admitted = pool.values().filter(|c| {
                let owner = c.owner().expect("pool holds real columns");
                fixings[owner].admits(c.vertex_bits().unwrap_or_default())
            });
            let sol = lp::solve_rmp(admitted, &shape)?;
            let mut added = false;
            for (i, fixing) in fixings.iter().enumerate() {
                match solve_pricing(instance.agent_data(i), &sol.pi, sol.mu[i], fixing)? {
                    PricingOutcome::Vertex(v) if v.reduced_cost > lp::EPS_RC => {
                        let c = v.to_column(i, instance.profits(i));
                        added |= pool.insert(c.id().clone(), c).is_none();
                    }
                    PricingOutcome::Vertex(_) => {}
                    PricingOutcome::NodeInfeasible => infeasible = true,
                }
            }
            if infeasible || !added {
                break sol;
            }
        };
        if infeasible {
            continue;
        }
        let e = lp::extract_solution(&solution, n, m);
        if e.contains_artificial {
            continue;
        }
        // The LP value bounds every completion of this node.
        if best.as_ref().is_some_and(|(inc, _)| e.cost <= *inc + lp::EPS_FEAS) {
            continue;
        }
        if tree::first_fractional(&e.z).is_none() {
            best = Some((e.cost, tree::round_assignment(&e.z)));
        } else {
            tree.branch(&e.z, &node)?;
        }
    }

    let report = match best {
        Some((_, assignment)) => SolveReport {
            status: SolveStatus::Optimal,
            cost: evaluate(instance, &assignment)?.cost(),
            assignment: Some(assignment),
        },
        None => SolveReport {
            status: SolveStatus::Infeasible,
            cost: None,
            assignment: None,
        },
    };
    Ok(ReferenceSolution {
        report,
        nodes_solved: nodes,
        columns_generated: pool.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate, oracle_solve, Model};

    #[test]
    fn matches_enumeration_on_small_instances() {
        for model in [Model::A, Model::B, Model::C, Model::D] {
            for seed in 0..10 {
                let inst = generate(model, 3, 6, seed).unwrap();
                let r = solve_centralized(&inst).unwrap();
                assert_eq!(r.report.cost, oracle_solve(&inst).unwrap().cost, "{model} seed {seed}");
            }
        }
    }

    #[test]
    fn infeasible_instance() {
        let inst = GapInstance::new(vec![vec![1.0, 1.0]], vec![vec![3, 3]], vec![4.0]).unwrap();
        assert_eq!(solve_centralized(&inst).unwrap().report.status, SolveStatus::Infeasible);
    }
}
