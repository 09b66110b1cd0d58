//! Exact optima: an enumeration oracle and a branch-and-bound solver driven
//! by the LP relaxation.
//!
//! [`solve_brute_force`] exhaustively searches injective task-to-node maps
//! filtered by pairwise path independence and serves as the independent
//! correctness oracle; it never touches the LP machinery.
//! [`solve_ilp`] runs depth-first branch-and-bound: the relaxation bounds each
//! node, the heuristic seeds the incumbent, branching is on the most
//! fractional variable with the one-branch explored first.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::boa::{bottom_up_assignment, BoaError};
use crate::instance::{Assignment, Instance, InstanceError, TaskId};
use crate::lp::{build_lp_relaxation_banned, solve_lp, LpError};
use crate::tree::NodeId;

/// Variables within this distance of 0 or 1 count as integral.
pub const INT_TOL: f64 = 1e-6;
/// Absolute tolerance for objective comparisons.
pub const OBJ_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("enumeration budget of {budget} branches exceeded")]
    BudgetExceeded { budget: u64 },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("heuristic used for the incumbent failed: {0}")]
    Incumbent(#[from] BoaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactStatus {
    Optimal,
    Infeasible,
    /// Node or wall-clock limit hit; the result carries the best incumbent.
    NodeLimit,
}

#[derive(Debug, Clone)]
pub struct ExactResult {
    pub status: ExactStatus,
    pub assignment: Assignment,
    pub objective: f64,
    /// Explored branch-and-bound nodes (LP solves), or enumeration branches.
    pub explored_nodes: u64,
}

impl ExactResult {
    fn infeasible(explored_nodes: u64) -> Self {
        ExactResult {
            status: ExactStatus::Infeasible,
            assignment: Assignment::new(),
            objective: f64::NEG_INFINITY,
            explored_nodes,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BruteForceLimits {
    /// Maximum partial branches to extend before giving up.
    pub max_branches: u64,
}

impl Default for BruteForceLimits {
    fn default() -> Self {
        BruteForceLimits { max_branches: 10_000_000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IlpConfig {
    pub node_limit: u64,
    pub time_limit: Option<Duration>,
}

impl Default for IlpConfig {
    fn default() -> Self {
        IlpConfig { node_limit: 1_000_000, time_limit: Some(Duration::from_secs(60)) }
    }
}

/// Globally optimal assignment by exhaustive search, with a deterministic
/// tie-break: among equal-weight optima the lexicographically smallest tuple
/// `(node of task 1, node of task 2, ..)` wins, which the search order yields
/// for free.
pub fn solve_brute_force(instance: &Instance) -> Result<ExactResult, ExactError> {
    solve_brute_force_with(instance, &BruteForceLimits::default())
}

pub fn solve_brute_force_with(
    instance: &Instance,
    limits: &BruteForceLimits,
) -> Result<ExactResult, ExactError> {
    let tree = instance.tree();
    let m = instance.task_count();
    let nodes: Vec<NodeId> = tree.nodes().collect();

    struct Search<'a> {
        instance: &'a Instance,
        nodes: &'a [NodeId],
        m: usize,
        chosen: Vec<NodeId>,
        branches: u64,
        max_branches: u64,
        best: Option<(f64, Vec<NodeId>)>,
    }

    impl Search<'_> {
        fn go(&mut self, task: TaskId, weight: f64) -> Result<(), ExactError> {
            if task > self.m {
                if self.best.as_ref().is_none_or(|(bw, _)| weight > *bw) {
                    self.best = Some((weight, self.chosen.clone()));
                }
                return Ok(());
            }
            for idx in 0..self.nodes.len() {
                let node = self.nodes[idx];
                self.branches += 1;
                if self.branches > self.max_branches {
                    return Err(ExactError::BudgetExceeded { budget: self.max_branches });
                }
                let tree = self.instance.tree();
                let ok = self.chosen.iter().all(|&used| {
                    used != node && tree.paths_independent(used, node).expect("known ids")
                });
                if !ok {
                    continue;
                }
                self.chosen.push(node);
                self.go(task + 1, weight + self.instance.weight(node, task))?;
                self.chosen.pop();
            }
            Ok(())
        }
    }

    let mut search = Search {
        instance,
        nodes: &nodes,
        m,
        chosen: Vec::with_capacity(m),
        branches: 0,
        max_branches: limits.max_branches,
        best: None,
    };
    search.go(1, 0.0)?;

    let explored = search.branches;
    match search.best {
        None => Ok(ExactResult::infeasible(explored)),
        Some((objective, chosen)) => {
            let assignment = Assignment::from_pairs(chosen.into_iter().zip(1..=m));
            Ok(ExactResult {
                status: ExactStatus::Optimal,
                assignment,
                objective,
                explored_nodes: explored,
            })
        }
    }
}

/// Optimal 0-1 solution via branch-and-bound over the LP relaxation. Returns
/// the same objective as [`solve_brute_force`] whenever both complete.
pub fn solve_ilp(instance: &Instance) -> Result<ExactResult, ExactError> {
    solve_ilp_with(instance, &IlpConfig::default())
}

pub fn solve_ilp_with(instance: &Instance, config: &IlpConfig) -> Result<ExactResult, ExactError> {
    instance.require_zero_root_weights()?;
    if !instance.check_feasibility() {
        return Ok(ExactResult::infeasible(0));
    }
    let m = instance.task_count();

    if m == 1 {
        // Trivial single-task case, root included; smallest id on ties.
        let mut best_node = instance.tree().root();
        let mut best = instance.weight(best_node, 1);
        for node in instance.tree().nodes() {
            let w = instance.weight(node, 1);
            if w > best {
                best = w;
                best_node = node;
            }
        }
        return Ok(ExactResult {
            status: ExactStatus::Optimal,
            assignment: Assignment::from_pairs([(best_node, 1)]),
            objective: best,
            explored_nodes: 0,
        });
    }

    // The heuristic seeds the incumbent and anchors pruning.
    let seed = bottom_up_assignment(instance)?;
    let mut incumbent = seed.assignment;
    let mut incumbent_obj = seed.objective;

    struct Frame {
        fixed: Assignment,
        banned: BTreeSet<(NodeId, TaskId)>,
        parent_bound: f64,
    }

    let started = Instant::now();
    let mut explored: u64 = 0;
    let mut stack = vec![Frame {
        fixed: Assignment::new(),
        banned: BTreeSet::new(),
        parent_bound: f64::INFINITY,
    }];

    while let Some(frame) = stack.pop() {
        if explored >= config.node_limit
            || config.time_limit.is_some_and(|cap| started.elapsed() >= cap)
        {
            return Ok(ExactResult {
                status: ExactStatus::NodeLimit,
                assignment: incumbent,
                objective: incumbent_obj,
                explored_nodes: explored,
            });
        }
        explored += 1;

        let model = build_lp_relaxation_banned(instance, &frame.fixed, &frame.banned)?;
        let relaxed = solve_lp(&model)?;
        if !relaxed.is_optimal() {
            continue;
        }
        let bound = relaxed.objective;
        debug_assert!(
            bound <= frame.parent_bound + OBJ_TOL,
            "child bound {bound} above parent bound {}",
            frame.parent_bound
        );
        if bound <= incumbent_obj + INT_TOL {
            continue;
        }

        // Most fractional surviving column; ties by (node, task).
        let mut branch: Option<((NodeId, TaskId), f64)> = None;
        for &(node, task) in model.columns() {
            let x = relaxed.value(node, task);
            if x > INT_TOL && x < 1.0 - INT_TOL {
                let score = (x - 0.5).abs();
                if branch.is_none_or(|(_, s)| score < s) {
                    branch = Some(((node, task), score));
                }
            }
        }

        match branch {
            None => {
                // Integral relaxation: a complete candidate assignment.
                let mut candidate = frame.fixed.clone();
                for &(node, task) in model.columns() {
                    if relaxed.value(node, task) > 1.0 - INT_TOL {
                        candidate.insert(node, task);
                    }
                }
                let objective = instance.assignment_weight(&candidate)?;
                debug_assert!(
                    instance.validate_assignment(&candidate).ok(),
                    "integral relaxation decoded to an invalid assignment"
                );
                if objective > incumbent_obj {
                    incumbent_obj = objective;
                    incumbent = candidate;
                }
            }
            Some(((node, task), _)) => {
                let mut banned = frame.banned.clone();
                banned.insert((node, task));
                stack.push(Frame { fixed: frame.fixed.clone(), banned, parent_bound: bound });

                let mut fixed = frame.fixed;
                fixed.insert(node, task);
                stack.push(Frame { fixed, banned: frame.banned, parent_bound: bound });
            }
        }
    }

    Ok(ExactResult {
        status: ExactStatus::Optimal,
        assignment: incumbent,
        objective: incumbent_obj,
        explored_nodes: explored,
    })
}
