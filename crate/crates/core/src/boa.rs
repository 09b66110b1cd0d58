//! Bottom-up assignment heuristic: iterative LP relaxation with leaf-first
//! rounding.
//!
//! Each iteration solves the relaxation of the residual problem, then walks
//! the leaves of the pruned tree in non-increasing order of their fractional
//! values, committing one `(leaf, task)` pair at a time. When no usable leaf
//! value remains, the surviving leaves are deleted to give their ancestors a
//! chance; the feasibility invariant (assignable leaves >= open tasks) decides
//! whether the stale fractional values may keep driving picks or a fresh LP
//! call is due, in which case the speculative deletions are rolled back by
//! rebuilding the pruned tree from the original.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::Serialize;
use thiserror::Error;

use crate::instance::{Assignment, Instance, InstanceError, TaskId};
use crate::lp::{build_lp_relaxation, solve_lp, LpError, LpSolution};
use crate::tree::{NodeId, TreeError, TreeTopology, ROOT};

/// Fractional values at or below this count as zero assignments.
pub const EPS_ZERO: f64 = 1e-9;

/// Solver dust below [`EPS_ZERO`] must not decide pick order, so values are
/// compared on a fixed grid; genuinely equal values then fall through to the
/// node-id and task-id tie-breaks.
fn quantize(x: f64) -> i64 {
    (x / EPS_ZERO).round() as i64
}

#[derive(Debug, Error)]
pub enum BoaError {
    #[error("no feasible assignment: {leaves} leaves for {tasks} tasks")]
    Infeasible { leaves: usize, tasks: usize },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("feasibility invariant broken: {0}")]
    InvariantViolated(String),
}

/// One committed pick. `pass` counts the while-loop passes within the
/// iteration; values are non-increasing within a pass, but a later pass may
/// promote an ancestor carrying a larger stale value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LeafPick {
    pub node: NodeId,
    pub task: TaskId,
    pub x: f64,
    pub pass: usize,
}

/// Snapshot of one iteration, i.e. the work between successive LP calls.
#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace {
    pub fixed_before: Assignment,
    pub tasks_left: BTreeSet<TaskId>,
    pub nodes_left: BTreeSet<NodeId>,
    pub lp_objective: f64,
    pub leaf_picks: Vec<LeafPick>,
}

#[derive(Debug, Clone)]
pub struct BoaResult {
    pub assignment: Assignment,
    pub objective: f64,
    pub lp_calls: u32,
    pub iterations: Vec<IterationTrace>,
}

/// Nodes in `eligible` carrying a fractional value above [`EPS_ZERO`] for
/// some open task, with no descendant carrying one.
pub fn effective_leaves(
    tree: &TreeTopology,
    solution: &LpSolution,
    eligible: &BTreeSet<NodeId>,
    open_tasks: &BTreeSet<TaskId>,
) -> BTreeSet<NodeId> {
    let has_mass =
        |node: NodeId| open_tasks.iter().any(|&t| solution.value(node, t) > EPS_ZERO);
    // Bottom-up: a subtree carries value iff its root or any child subtree does.
    let mut order: Vec<NodeId> = tree.nodes().collect();
    order.sort_by_key(|&v| std::cmp::Reverse(tree.depth(v)));
    let mut subtree_mass: BTreeMap<NodeId, bool> = BTreeMap::new();
    for &v in &order {
        let below = tree.children(v).iter().any(|c| subtree_mass[c]);
        subtree_mass.insert(v, below || has_mass(v));
    }
    tree.nodes()
        .filter(|&v| {
            eligible.contains(&v)
                && has_mass(v)
                && !tree.children(v).iter().any(|c| subtree_mass[c])
        })
        .collect()
}

/// Max-heap entry: larger quantized value first, then smaller node id.
#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    quantized: i64,
    node: NodeId,
    x: f64,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        (self.quantized, self.node) == (other.quantized, other.node)
    }
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.quantized.cmp(&other.quantized).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Runs the heuristic. Requires a feasible instance and, for more than one
/// task, zero root weights. The result covers every task; its objective never
/// exceeds the exact optimum. Deterministic for a given instance: equal
/// fractional values are broken by smaller node id, then smaller task id.
pub fn bottom_up_assignment(instance: &Instance) -> Result<BoaResult, BoaError> {
    let tree = instance.tree();
    let m = instance.task_count();

    if m == 1 {
        // Single task: the best node wins outright, root included.
        let mut best_node = ROOT;
        let mut best = instance.weight(ROOT, 1);
        for node in tree.nodes() {
            let w = instance.weight(node, 1);
            if w > best {
                best = w;
                best_node = node;
            }
        }
        let assignment = Assignment::from_pairs([(best_node, 1)]);
        return Ok(BoaResult { assignment, objective: best, lp_calls: 0, iterations: Vec::new() });
    }

    instance.require_zero_root_weights()?;
    let leaves = tree.leaves().len();
    if leaves < m {
        return Err(BoaError::Infeasible { leaves, tasks: m });
    }

    let mut alpha = Assignment::new();
    let mut tasks_left: BTreeSet<TaskId> = instance.tasks().collect();
    let mut nodes_left: BTreeSet<NodeId> = tree.nodes().collect();
    let mut iterations: Vec<IterationTrace> = Vec::new();
    let mut lp_calls: u32 = 0;

    'iteration: loop {
        // Every call commits at least one pick, so more than m calls means
        // the invariant machinery is broken; fail loudly rather than loop.
        if lp_calls as usize >= m {
            return Err(BoaError::InvariantViolated(format!(
                "about to issue LP call {} for {m} tasks",
                lp_calls + 1
            )));
        }
        lp_calls += 1;
        let model = build_lp_relaxation(instance, &alpha)?;
        let solution = solve_lp(&model)?;
        if !solution.is_optimal() {
            return Err(BoaError::InvariantViolated(
                "relaxation of the residual problem is infeasible".into(),
            ));
        }
        let mut trace = IterationTrace {
            fixed_before: alpha.clone(),
            tasks_left: tasks_left.clone(),
            nodes_left: nodes_left.clone(),
            lp_objective: solution.objective,
            leaf_picks: Vec::new(),
        };

        // Pruned working tree, rebuilt from the original each iteration; this
        // rolls back the previous iteration's speculative leaf deletions.
        let mut pruned = tree.delete_nodes(&alpha.nodes())?;

        let mut pass = 0usize;
        loop {
            let mut lambda = pruned.leaves();

            // One max-heap per open task over the eligible snapshot leaves,
            // with lazy deletion; the cleaned tops are scanned per pick.
            let mut heaps: BTreeMap<TaskId, BinaryHeap<HeapEntry>> = BTreeMap::new();
            for &task in &tasks_left {
                let mut heap = BinaryHeap::new();
                for &node in lambda.iter().filter(|n| nodes_left.contains(n)) {
                    let x = solution.value(node, task);
                    if x > EPS_ZERO {
                        heap.push(HeapEntry { quantized: quantize(x), node, x });
                    }
                }
                heaps.insert(task, heap);
            }

            loop {
                let mut best: Option<(HeapEntry, TaskId)> = None;
                for (&task, heap) in heaps.iter_mut() {
                    while let Some(top) = heap.peek() {
                        if nodes_left.contains(&top.node) && lambda.contains(&top.node) {
                            break;
                        }
                        heap.pop();
                    }
                    if let Some(&top) = heap.peek() {
                        let wins = match best {
                            None => true,
                            Some((b, bt)) => match top.quantized.cmp(&b.quantized) {
                                std::cmp::Ordering::Greater => true,
                                std::cmp::Ordering::Less => false,
                                std::cmp::Ordering::Equal => (top.node, task) < (b.node, bt),
                            },
                        };
                        if wins {
                            best = Some((top, task));
                        }
                    }
                }
                let Some((HeapEntry { node, x, .. }, task)) = best else { break };

                alpha.insert(node, task);
                trace.leaf_picks.push(LeafPick { node, task, x, pass });
                lambda.remove(&node);
                tasks_left.remove(&task);
                heaps.remove(&task);
                nodes_left.remove(&node);
                for &anc in &pruned.path_to_root(node)?[1..] {
                    nodes_left.remove(&anc);
                }
                pruned = pruned.delete_nodes(&BTreeSet::from([node]))?;
            }

            if tasks_left.is_empty() {
                iterations.push(trace);
                break 'iteration;
            }

            // Delete the leaves that survived the pass to give their
            // ancestors a chance. The root is kept: a root-only remainder
            // fails the checks below either way.
            let victims: BTreeSet<NodeId> = lambda.into_iter().filter(|&v| v != ROOT).collect();
            pruned = pruned.delete_nodes(&victims)?;

            let assignable_leaves =
                pruned.leaves().iter().filter(|v| nodes_left.contains(v)).count();
            let usable_mass = pruned.nodes().any(|v| {
                nodes_left.contains(&v)
                    && tasks_left.iter().any(|&t| solution.value(v, t) > EPS_ZERO)
            });

            if usable_mass && assignable_leaves >= tasks_left.len() {
                // Stale fractional values stay authoritative for the freshly
                // promoted leaves.
                pass += 1;
                if pass > tree.id_bound() {
                    return Err(BoaError::InvariantViolated(
                        "leaf promotion failed to make progress".into(),
                    ));
                }
            } else {
                iterations.push(trace);
                continue 'iteration;
            }
        }
    }

    let objective = instance.assignment_weight(&alpha)?;
    debug_assert!(
        instance.validate_assignment(&alpha).ok(),
        "heuristic produced an invalid assignment"
    );
    Ok(BoaResult { assignment: alpha, objective, lp_calls, iterations })
}
