//! LP relaxation of the assignment formulation and its simplex solver.
//!
//! The relaxation keeps three families of rows over variables `x[i][j] >= 0`:
//! per-node rows (`sum_j x[i][j] <= 1`), per-task rows (`sum_i x[i][j] = 1`)
//! and per-leaf path rows (`sum over the root path of leaf k of all tasks
//! <= 1`). Upper bounds `x <= 1` are implied by the node rows. Fixing a pair
//! `(i, j)` to one is done by pre-solve elimination: the pair's node and task
//! rows disappear and every column of an ancestor or descendant of `i` is
//! eliminated at zero.

mod simplex;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::instance::{Assignment, Instance, InstanceError, TaskId};
use crate::tree::NodeId;

/// Constraint residual tolerance for accepting a solution as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Smallest tableau entry usable as a pivot.
pub const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("fixed assignment is not a valid partial matching: {0}")]
    InvalidFixing(String),
    #[error("simplex hit the pivot limit after {0} pivots")]
    PivotLimit(usize),
    #[error("numerical failure in simplex: {0}")]
    Numerical(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Node(NodeId),
    Task(TaskId),
    /// Path row of the named leaf.
    Path(NodeId),
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub kind: RowKind,
    /// Column indices with (implicit) coefficient one.
    pub columns: Vec<usize>,
    pub rhs: f64,
    pub equality: bool,
}

/// The relaxed model over the residual problem after fixing.
#[derive(Debug, Clone)]
pub struct LpModel {
    columns: Vec<(NodeId, TaskId)>,
    col_index: BTreeMap<(NodeId, TaskId), usize>,
    objective: Vec<f64>,
    rows: Vec<LpRow>,
    fixed: Vec<(NodeId, TaskId)>,
    fixed_objective: f64,
    /// Nodes whose columns were eliminated at zero by the fixing pre-solve.
    blocked: BTreeSet<NodeId>,
}

impl LpModel {
    pub fn columns(&self) -> &[(NodeId, TaskId)] {
        &self.columns
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn column_of(&self, node: NodeId, task: TaskId) -> Option<usize> {
        self.col_index.get(&(node, task)).copied()
    }

    pub fn rows(&self) -> &[LpRow] {
        &self.rows
    }

    pub fn objective_coefficients(&self) -> &[f64] {
        &self.objective
    }

    pub fn fixed_pairs(&self) -> &[(NodeId, TaskId)] {
        &self.fixed
    }

    pub fn fixed_objective(&self) -> f64 {
        self.fixed_objective
    }

    pub fn blocked_nodes(&self) -> &BTreeSet<NodeId> {
        &self.blocked
    }

    pub fn node_row_count(&self) -> usize {
        self.rows.iter().filter(|r| matches!(r.kind, RowKind::Node(_))).count()
    }

    pub fn task_row_count(&self) -> usize {
        self.rows.iter().filter(|r| matches!(r.kind, RowKind::Task(_))).count()
    }

    pub fn path_row_count(&self) -> usize {
        self.rows.iter().filter(|r| matches!(r.kind, RowKind::Path(_))).count()
    }

    /// Debug dump in the plain LP text layout (objective, rows, bounds), for
    /// cross-checking against third-party solvers. Variables are named
    /// `x_<node>_<task>`.
    pub fn to_lp_format(&self) -> String {
        use std::fmt::Write;
        let name = |c: usize| {
            let (i, j) = self.columns[c];
            format!("x_{i}_{j}")
        };
        let mut out = String::new();
        out.push_str("\\ LP relaxation over the residual tree-matching problem\n");
        for &(i, j) in &self.fixed {
            let _ = writeln!(out, "\\ fixed: x_{i}_{j} = 1");
        }
        out.push_str("Maximize\n obj:");
        if self.columns.is_empty() {
            out.push_str(" 0");
        }
        for (c, w) in self.objective.iter().enumerate() {
            let _ = write!(out, "{} {} {}", if c == 0 { "" } else { " +" }, w, name(c));
        }
        out.push_str("\nSubject To\n");
        for row in &self.rows {
            let label = match row.kind {
                RowKind::Node(i) => format!("node_{i}"),
                RowKind::Task(j) => format!("task_{j}"),
                RowKind::Path(k) => format!("path_{k}"),
            };
            let _ = write!(out, " {label}:");
            for (pos, &c) in row.columns.iter().enumerate() {
                let _ = write!(out, "{} {}", if pos == 0 { "" } else { " +" }, name(c));
            }
            let _ = writeln!(out, " {} {}", if row.equality { "=" } else { "<=" }, row.rhs);
        }
        out.push_str("Bounds\n");
        for c in 0..self.columns.len() {
            let _ = writeln!(out, " 0 <= {}", name(c));
        }
        out.push_str("End\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

/// A solved relaxation. `objective` includes the fixed pairs' contribution;
/// it is negative infinity when the model is infeasible.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    values: BTreeMap<(NodeId, TaskId), f64>,
    pub objective: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Value of `x[node][task]`; zero for eliminated or unknown pairs.
    pub fn value(&self, node: NodeId, task: TaskId) -> f64 {
        self.values.get(&(node, task)).copied().unwrap_or(0.0)
    }

    pub fn values(&self) -> &BTreeMap<(NodeId, TaskId), f64> {
        &self.values
    }
}

/// Builds the relaxation of `instance` with every pair in `fixed` substituted
/// at one and eliminated from the residual model.
pub fn build_lp_relaxation(instance: &Instance, fixed: &Assignment) -> Result<LpModel, LpError> {
    build_relaxation_inner(instance, fixed, &BTreeSet::new())
}

/// As [`build_lp_relaxation`], additionally dropping the single columns in
/// `banned` (used by branch-and-bound to fix variables to zero).
pub(crate) fn build_lp_relaxation_banned(
    instance: &Instance,
    fixed: &Assignment,
    banned: &BTreeSet<(NodeId, TaskId)>,
) -> Result<LpModel, LpError> {
    build_relaxation_inner(instance, fixed, banned)
}

fn build_relaxation_inner(
    instance: &Instance,
    fixed: &Assignment,
    banned: &BTreeSet<(NodeId, TaskId)>,
) -> Result<LpModel, LpError> {
    instance.require_zero_root_weights()?;
    let tree = instance.tree();

    // The fixing must be a valid partial matching respecting the hierarchy.
    let mut seen_nodes = BTreeSet::new();
    let mut seen_tasks = BTreeSet::new();
    for &(node, task) in fixed.iter() {
        if !tree.is_present(node) {
            return Err(LpError::InvalidFixing(format!("unknown node {node}")));
        }
        if task < 1 || task > instance.task_count() {
            return Err(LpError::InvalidFixing(format!("unknown task {task}")));
        }
        if !seen_nodes.insert(node) {
            return Err(LpError::InvalidFixing(format!("node {node} fixed twice")));
        }
        if !seen_tasks.insert(task) {
            return Err(LpError::InvalidFixing(format!("task {task} fixed twice")));
        }
    }
    let fixed_nodes = fixed.nodes();
    for &a in &fixed_nodes {
        for &b in fixed_nodes.range((a + 1)..) {
            if !tree.paths_independent(a, b).expect("checked ids") {
                return Err(LpError::InvalidFixing(format!(
                    "fixed nodes {a} and {b} share a root path"
                )));
            }
        }
    }

    let mut fixed_objective = 0.0;
    let mut blocked = fixed_nodes.clone();
    for &(node, task) in fixed.iter() {
        fixed_objective += instance.weight(node, task);
        for &anc in &tree.path_to_root(node).expect("checked ids")[1..] {
            blocked.insert(anc);
        }
    }

    // Residual tree: fixed subtrees removed, blocked ancestors retained but
    // without columns.
    let residual = tree.delete_nodes(&fixed_nodes).expect("fixed nodes are present non-roots");

    let open_tasks: Vec<TaskId> =
        instance.tasks().filter(|t| !fixed.tasks().contains(t)).collect();

    let mut columns = Vec::new();
    let mut col_index = BTreeMap::new();
    let mut objective = Vec::new();
    if !open_tasks.is_empty() {
        for node in residual.nodes() {
            if blocked.contains(&node) {
                continue;
            }
            for &task in &open_tasks {
                if banned.contains(&(node, task)) {
                    continue;
                }
                col_index.insert((node, task), columns.len());
                columns.push((node, task));
                objective.push(instance.weight(node, task));
            }
        }
    }

    let mut rows = Vec::new();
    if !open_tasks.is_empty() {
        for node in residual.nodes() {
            if blocked.contains(&node) {
                continue;
            }
            let cols: Vec<usize> = open_tasks
                .iter()
                .filter_map(|&t| col_index.get(&(node, t)).copied())
                .collect();
            if !cols.is_empty() {
                rows.push(LpRow { kind: RowKind::Node(node), columns: cols, rhs: 1.0, equality: false });
            }
        }
        for &task in &open_tasks {
            let cols: Vec<usize> = columns
                .iter()
                .enumerate()
                .filter_map(|(c, &(_, t))| (t == task).then_some(c))
                .collect();
            // Kept even when empty: an open task with no eligible column is
            // exactly what makes the model infeasible.
            rows.push(LpRow { kind: RowKind::Task(task), columns: cols, rhs: 1.0, equality: true });
        }
        for leaf in residual.leaves() {
            let mut cols = Vec::new();
            for &node in &residual.path_to_root(leaf).expect("leaf is present") {
                if blocked.contains(&node) {
                    continue;
                }
                for &task in &open_tasks {
                    if let Some(&c) = col_index.get(&(node, task)) {
                        cols.push(c);
                    }
                }
            }
            if !cols.is_empty() {
                cols.sort_unstable();
                rows.push(LpRow { kind: RowKind::Path(leaf), columns: cols, rhs: 1.0, equality: false });
            }
        }
    }

    Ok(LpModel {
        columns,
        col_index,
        objective,
        rows,
        fixed: fixed.iter().copied().collect(),
        fixed_objective,
        blocked,
    })
}

/// Solves the model to an optimal basic solution, or reports infeasibility.
/// Deterministic for a given model.
pub fn solve_lp(model: &LpModel) -> Result<LpSolution, LpError> {
    let mut values: BTreeMap<(NodeId, TaskId), f64> =
        model.fixed.iter().map(|&p| (p, 1.0)).collect();

    if model.columns.is_empty() {
        // Fully fixed model, constant objective - unless open task rows
        // survived with no columns at all.
        if model.rows.iter().any(|r| r.equality) {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                values: BTreeMap::new(),
                objective: f64::NEG_INFINITY,
            });
        }
        return Ok(LpSolution {
            status: LpStatus::Optimal,
            values,
            objective: model.fixed_objective,
        });
    }

    let constraints: Vec<simplex::Constraint> = model
        .rows
        .iter()
        .map(|row| simplex::Constraint {
            cols: row.columns.iter().map(|&c| (c, 1.0)).collect(),
            rhs: row.rhs,
            equality: row.equality,
        })
        .collect();

    let outcome = simplex::maximize(&model.objective, &constraints).map_err(|e| match e {
        simplex::SimplexError::PivotLimit(p) => LpError::PivotLimit(p),
        simplex::SimplexError::Unbounded => {
            LpError::Numerical("relaxation reported unbounded".into())
        }
    })?;

    if outcome.status == simplex::SimplexStatus::Infeasible {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            values: BTreeMap::new(),
            objective: f64::NEG_INFINITY,
        });
    }

    debug_assert!(residuals_ok(model, &outcome.x), "solution violates a constraint");
    for (c, &pair) in model.columns.iter().enumerate() {
        values.insert(pair, outcome.x[c]);
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        values,
        objective: model.fixed_objective + outcome.objective,
    })
}

fn residuals_ok(model: &LpModel, x: &[f64]) -> bool {
    model.rows.iter().all(|row| {
        let lhs: f64 = row.columns.iter().map(|&c| x[c]).sum();
        if row.equality {
            (lhs - row.rhs).abs() <= FEASIBILITY_TOL
        } else {
            lhs <= row.rhs + FEASIBILITY_TOL
        }
    })
}
