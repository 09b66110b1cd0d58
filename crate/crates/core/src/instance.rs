//! Problem instances, assignments and assignment validation.
//!
//! An [`Instance`] couples a full (unpruned) [`TreeTopology`] with a task
//! count and an `n x m` weight matrix. An [`Assignment`] is a set of
//! `(node, task)` pairs; it is feasible when it matches every task to a
//! distinct node and the root paths of the chosen nodes are pairwise
//! independent.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::{build_tree, NodeId, TreeTopology, ROOT};

/// Task identifier, 1-based.
pub type TaskId = usize;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("weight matrix has {rows} rows, expected {expected}")]
    WeightRows { rows: usize, expected: usize },
    #[error("weight row for node {node} has {cols} entries, expected {expected}")]
    WeightCols { node: NodeId, cols: usize, expected: usize },
    #[error("weight for node {node}, task {task} is {value}, expected finite and >= 0")]
    BadWeight { node: NodeId, task: TaskId, value: f64 },
    #[error("task count must be at least 1")]
    NoTasks,
    #[error("instance requires a full tree, got one with pruned nodes")]
    PrunedTree,
    #[error("root weight for task {task} is {value}; instances with more than one task require zero root weights")]
    RootWeightNonzero { task: TaskId, value: f64 },
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("unknown task id {0}")]
    UnknownTask(TaskId),
    #[error(transparent)]
    Tree(#[from] crate::tree::TreeError),
    #[error("instance file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad node id key {0:?} in parents map")]
    BadParentKey(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    tree: TreeTopology,
    task_count: usize,
    /// `weights[i - 1][j - 1]` is the weight of assigning node `i` to task `j`.
    weights: Vec<Vec<f64>>,
}

impl Instance {
    pub fn new(
        tree: TreeTopology,
        task_count: usize,
        weights: Vec<Vec<f64>>,
    ) -> Result<Self, InstanceError> {
        if task_count == 0 {
            return Err(InstanceError::NoTasks);
        }
        if tree.node_count() != tree.id_bound() {
            return Err(InstanceError::PrunedTree);
        }
        let n = tree.id_bound();
        if weights.len() != n {
            return Err(InstanceError::WeightRows { rows: weights.len(), expected: n });
        }
        for (row, entries) in weights.iter().enumerate() {
            let node = row + 1;
            if entries.len() != task_count {
                return Err(InstanceError::WeightCols {
                    node,
                    cols: entries.len(),
                    expected: task_count,
                });
            }
            for (col, &w) in entries.iter().enumerate() {
                if !w.is_finite() || w < 0.0 {
                    return Err(InstanceError::BadWeight { node, task: col + 1, value: w });
                }
            }
        }
        Ok(Instance { tree, task_count, weights })
    }

    pub fn tree(&self) -> &TreeTopology {
        &self.tree
    }

    pub fn node_count(&self) -> usize {
        self.tree.id_bound()
    }

    pub fn task_count(&self) -> usize {
        self.task_count
    }

    pub fn weight(&self, node: NodeId, task: TaskId) -> f64 {
        self.weights[node - 1][task - 1]
    }

    pub fn tasks(&self) -> impl Iterator<Item = TaskId> {
        1..=self.task_count
    }

    /// Solver entry points with more than one task require a zero root row;
    /// the root can only ever be assigned when it is the sole choice.
    pub fn require_zero_root_weights(&self) -> Result<(), InstanceError> {
        if self.task_count > 1 {
            for task in self.tasks() {
                let value = self.weight(ROOT, task);
                if value != 0.0 {
                    return Err(InstanceError::RootWeightNonzero { task, value });
                }
            }
        }
        Ok(())
    }

    /// A feasible assignment exists iff there are at least as many leaves as
    /// tasks.
    pub fn check_feasibility(&self) -> bool {
        self.tree.leaves().len() >= self.task_count
    }

    /// Total weight of an assignment's pairs.
    pub fn assignment_weight(&self, assignment: &Assignment) -> Result<f64, InstanceError> {
        let mut total = 0.0;
        for &(node, task) in assignment.iter() {
            if !self.tree.is_present(node) {
                return Err(InstanceError::UnknownNode(node));
            }
            if task < 1 || task > self.task_count {
                return Err(InstanceError::UnknownTask(task));
            }
            total += self.weight(node, task);
        }
        Ok(total)
    }

    /// Checks an assignment against the full contract: known ids, no node or
    /// task reuse, every task covered, pairwise independent root paths.
    /// Violations are reported, never thrown.
    pub fn validate_assignment(&self, assignment: &Assignment) -> ValidationReport {
        let mut violations = Vec::new();
        let mut seen_nodes: BTreeMap<NodeId, usize> = BTreeMap::new();
        let mut seen_tasks: BTreeMap<TaskId, usize> = BTreeMap::new();
        let mut valid_nodes = Vec::new();

        for &(node, task) in assignment.iter() {
            let mut ids_ok = true;
            if node < 1 || node > self.tree.id_bound() || !self.tree.is_present(node) {
                violations.push(Violation {
                    kind: ViolationKind::UnknownId,
                    detail: format!("node {node} is not part of the tree"),
                });
                ids_ok = false;
            }
            if task < 1 || task > self.task_count {
                violations.push(Violation {
                    kind: ViolationKind::UnknownId,
                    detail: format!("task {task} outside 1..={}", self.task_count),
                });
                ids_ok = false;
            }
            if ids_ok {
                *seen_nodes.entry(node).or_insert(0) += 1;
                *seen_tasks.entry(task).or_insert(0) += 1;
                valid_nodes.push(node);
            }
        }
        for (&node, &count) in &seen_nodes {
            if count > 1 {
                violations.push(Violation {
                    kind: ViolationKind::DuplicateNode,
                    detail: format!("node {node} assigned to {count} tasks"),
                });
            }
        }
        for (&task, &count) in &seen_tasks {
            if count > 1 {
                violations.push(Violation {
                    kind: ViolationKind::DuplicateTask,
                    detail: format!("task {task} assigned to {count} nodes"),
                });
            }
        }
        for task in self.tasks() {
            if !seen_tasks.contains_key(&task) {
                violations.push(Violation {
                    kind: ViolationKind::UnassignedTask,
                    detail: format!("task {task} is not assigned"),
                });
            }
        }
        valid_nodes.sort_unstable();
        valid_nodes.dedup();
        for (idx, &a) in valid_nodes.iter().enumerate() {
            for &b in &valid_nodes[idx + 1..] {
                if !self.tree.paths_independent(a, b).expect("validated ids") {
                    violations.push(Violation {
                        kind: ViolationKind::Hierarchy,
                        detail: format!("nodes {a} and {b} lie on one root-to-leaf path"),
                    });
                }
            }
        }
        ValidationReport { violations }
    }

    /// Canonical JSON text form (keys `n`, `m`, `parents`, `weights`).
    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            n: self.node_count(),
            m: self.task_count,
            parents: self
                .tree
                .nodes()
                .filter(|&v| v != ROOT)
                .map(|v| (v.to_string(), self.tree.parent(v).expect("non-root")))
                .collect(),
            weights: self.weights.clone(),
        };
        serde_json::to_string_pretty(&file).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let file: InstanceFile = serde_json::from_str(text)?;
        let mut parents = BTreeMap::new();
        for (key, parent) in file.parents {
            let node: NodeId = key
                .parse()
                .map_err(|_| InstanceError::BadParentKey(key.clone()))?;
            parents.insert(node, parent);
        }
        let tree = build_tree(&parents, file.n)?;
        Instance::new(tree, file.m, file.weights)
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    m: usize,
    parents: BTreeMap<String, NodeId>,
    weights: Vec<Vec<f64>>,
}

/// A set of `(node, task)` pairs. Serializes as an array of `[node, task]`
/// pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment {
    pairs: BTreeSet<(NodeId, TaskId)>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (NodeId, TaskId)>>(pairs: I) -> Self {
        Assignment { pairs: pairs.into_iter().collect() }
    }

    pub fn insert(&mut self, node: NodeId, task: TaskId) {
        self.pairs.insert((node, task));
    }

    pub fn iter(&self) -> impl Iterator<Item = &(NodeId, TaskId)> {
        self.pairs.iter()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn nodes(&self) -> BTreeSet<NodeId> {
        self.pairs.iter().map(|&(n, _)| n).collect()
    }

    pub fn tasks(&self) -> BTreeSet<TaskId> {
        self.pairs.iter().map(|&(_, t)| t).collect()
    }

    pub fn node_for_task(&self, task: TaskId) -> Option<NodeId> {
        self.pairs.iter().find(|&&(_, t)| t == task).map(|&(n, _)| n)
    }
}

impl FromIterator<(NodeId, TaskId)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (NodeId, TaskId)>>(iter: I) -> Self {
        Assignment::from_pairs(iter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    DuplicateNode,
    DuplicateTask,
    Hierarchy,
    UnassignedTask,
    UnknownId,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}


#[cfg(test)]
mod tests {
    use super::test_util::{chain3_two_tasks, six_node_instance};
    use super::*;
    use crate::tree::test_util::six_node_tree;
    use proptest::prelude::*;

    #[test]
    fn feasibility_is_leaf_count_vs_tasks() {
        assert!(six_node_instance().check_feasibility());
        assert!(!chain3_two_tasks().check_feasibility());

        // Star with exactly as many leaves as tasks sits on the boundary.
        let m = 4;
        let parents: BTreeMap<NodeId, NodeId> = (2..=m + 1).map(|v| (v, 1)).collect();
        let star = build_tree(&parents, m + 1).unwrap();
        let weights = vec![vec![0.0; m]; m + 1];
        let inst = Instance::new(star, m, weights).unwrap();
        assert!(inst.check_feasibility());
    }

    #[test]
    fn validates_known_good_assignment() {
        let inst = six_node_instance();
        let a = Assignment::from_pairs([(4, 1), (5, 2), (3, 3)]);
        let report = inst.validate_assignment(&a);
        assert!(report.ok(), "unexpected violations: {:?}", report.violations);
        assert_eq!(inst.assignment_weight(&a).unwrap(), 18.0);
    }

    #[test]
    fn reports_hierarchy_violation() {
        let inst = six_node_instance();
        let a = Assignment::from_pairs([(2, 1), (5, 2), (3, 3)]);
        let report = inst.validate_assignment(&a);
        assert!(!report.ok());
        assert!(report.has(ViolationKind::Hierarchy));
    }

    #[test]
    fn reports_duplicate_node() {
        let inst = six_node_instance();
        let a = Assignment::from_pairs([(4, 1), (4, 2), (3, 3)]);
        let report = inst.validate_assignment(&a);
        assert!(report.has(ViolationKind::DuplicateNode));
    }

    #[test]
    fn reports_missing_and_unknown() {
        let inst = six_node_instance();
        let a = Assignment::from_pairs([(9, 1), (4, 7)]);
        let report = inst.validate_assignment(&a);
        assert!(report.has(ViolationKind::UnknownId));
        assert!(report.has(ViolationKind::UnassignedTask));
    }

    #[test]
    fn weight_of_empty_assignment_is_zero() {
        let inst = six_node_instance();
        assert_eq!(inst.assignment_weight(&Assignment::new()).unwrap(), 0.0);
        let heuristic_pick = Assignment::from_pairs([(3, 1), (5, 2), (4, 3)]);
        assert_eq!(inst.assignment_weight(&heuristic_pick).unwrap(), 16.0);
        let alt = Assignment::from_pairs([(3, 1), (5, 2), (6, 3)]);
        assert_eq!(inst.assignment_weight(&alt).unwrap(), 16.0);
    }

    #[test]
    fn root_weight_rule() {
        let mut weights = vec![vec![0.0; 3]; 6];
        weights[0][1] = 2.0;
        let inst = Instance::new(six_node_tree(), 3, weights).unwrap();
        assert!(matches!(
            inst.require_zero_root_weights(),
            Err(InstanceError::RootWeightNonzero { task: 2, .. })
        ));

        // A single task may use the root.
        let one = Instance::new(six_node_tree(), 1, vec![vec![5.0]; 6]).unwrap();
        one.require_zero_root_weights().unwrap();
    }

    #[test]
    fn rejects_bad_matrices() {
        let t = six_node_tree();
        assert!(matches!(
            Instance::new(t.clone(), 3, vec![vec![0.0; 3]; 5]),
            Err(InstanceError::WeightRows { .. })
        ));
        assert!(matches!(
            Instance::new(t.clone(), 2, vec![vec![0.0; 3]; 6]),
            Err(InstanceError::WeightCols { .. })
        ));
        let mut w = vec![vec![0.0; 3]; 6];
        w[2][1] = f64::NAN;
        assert!(matches!(
            Instance::new(t.clone(), 3, w),
            Err(InstanceError::BadWeight { node: 3, task: 2, .. })
        ));
        let mut w = vec![vec![0.0; 3]; 6];
        w[4][0] = -1.0;
        assert!(matches!(Instance::new(t, 3, w), Err(InstanceError::BadWeight { .. })));
    }

    #[test]
    fn json_round_trip_keeps_everything() {
        let inst = six_node_instance();
        let text = inst.to_json();
        let back = Instance::from_json(&text).unwrap();
        assert_eq!(back, inst);
        // Shape check: the canonical keys are present.
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["n"], 6);
        assert_eq!(value["m"], 3);
        assert_eq!(value["parents"]["5"], 2);
        assert_eq!(value["weights"][2][0], 8.0);
    }

    #[test]
    fn assignment_serializes_as_pairs() {
        let a = Assignment::from_pairs([(4, 1), (3, 3)]);
        let text = serde_json::to_string(&a).unwrap();
        assert_eq!(text, "[[3,3],[4,1]]");
        let back: Assignment = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a);
    }

    proptest! {
        #[test]
        fn instance_json_round_trips(
            n in 1usize..12,
            m in 1usize..5,
            seed in proptest::bits::u64::ANY,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let parents: BTreeMap<NodeId, NodeId> =
                (2..=n).map(|v| (v, rng.random_range(1..v))).collect();
            let tree = build_tree(&parents, n).unwrap();
            let weights: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..m).map(|_| rng.random_range(0..100) as f64).collect())
                .collect();
            let inst = Instance::new(tree, m, weights).unwrap();
            let back = Instance::from_json(&inst.to_json()).unwrap();
            prop_assert_eq!(back, inst);
        }
    }
}
