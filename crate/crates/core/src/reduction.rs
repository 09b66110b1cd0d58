//! Satisfiability gadgets: CNF ingestion, padding to exactly-3 form, the
//! transforms from (MAX-)E3-SAT formulas to tree-matching instances, and
//! decoding optimal assignments back into truth assignments.
//!
//! The gadget tree places two *variable nodes* per variable directly under
//! the root (node `2i` for the literal `x_i`, node `2i+1` for `not x_i`) and
//! one *literal node* per clause occurrence below the matching variable node.
//! Tasks split into one *clausal task* per clause and one *enforcement task*
//! per variable; weights are 0/1 so that an instance built from `n` variables
//! and `m` clauses admits an assignment of weight `n + m` exactly when the
//! formula is satisfiable. The max variant raises enforcement weights to `m`
//! and parks unsatisfiable clausal tasks on zero-weight dummy nodes, shifting
//! the optimum to `k* + m*n` for a best truth assignment satisfying `k*`
//! clauses.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Assignment, Instance, InstanceError, TaskId};
use crate::tree::{build_tree, NodeId};

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("DIMACS syntax error: {0}")]
    Syntax(String),
    #[error("clause {index} is empty")]
    EmptyClause { index: usize },
    #[error("literal {literal} in clause {index} is outside 1..={bound}")]
    LiteralOutOfRange { literal: i32, index: usize, bound: usize },
    #[error("clause {index} has {width} literals, at most 3 are transformable")]
    ClauseTooWide { index: usize, width: usize },
    #[error("transform requires exactly three literals per clause, found flavor {0:?}")]
    FlavorMismatch(CnfFlavor),
    #[error("assignment does not reach the decodable optimum: {0}")]
    NotOptimal(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("meta file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CnfFlavor {
    /// Every clause has exactly three literals.
    ExactlyThree,
    /// Every clause has at most three literals, some fewer.
    AtMostThree,
    /// Some clause is wider than three literals.
    General,
}

/// A CNF formula over variables `1..=variable_count`; literals are signed
/// variable indices, duplicates inside a clause are preserved verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    variable_count: usize,
    clauses: Vec<Vec<i32>>,
}

impl CnfFormula {
    pub fn new(variable_count: usize, clauses: Vec<Vec<i32>>) -> Result<Self, ReductionError> {
        for (idx, clause) in clauses.iter().enumerate() {
            if clause.is_empty() {
                return Err(ReductionError::EmptyClause { index: idx + 1 });
            }
            for &lit in clause {
                let var = lit.unsigned_abs() as usize;
                if lit == 0 || var > variable_count {
                    return Err(ReductionError::LiteralOutOfRange {
                        literal: lit,
                        index: idx + 1,
                        bound: variable_count,
                    });
                }
            }
        }
        Ok(CnfFormula { variable_count, clauses })
    }

    pub fn variable_count(&self) -> usize {
        self.variable_count
    }

    pub fn clause_count(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    pub fn flavor(&self) -> CnfFlavor {
        if self.clauses.iter().any(|c| c.len() > 3) {
            CnfFlavor::General
        } else if self.clauses.iter().all(|c| c.len() == 3) {
            CnfFlavor::ExactlyThree
        } else {
            CnfFlavor::AtMostThree
        }
    }

    /// Evaluates under `assignment[i - 1] = value of x_i`.
    pub fn evaluate(&self, assignment: &[bool]) -> bool {
        self.satisfied_count(assignment) == self.clauses.len()
    }

    pub fn satisfied_count(&self, assignment: &[bool]) -> usize {
        self.clauses
            .iter()
            .filter(|clause| {
                clause.iter().any(|&lit| {
                    let value = assignment[lit.unsigned_abs() as usize - 1];
                    if lit > 0 {
                        value
                    } else {
                        !value
                    }
                })
            })
            .count()
    }
}

/// Parses standard DIMACS CNF text: `c` comment lines, a `p cnf <vars>
/// <clauses>` header, then zero-terminated clauses.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, ReductionError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') || line == "%" {
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(ReductionError::Syntax("duplicate problem line".into()));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 || fields[1] != "cnf" {
                return Err(ReductionError::Syntax(format!("bad problem line {line:?}")));
            }
            let vars = fields[2]
                .parse()
                .map_err(|_| ReductionError::Syntax(format!("bad variable count {:?}", fields[2])))?;
            let count = fields[3]
                .parse()
                .map_err(|_| ReductionError::Syntax(format!("bad clause count {:?}", fields[3])))?;
            header = Some((vars, count));
            continue;
        }
        if header.is_none() {
            return Err(ReductionError::Syntax(format!(
                "clause data before the problem line: {line:?}"
            )));
        }
        for token in line.split_whitespace() {
            let lit: i32 = token
                .parse()
                .map_err(|_| ReductionError::Syntax(format!("bad literal {token:?}")))?;
            if lit == 0 {
                if current.is_empty() {
                    return Err(ReductionError::EmptyClause { index: clauses.len() + 1 });
                }
                clauses.push(std::mem::take(&mut current));
            } else {
                current.push(lit);
            }
        }
    }
    if !current.is_empty() {
        return Err(ReductionError::Syntax("unterminated final clause".into()));
    }
    let Some((vars, declared)) = header else {
        return Err(ReductionError::Syntax("missing problem line".into()));
    };
    if clauses.len() != declared {
        return Err(ReductionError::Syntax(format!(
            "header declares {declared} clauses, found {}",
            clauses.len()
        )));
    }
    CnfFormula::new(vars, clauses)
}

/// Pads an at-most-three formula to exactly-three form with three shared
/// dummy variables: one-literal clauses gain `d1` and `d2`, two-literal
/// clauses gain `d1`, and all maxterms of the dummies except `d1 + d2 + d3`
/// are appended, forcing the dummies false in any satisfying assignment. An
/// already exactly-three input is returned unchanged, with no dummies.
pub fn threesat_to_e3sat(formula: &CnfFormula) -> Result<CnfFormula, ReductionError> {
    for (idx, clause) in formula.clauses.iter().enumerate() {
        if clause.len() > 3 {
            return Err(ReductionError::ClauseTooWide { index: idx + 1, width: clause.len() });
        }
    }
    if formula.flavor() == CnfFlavor::ExactlyThree {
        return Ok(formula.clone());
    }
    let n = formula.variable_count;
    let d = [n as i32 + 1, n as i32 + 2, n as i32 + 3];
    let mut clauses = Vec::with_capacity(formula.clauses.len() + 7);
    for clause in &formula.clauses {
        let mut padded = clause.clone();
        match padded.len() {
            1 => padded.extend([d[0], d[1]]),
            2 => padded.push(d[0]),
            _ => {}
        }
        clauses.push(padded);
    }
    // Every sign pattern except the all-positive maxterm; together they pin
    // all three dummies to false.
    for mask in 1u8..=7 {
        clauses.push(
            (0..3)
                .map(|k| if mask & (1 << k) != 0 { -d[k] } else { d[k] })
                .collect(),
        );
    }
    CnfFormula::new(n + 3, clauses)
}

/// Node/task correspondence of the gadget, serialized next to the instance so
/// a separate process can decode solutions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionMeta {
    pub variable_count: usize,
    pub clause_count: usize,
    pub max_variant: bool,
    /// Per variable `i` (index `i - 1`): nodes of the literals `x_i` and
    /// `not x_i`, i.e. `(2i, 2i + 1)`.
    pub variable_nodes: Vec<(NodeId, NodeId)>,
    /// Per clause `i`: the nodes of its three literal occurrences,
    /// `1 + 2n + 3(i - 1) + j` for position `j`.
    pub literal_nodes: Vec<[NodeId; 3]>,
    /// Per clause `i`: its clausal task, `i`.
    pub clausal_tasks: Vec<TaskId>,
    /// Per variable `i`: its enforcement task, `m + i`.
    pub enforcement_tasks: Vec<TaskId>,
    /// Zero-weight filler nodes under the root; max variant only.
    pub dummy_nodes: Vec<NodeId>,
}

impl ReductionMeta {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("meta serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ReductionError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Transforms an exactly-three formula into an equivalent matching instance:
/// `1 + 2n + 3m` nodes and `n + m` tasks, satisfiable iff the instance has an
/// assignment of total weight `n + m`.
pub fn e3sat_to_mwtm(formula: &CnfFormula) -> Result<(Instance, ReductionMeta), ReductionError> {
    build_gadget(formula, false)
}

/// The max-satisfiability variant: enforcement weights are raised to the
/// clause count and `m` zero-weight dummy nodes are appended under the root,
/// so the optimum equals `k* + m*n` where `k*` is the maximum number of
/// simultaneously satisfiable clauses.
pub fn maxe3sat_to_mwtm(formula: &CnfFormula) -> Result<(Instance, ReductionMeta), ReductionError> {
    build_gadget(formula, true)
}

fn build_gadget(
    formula: &CnfFormula,
    max_variant: bool,
) -> Result<(Instance, ReductionMeta), ReductionError> {
    if formula.flavor() != CnfFlavor::ExactlyThree {
        return Err(ReductionError::FlavorMismatch(formula.flavor()));
    }
    let n = formula.variable_count;
    let m = formula.clause_count();
    let gadget_nodes = 1 + 2 * n + 3 * m;
    let node_count = gadget_nodes + if max_variant { m } else { 0 };
    let task_count = n + m;

    let mut parents: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for var in 1..=n {
        parents.insert(2 * var, 1);
        parents.insert(2 * var + 1, 1);
    }
    let mut literal_nodes = Vec::with_capacity(m);
    for (idx, clause) in formula.clauses.iter().enumerate() {
        let mut trio = [0; 3];
        for (pos, &lit) in clause.iter().enumerate() {
            let node = 1 + 2 * n + 3 * idx + pos + 1;
            let var = lit.unsigned_abs() as usize;
            parents.insert(node, if lit > 0 { 2 * var } else { 2 * var + 1 });
            trio[pos] = node;
        }
        literal_nodes.push(trio);
    }
    let dummy_nodes: Vec<NodeId> =
        if max_variant { (gadget_nodes + 1..=node_count).collect() } else { Vec::new() };
    for &dummy in &dummy_nodes {
        parents.insert(dummy, 1);
    }
    let tree = build_tree(&parents, node_count).map_err(InstanceError::from)?;

    let enforcement_weight = if max_variant { m as f64 } else { 1.0 };
    let mut weights = vec![vec![0.0; task_count]; node_count];
    for var in 1..=n {
        let task = m + var;
        weights[2 * var - 1][task - 1] = enforcement_weight;
        weights[2 * var][task - 1] = enforcement_weight;
    }
    for (idx, trio) in literal_nodes.iter().enumerate() {
        for &node in trio {
            weights[node - 1][idx] = 1.0;
        }
    }

    let instance = Instance::new(tree, task_count, weights)?;
    // Gadget instances are always feasible: the leaf supply covers all tasks.
    assert!(
        instance.tree().leaves().len() >= task_count,
        "gadget produced fewer leaves than tasks"
    );

    let meta = ReductionMeta {
        variable_count: n,
        clause_count: m,
        max_variant,
        variable_nodes: (1..=n).map(|v| (2 * v, 2 * v + 1)).collect(),
        literal_nodes,
        clausal_tasks: (1..=m).collect(),
        enforcement_tasks: (1..=n).map(|v| m + v).collect(),
        dummy_nodes,
    };
    Ok((instance, meta))
}

/// Reads a truth assignment off an optimal gadget solution: `x_i` is true
/// when its enforcement task sits on the `not x_i` node (freeing the `x_i`
/// literal nodes), false when it sits on the `x_i` node. For the plain
/// variant every clausal task must sit on one of its literal nodes, which
/// certifies total weight `n + m`.
pub fn decode_truth_assignment(
    meta: &ReductionMeta,
    assignment: &Assignment,
) -> Result<Vec<bool>, ReductionError> {
    let mut truth = Vec::with_capacity(meta.variable_count);
    for var in 1..=meta.variable_count {
        let task = meta.enforcement_tasks[var - 1];
        let (pos_node, neg_node) = meta.variable_nodes[var - 1];
        match assignment.node_for_task(task) {
            Some(node) if node == neg_node => truth.push(true),
            Some(node) if node == pos_node => truth.push(false),
            Some(node) => {
                return Err(ReductionError::NotOptimal(format!(
                    "enforcement task {task} sits on node {node}, not on {pos_node} or {neg_node}"
                )))
            }
            None => {
                return Err(ReductionError::NotOptimal(format!(
                    "enforcement task {task} is unassigned"
                )))
            }
        }
    }
    if !meta.max_variant {
        for clause in 1..=meta.clause_count {
            let task = meta.clausal_tasks[clause - 1];
            let allowed = &meta.literal_nodes[clause - 1];
            match assignment.node_for_task(task) {
                Some(node) if allowed.contains(&node) => {}
                other => {
                    return Err(ReductionError::NotOptimal(format!(
                        "clausal task {task} sits on {other:?} instead of a literal node of its clause"
                    )))
                }
            }
        }
    }
    Ok(truth)
}
