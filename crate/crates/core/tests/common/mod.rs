//! Fixtures shared by the integration test targets.
// Each target compiles this module separately and uses a different subset.
#![allow(dead_code)]

use std::collections::BTreeMap;

use mwtm::{build_tree, Instance};

/// Six-node, three-task sample: root 1 with children {2, 3}, node 2 with
/// children {4, 5, 6}. Exact optimum 18, relaxation bound 19, heuristic 16.
pub fn six_node_instance() -> Instance {
    let parents = BTreeMap::from([(2, 1), (3, 1), (4, 2), (5, 2), (6, 2)]);
    let tree = build_tree(&parents, 6).unwrap();
    let weights = vec![
        vec![0.0, 0.0, 0.0],
        vec![0.0, 0.0, 8.0],
        vec![8.0, 0.0, 8.0],
        vec![6.0, 0.0, 4.0],
        vec![0.0, 4.0, 0.0],
        vec![0.0, 4.0, 4.0],
    ];
    Instance::new(tree, 3, weights).unwrap()
}

/// Chain 1 -> 2 -> 3 with two tasks: a single leaf, hence infeasible.
pub fn chain3_two_tasks() -> Instance {
    let parents = BTreeMap::from([(2, 1), (3, 2)]);
    let tree = build_tree(&parents, 3).unwrap();
    let weights = vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![3.0, 1.0]];
    Instance::new(tree, 2, weights).unwrap()
}

/// The satisfiable example formula (p v ~q v ~p)(p v r v ~s)(q v r v s).
pub const EXAMPLE_DIMACS: &str = "c example\np cnf 4 3\n1 -2 -1 0\n1 3 -4 0\n2 3 4 0\n";
