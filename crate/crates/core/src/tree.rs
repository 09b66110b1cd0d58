//! Rooted tree topology with support for pruning whole subtrees.
//!
//! Node ids are `1..=n` with the root fixed at id 1. A topology built by
//! [`build_tree`] contains every id; [`TreeTopology::delete_nodes`] returns a
//! pruned copy in which some ids are no longer present, but surviving nodes
//! keep their original ids, parents and depths.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Node identifier, 1-based. Id 1 is always the root.
pub type NodeId = usize;

/// Root node id.
pub const ROOT: NodeId = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("node count must be at least 1")]
    EmptyTree,
    #[error("node id {0} outside 1..={1}")]
    IdOutOfRange(NodeId, usize),
    #[error("node {0} has no parent link")]
    OrphanNode(NodeId),
    #[error("unexpected parent link for node {0}")]
    UnexpectedParent(NodeId),
    #[error("cycle detected: node {0} is not reachable from the root")]
    Cycle(NodeId),
    #[error("node {0} is not present in this tree")]
    UnknownNode(NodeId),
    #[error("the root cannot be deleted")]
    RootDeletion,
}

/// An immutable rooted tree over ids `1..=id_bound`, possibly with some ids
/// pruned away.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeTopology {
    id_bound: usize,
    /// Parent per id; `None` for the root and for slot 0.
    parent: Vec<Option<NodeId>>,
    /// Present children per id, ascending.
    children: Vec<Vec<NodeId>>,
    /// Depth per id (root = 0). Pruning does not change surviving depths.
    depth: Vec<usize>,
    present: Vec<bool>,
    present_count: usize,
}

/// Builds and validates a topology from parent links.
///
/// `parent_links` must contain an entry for every node in `2..=n` and nothing
/// else; every parent must be a valid id and every node must reach the root.
pub fn build_tree(
    parent_links: &std::collections::BTreeMap<NodeId, NodeId>,
    n: usize,
) -> Result<TreeTopology, TreeError> {
    if n == 0 {
        return Err(TreeError::EmptyTree);
    }
    for (&node, &par) in parent_links {
        if node < 2 || node > n {
            if node == ROOT {
                return Err(TreeError::UnexpectedParent(node));
            }
            return Err(TreeError::IdOutOfRange(node, n));
        }
        if par < 1 || par > n {
            return Err(TreeError::IdOutOfRange(par, n));
        }
    }
    for node in 2..=n {
        if !parent_links.contains_key(&node) {
            return Err(TreeError::OrphanNode(node));
        }
    }

    let mut parent = vec![None; n + 1];
    let mut children = vec![Vec::new(); n + 1];
    for (&node, &par) in parent_links {
        parent[node] = Some(par);
        children[par].push(node);
    }
    for list in &mut children {
        list.sort_unstable();
    }

    // Depths via BFS from the root; anything unreached sits on a cycle.
    let mut depth = vec![usize::MAX; n + 1];
    depth[ROOT] = 0;
    let mut queue = std::collections::VecDeque::from([ROOT]);
    let mut reached = 1;
    while let Some(v) = queue.pop_front() {
        for &c in &children[v] {
            depth[c] = depth[v] + 1;
            reached += 1;
            queue.push_back(c);
        }
    }
    if reached != n {
        let stray = (2..=n).find(|&v| depth[v] == usize::MAX).unwrap();
        return Err(TreeError::Cycle(stray));
    }

    Ok(TreeTopology {
        id_bound: n,
        parent,
        children,
        depth,
        present: {
            let mut p = vec![true; n + 1];
            p[0] = false;
            p
        },
        present_count: n,
    })
}

impl TreeTopology {
    /// Number of nodes currently present.
    pub fn node_count(&self) -> usize {
        self.present_count
    }

    /// Largest id of the original id space (pruning does not shrink it).
    pub fn id_bound(&self) -> usize {
        self.id_bound
    }

    pub fn root(&self) -> NodeId {
        ROOT
    }

    pub fn is_present(&self, node: NodeId) -> bool {
        node >= 1 && node <= self.id_bound && self.present[node]
    }

    /// Present node ids, ascending.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (1..=self.id_bound).filter(|&v| self.present[v])
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.parent.get(node).copied().flatten()
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        &self.children[node]
    }

    pub fn depth(&self, node: NodeId) -> usize {
        self.depth[node]
    }

    pub fn is_leaf(&self, node: NodeId) -> bool {
        self.is_present(node) && self.children[node].is_empty()
    }

    /// Present nodes without present children. Non-empty for any valid tree.
    pub fn leaves(&self) -> BTreeSet<NodeId> {
        self.nodes().filter(|&v| self.children[v].is_empty()).collect()
    }

    fn check_present(&self, node: NodeId) -> Result<(), TreeError> {
        if self.is_present(node) {
            Ok(())
        } else {
            Err(TreeError::UnknownNode(node))
        }
    }

    /// The path `[node, parent(node), .., root]`; length is `depth(node) + 1`.
    pub fn path_to_root(&self, node: NodeId) -> Result<Vec<NodeId>, TreeError> {
        self.check_present(node)?;
        let mut path = Vec::with_capacity(self.depth[node] + 1);
        let mut v = node;
        path.push(v);
        while let Some(p) = self.parent[v] {
            path.push(p);
            v = p;
        }
        Ok(path)
    }

    /// True iff `a` is a proper ancestor of `b`.
    pub fn is_ancestor(&self, a: NodeId, b: NodeId) -> bool {
        if self.depth[a] >= self.depth[b] {
            return false;
        }
        let mut v = b;
        while self.depth[v] > self.depth[a] {
            v = self.parent[v].expect("non-root node has a parent");
        }
        v == a
    }

    /// True iff the root paths of `a` and `b` are independent, i.e. neither
    /// node is an ancestor of the other. `a == b` is never independent.
    pub fn paths_independent(&self, a: NodeId, b: NodeId) -> Result<bool, TreeError> {
        self.check_present(a)?;
        self.check_present(b)?;
        if a == b {
            return Ok(false);
        }
        Ok(!self.is_ancestor(a, b) && !self.is_ancestor(b, a))
    }

    /// Returns a copy with each victim's entire subtree removed. The receiver
    /// is left untouched; deleting the root is an error, as is naming a node
    /// that is not present.
    pub fn delete_nodes(&self, victims: &BTreeSet<NodeId>) -> Result<TreeTopology, TreeError> {
        if victims.contains(&ROOT) {
            return Err(TreeError::RootDeletion);
        }
        for &v in victims {
            self.check_present(v)?;
        }
        let mut pruned = self.clone();
        let mut stack: Vec<NodeId> = victims.iter().copied().collect();
        while let Some(v) = stack.pop() {
            if !pruned.present[v] {
                continue;
            }
            pruned.present[v] = false;
            pruned.present_count -= 1;
            stack.extend_from_slice(&self.children[v]);
        }
        for v in 1..=pruned.id_bound {
            if pruned.present[v] {
                pruned.children[v].retain(|&c| pruned.present[c]);
            } else {
                pruned.children[v].clear();
            }
        }
        Ok(pruned)
    }
}


#[cfg(test)]
mod tests {
    use super::test_util::{chain3, six_node_tree};
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    #[test]
    fn builds_six_node_sample() {
        let t = six_node_tree();
        assert_eq!(t.node_count(), 6);
        assert_eq!(t.leaves(), BTreeSet::from([3, 4, 5, 6]));
        assert_eq!(t.depth(4), 2);
        assert_eq!(t.children(1), &[2, 3]);
        assert_eq!(t.children(2), &[4, 5, 6]);
    }

    #[test]
    fn builds_single_node_tree() {
        let t = build_tree(&BTreeMap::new(), 1).unwrap();
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.leaves(), BTreeSet::from([1]));
        assert_eq!(t.path_to_root(1).unwrap(), vec![1]);
    }

    #[test]
    fn rejects_cycle() {
        let parents = BTreeMap::from([(2, 3), (3, 2)]);
        assert!(matches!(build_tree(&parents, 3), Err(TreeError::Cycle(_))));
    }

    #[test]
    fn rejects_orphan_and_bad_ids() {
        assert_eq!(
            build_tree(&BTreeMap::from([(3, 1)]), 3),
            Err(TreeError::OrphanNode(2))
        );
        assert_eq!(
            build_tree(&BTreeMap::from([(2, 1), (3, 1), (4, 1)]), 3),
            Err(TreeError::IdOutOfRange(4, 3))
        );
        assert_eq!(
            build_tree(&BTreeMap::from([(2, 5)]), 2),
            Err(TreeError::IdOutOfRange(5, 2))
        );
        assert_eq!(build_tree(&BTreeMap::new(), 0), Err(TreeError::EmptyTree));
    }

    #[test]
    fn path_to_root_walks_parents() {
        let t = six_node_tree();
        assert_eq!(t.path_to_root(5).unwrap(), vec![5, 2, 1]);
        assert_eq!(t.path_to_root(1).unwrap(), vec![1]);
        let chain = chain3();
        assert_eq!(chain.path_to_root(3).unwrap(), vec![3, 2, 1]);
        assert_eq!(t.path_to_root(9), Err(TreeError::UnknownNode(9)));
    }

    #[test]
    fn leaves_of_chain() {
        assert_eq!(chain3().leaves(), BTreeSet::from([3]));
    }

    #[test]
    fn independence_of_root_paths() {
        let t = six_node_tree();
        assert!(t.paths_independent(4, 5).unwrap());
        assert!(!t.paths_independent(2, 5).unwrap());
        for v in 2..=6 {
            assert!(!t.paths_independent(1, v).unwrap());
        }
        assert!(!t.paths_independent(4, 4).unwrap());
    }

    #[test]
    fn delete_prunes_subtrees_and_preserves_input() {
        let t = six_node_tree();
        let pruned = t.delete_nodes(&BTreeSet::from([3, 5])).unwrap();
        assert_eq!(pruned.nodes().collect::<Vec<_>>(), vec![1, 2, 4, 6]);
        assert_eq!(pruned.leaves(), BTreeSet::from([4, 6]));
        // The original is untouched.
        assert_eq!(t.node_count(), 6);
        assert_eq!(t.leaves(), BTreeSet::from([3, 4, 5, 6]));

        let whole_branch = t.delete_nodes(&BTreeSet::from([2])).unwrap();
        assert_eq!(whole_branch.nodes().collect::<Vec<_>>(), vec![1, 3]);

        let same = t.delete_nodes(&BTreeSet::new()).unwrap();
        assert_eq!(same, t);

        assert_eq!(
            t.delete_nodes(&BTreeSet::from([1])),
            Err(TreeError::RootDeletion)
        );
        assert_eq!(
            t.delete_nodes(&BTreeSet::from([9])),
            Err(TreeError::UnknownNode(9))
        );
    }

    #[test]
    fn depths_survive_pruning() {
        let t = six_node_tree();
        let pruned = t.delete_nodes(&BTreeSet::from([3, 5])).unwrap();
        assert_eq!(pruned.depth(4), 2);
        assert_eq!(pruned.parent(4), Some(2));
    }

    /// Random parent-link vectors where node v's parent is drawn from 1..v.
    fn arb_tree(max_n: usize) -> impl Strategy<Value = TreeTopology> {
        (1..=max_n)
            .prop_flat_map(|n| {
                proptest::collection::vec(0.0f64..1.0, n.saturating_sub(1)).prop_map(move |us| {
                    let parents: BTreeMap<NodeId, NodeId> = (2..=n)
                        .zip(us)
                        .map(|(v, u)| (v, 1 + (u * (v - 1) as f64) as NodeId))
                        .collect();
                    build_tree(&parents, n).unwrap()
                })
            })
            .no_shrink()
    }

    proptest! {
        #[test]
        fn independence_matches_path_membership(t in arb_tree(24)) {
            let nodes: Vec<NodeId> = t.nodes().collect();
            for &a in &nodes {
                for &b in &nodes {
                    if a == b { continue; }
                    let pa = t.path_to_root(a).unwrap();
                    let pb = t.path_to_root(b).unwrap();
                    let expected = !pa.contains(&b) && !pb.contains(&a);
                    prop_assert_eq!(t.paths_independent(a, b).unwrap(), expected);
                }
            }
        }

        #[test]
        fn pruning_never_mutates_input(t in arb_tree(24)) {
            let copy = t.clone();
            let victims: BTreeSet<NodeId> = t.nodes().filter(|&v| v != ROOT && v % 3 == 0).collect();
            let _ = t.delete_nodes(&victims).unwrap();
            prop_assert_eq!(t, copy);
        }
    }
}
