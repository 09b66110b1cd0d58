//! Seeded random instance generation.
//!
//! Trees grow breadth-first: each frontier node either becomes a leaf or
//! draws a truncated shifted-geometric child count whose conditional mean is
//! the requested branching factor, so the realized mean children per internal
//! node lands near the target; generation retries a few times and keeps the
//! closest attempt. Weights are integers in `[1..n/2]`, banded by depth for
//! the increasing/decreasing distributions. Everything is a pure function of
//! the seed.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::Instance;
use crate::tree::{build_tree, NodeId, TreeTopology};

/// Probability that a frontier node stays a leaf.
const LEAF_PROB: f64 = 0.25;
/// Child counts are clamped to this many.
const MAX_CHILDREN: usize = 6;
/// Acceptable distance between realized and requested branching factor.
const BRANCH_TOL: f64 = 0.3;
/// Regeneration attempts before settling for the closest tree.
const MAX_ATTEMPTS: usize = 50;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightDist {
    /// Weights grow from the root towards the leaves.
    Increasing,
    /// Weights shrink from the root towards the leaves.
    Decreasing,
    /// Weights are uniform regardless of depth.
    Random,
}

impl std::str::FromStr for WeightDist {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "increasing" => Ok(WeightDist::Increasing),
            "decreasing" => Ok(WeightDist::Decreasing),
            "random" => Ok(WeightDist::Random),
            other => Err(format!("unknown weight distribution {other:?}")),
        }
    }
}

impl std::fmt::Display for WeightDist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WeightDist::Increasing => "increasing",
            WeightDist::Decreasing => "decreasing",
            WeightDist::Random => "random",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub node_count: usize,
    pub avg_degree: f64,
    pub task_ratio: f64,
    pub weight_dist: WeightDist,
    pub seed: u64,
}

impl GenParams {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.node_count < 2 {
            return Err(GenError::InvalidParams(format!(
                "node count {} below 2",
                self.node_count
            )));
        }
        if !(self.avg_degree >= 1.0 && self.avg_degree.is_finite()) {
            return Err(GenError::InvalidParams(format!(
                "average degree {} below 1",
                self.avg_degree
            )));
        }
        if !(self.task_ratio > 0.0 && self.task_ratio <= 1.0) {
            return Err(GenError::InvalidParams(format!(
                "task ratio {} outside (0, 1]",
                self.task_ratio
            )));
        }
        Ok(())
    }

    /// `max(1, round(task_ratio * node_count))`.
    pub fn task_count(&self) -> usize {
        ((self.task_ratio * self.node_count as f64).round() as usize).max(1)
    }

    /// Upper end of the weight range, `max(1, node_count / 2)`.
    pub fn weight_cap(&self) -> u64 {
        ((self.node_count / 2) as u64).max(1)
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub instance: Instance,
    /// Whether the leaf supply covers the tasks; infeasible draws are
    /// returned as-is so harnesses can count them.
    pub feasible: bool,
}

fn grow_once(n: usize, avg_degree: f64, rng: &mut impl Rng) -> BTreeMap<NodeId, NodeId> {
    let continue_prob = 1.0 - 1.0 / avg_degree;
    let mut parents = BTreeMap::new();
    let mut depth = vec![0usize; n + 1];
    let mut has_children = vec![false; n + 1];
    let mut queue: VecDeque<NodeId> = VecDeque::from([1]);
    let mut total = 1usize;
    while total < n {
        let Some(v) = queue.pop_front() else {
            // Every frontier node went leaf; force one child on the deepest
            // leaf so growth always reaches n nodes.
            let leaf = (1..=total)
                .filter(|&v| !has_children[v])
                .max_by_key(|&v| (depth[v], std::cmp::Reverse(v)))
                .expect("a tree always has a leaf");
            let child = total + 1;
            parents.insert(child, leaf);
            depth[child] = depth[leaf] + 1;
            has_children[leaf] = true;
            total += 1;
            queue.push_back(child);
            continue;
        };
        if rng.random::<f64>() < LEAF_PROB {
            continue;
        }
        let mut k = 1usize;
        while k < MAX_CHILDREN && rng.random::<f64>() < continue_prob {
            k += 1;
        }
        let k = k.min(n - total);
        for _ in 0..k {
            let child = total + 1;
            parents.insert(child, v);
            depth[child] = depth[v] + 1;
            total += 1;
            queue.push_back(child);
        }
        has_children[v] = true;
    }
    parents
}

fn realized_branching(parents: &BTreeMap<NodeId, NodeId>, n: usize) -> f64 {
    let internal: BTreeSet<NodeId> = parents.values().copied().collect();
    (n - 1) as f64 / internal.len() as f64
}

/// Grows a tree with exactly `n >= 2` nodes, ids assigned in creation
/// (level) order, targeting `avg_degree` children per internal node within
/// [`BRANCH_TOL`]; best-effort after [`MAX_ATTEMPTS`] regenerations.
pub fn generate_tree(n: usize, avg_degree: f64, rng: &mut impl Rng) -> TreeTopology {
    assert!(n >= 2, "generator needs at least two nodes");
    assert!(avg_degree >= 1.0, "branching factor below 1 cannot grow a tree");
    let mut best: Option<(f64, BTreeMap<NodeId, NodeId>)> = None;
    for _ in 0..MAX_ATTEMPTS {
        let parents = grow_once(n, avg_degree, rng);
        let err = (realized_branching(&parents, n) - avg_degree).abs();
        let improved = best.as_ref().is_none_or(|(e, _)| err < *e);
        if improved {
            best = Some((err, parents));
        }
        if best.as_ref().unwrap().0 <= BRANCH_TOL {
            break;
        }
    }
    build_tree(&best.expect("at least one attempt").1, n).expect("grown links form a tree")
}

fn depth_band(band: usize, bands: usize, cap: u64) -> (u64, u64) {
    let lo = (band as u64 - 1) * cap / bands as u64 + 1;
    let hi = (band as u64 * cap / bands as u64).max(lo);
    (lo, hi)
}

/// Integer weights in `[1..cap]` for every non-root node and task; the root
/// row is zero. Increasing/decreasing distributions split the range into one
/// band per depth level and draw from the band of the node's depth.
pub fn generate_weights(
    tree: &TreeTopology,
    task_count: usize,
    dist: WeightDist,
    rng: &mut impl Rng,
) -> Vec<Vec<f64>> {
    let n = tree.id_bound();
    let cap = ((n / 2) as u64).max(1);
    let max_depth = tree.nodes().map(|v| tree.depth(v)).max().unwrap_or(0).max(1);
    let mut weights = vec![vec![0.0; task_count]; n];
    for node in tree.nodes().filter(|&v| v != tree.root()) {
        let (lo, hi) = match dist {
            WeightDist::Random => (1, cap),
            WeightDist::Increasing => depth_band(tree.depth(node), max_depth, cap),
            WeightDist::Decreasing => depth_band(max_depth + 1 - tree.depth(node), max_depth, cap),
        };
        for slot in weights[node - 1].iter_mut() {
            *slot = rng.random_range(lo..=hi) as f64;
        }
    }
    weights
}

/// Composes a full instance from the parameters. Identical parameters
/// (including the seed) yield a bit-identical instance.
pub fn generate_instance(params: &GenParams) -> Result<GeneratedInstance, GenError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let tree = generate_tree(params.node_count, params.avg_degree, &mut rng);
    let m = params.task_count();
    let weights = generate_weights(&tree, m, params.weight_dist, &mut rng);
    let instance = Instance::new(tree, m, weights).expect("generated instance is well-formed");
    let feasible = instance.check_feasibility();
    Ok(GeneratedInstance { instance, feasible })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed stream: mixing instead of offsetting keeps trials
/// independent, so reordering them never changes any single instance.
pub fn derive_seed(master: u64, cell: u64, trial: u64) -> u64 {
    let mut s = splitmix64(master);
    s = splitmix64(s ^ cell);
    splitmix64(s ^ trial)
}
