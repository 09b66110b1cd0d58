//! Solvers for maximum-weight task assignment in tree hierarchies.
//!
//! Tasks are matched injectively to the nodes of a rooted tree under the
//! hierarchy constraint: no two assigned nodes may lie on one root-to-leaf
//! path. The crate bundles
//!
//! - a data model with feasibility and assignment validation ([`tree`],
//!   [`instance`]),
//! - the LP relaxation of the 0-1 formulation and an in-repo two-phase
//!   simplex ([`lp`]),
//! - exact optima via branch-and-bound plus an enumeration oracle
//!   ([`exact`]),
//! - the bottom-up iterative LP-rounding heuristic ([`boa`]),
//! - satisfiability gadget reductions to and from CNF formulas
//!   ([`reduction`]),
//! - a seeded random instance generator ([`gen`]) and an experiment harness
//!   ([`bench`]).

pub mod bench;
pub mod boa;
pub mod exact;
pub mod gen;
pub mod instance;
pub mod lp;
pub mod reduction;
pub mod tree;

pub use instance::{Assignment, Instance, InstanceError, TaskId, ValidationReport};
pub use tree::{build_tree, NodeId, TreeTopology};
