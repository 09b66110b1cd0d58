//! Python bindings for the tree-matching solvers.
//!
//! Exposes instances, the four solvers, the random generator and the CNF
//! gadget transforms as an in-process extension module:
//!
//!     import mwtm_py
//!     inst = mwtm_py.generate(nodes=32, degree=2.0, ratio=0.25,
//!                             dist="random", seed=7)
//!     best = mwtm_py.solve(inst, "ilp")
//!     quick = mwtm_py.solve(inst, "boa")
//!     assert quick.objective <= best.objective

use std::collections::BTreeMap;
use std::time::Duration;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use mwtm::boa::{bottom_up_assignment, BoaError};
use mwtm::exact::{solve_brute_force, solve_ilp_with, ExactStatus, IlpConfig};
use mwtm::gen::{generate_instance, GenParams};
use mwtm::instance::Assignment;
use mwtm::lp::{build_lp_relaxation, solve_lp};
use mwtm::reduction::{
    decode_truth_assignment, e3sat_to_mwtm, maxe3sat_to_mwtm, parse_dimacs, threesat_to_e3sat,
    CnfFlavor, ReductionMeta,
};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A problem instance: a rooted tree plus an n x m weight matrix.
#[pyclass(name = "Instance", module = "mwtm_py", skip_from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: mwtm::Instance,
}

#[pymethods]
impl PyInstance {
    /// Build from parent links (node -> parent, for every node but root 1)
    /// and a row-per-node weight matrix.
    #[new]
    fn new(
        n: usize,
        m: usize,
        parents: BTreeMap<usize, usize>,
        weights: Vec<Vec<f64>>,
    ) -> PyResult<Self> {
        let tree = mwtm::build_tree(&parents, n).map_err(value_err)?;
        let inner = mwtm::Instance::new(tree, m, weights).map_err(value_err)?;
        Ok(PyInstance { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyInstance { inner: mwtm::Instance::from_json(text).map_err(value_err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn task_count(&self) -> usize {
        self.inner.task_count()
    }

    fn leaves(&self) -> Vec<usize> {
        self.inner.tree().leaves().into_iter().collect()
    }

    fn parent(&self, node: usize) -> Option<usize> {
        self.inner.tree().parent(node)
    }

    fn weight(&self, node: usize, task: usize) -> PyResult<f64> {
        if node < 1 || node > self.inner.node_count() {
            return Err(value_err(format!("unknown node {node}")));
        }
        if task < 1 || task > self.inner.task_count() {
            return Err(value_err(format!("unknown task {task}")));
        }
        Ok(self.inner.weight(node, task))
    }

    /// True iff the leaf supply covers the tasks.
    fn is_feasible(&self) -> bool {
        self.inner.check_feasibility()
    }

    /// Violation descriptions for a `(node, task)` pair list; empty when the
    /// assignment is a complete, hierarchy-respecting matching.
    fn validate(&self, pairs: Vec<(usize, usize)>) -> Vec<String> {
        let report = self.inner.validate_assignment(&Assignment::from_pairs(pairs));
        report.violations.iter().map(|v| format!("{:?}: {}", v.kind, v.detail)).collect()
    }

    fn assignment_weight(&self, pairs: Vec<(usize, usize)>) -> PyResult<f64> {
        self.inner.assignment_weight(&Assignment::from_pairs(pairs)).map_err(value_err)
    }

    /// The root LP relaxation in LP text format, for external cross-checks.
    fn lp_text(&self) -> PyResult<String> {
        let model = build_lp_relaxation(&self.inner, &Assignment::new()).map_err(value_err)?;
        Ok(model.to_lp_format())
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(nodes={}, tasks={}, feasible={})",
            self.inner.node_count(),
            self.inner.task_count(),
            self.inner.check_feasibility()
        )
    }
}

#[pyclass(name = "SolveResult", module = "mwtm_py")]
struct PySolveResult {
    /// "optimal", "infeasible" or "node_limit".
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    objective: Option<f64>,
    /// `(node, task)` pairs, absent for infeasible runs and LP relaxations.
    #[pyo3(get)]
    assignment: Option<Vec<(usize, usize)>>,
    /// LP invocations made by the heuristic.
    #[pyo3(get)]
    lp_calls: Option<u32>,
}

#[pymethods]
impl PySolveResult {
    fn __repr__(&self) -> String {
        format!(
            "SolveResult(status={:?}, objective={:?}, lp_calls={:?})",
            self.status, self.objective, self.lp_calls
        )
    }
}

fn pairs_of(assignment: &Assignment) -> Vec<(usize, usize)> {
    assignment.iter().copied().collect()
}

/// Solve with one of "boa", "ilp", "lp" or "brute". `timeout` (seconds)
/// caps the exact solver's wall clock.
#[pyfunction]
#[pyo3(signature = (instance, method, timeout=None))]
fn solve(instance: &PyInstance, method: &str, timeout: Option<f64>) -> PyResult<PySolveResult> {
    let inner = &instance.inner;
    let infeasible = || PySolveResult {
        status: "infeasible".into(),
        objective: None,
        assignment: None,
        lp_calls: None,
    };
    match method {
        "boa" => match bottom_up_assignment(inner) {
            Ok(r) => Ok(PySolveResult {
                status: "optimal".into(),
                objective: Some(r.objective),
                assignment: Some(pairs_of(&r.assignment)),
                lp_calls: Some(r.lp_calls),
            }),
            Err(BoaError::Infeasible { .. }) => Ok(infeasible()),
            Err(e) => Err(value_err(e)),
        },
        "ilp" => {
            let mut config = IlpConfig::default();
            if let Some(secs) = timeout {
                config.time_limit = Some(Duration::from_secs_f64(secs));
            }
            let r = solve_ilp_with(inner, &config).map_err(value_err)?;
            Ok(match r.status {
                ExactStatus::Infeasible => infeasible(),
                ExactStatus::Optimal | ExactStatus::NodeLimit => PySolveResult {
                    status: if r.status == ExactStatus::Optimal {
                        "optimal".into()
                    } else {
                        "node_limit".into()
                    },
                    objective: Some(r.objective),
                    assignment: Some(pairs_of(&r.assignment)),
                    lp_calls: None,
                },
            })
        }
        "brute" => {
            let r = solve_brute_force(inner).map_err(value_err)?;
            Ok(match r.status {
                ExactStatus::Optimal => PySolveResult {
                    status: "optimal".into(),
                    objective: Some(r.objective),
                    assignment: Some(pairs_of(&r.assignment)),
                    lp_calls: None,
                },
                _ => infeasible(),
            })
        }
        "lp" => {
            let model = build_lp_relaxation(inner, &Assignment::new()).map_err(value_err)?;
            let sol = solve_lp(&model).map_err(value_err)?;
            Ok(if sol.is_optimal() {
                PySolveResult {
                    status: "optimal".into(),
                    objective: Some(sol.objective),
                    assignment: None,
                    lp_calls: None,
                }
            } else {
                infeasible()
            })
        }
        other => Err(value_err(format!("unknown method {other:?}"))),
    }
}

/// Generate a seeded random instance; `dist` is "increasing", "decreasing"
/// or "random". The result may be infeasible, check `is_feasible()`.
#[pyfunction]
#[pyo3(signature = (nodes, degree, ratio, dist, seed=0))]
fn generate(nodes: usize, degree: f64, ratio: f64, dist: &str, seed: u64) -> PyResult<PyInstance> {
    let params = GenParams {
        node_count: nodes,
        avg_degree: degree,
        task_ratio: ratio,
        weight_dist: dist.parse().map_err(value_err)?,
        seed,
    };
    let generated = generate_instance(&params).map_err(value_err)?;
    Ok(PyInstance { inner: generated.instance })
}

/// Transform a DIMACS CNF into a matching instance. Returns the instance and
/// the decoding metadata as a JSON string. `pad` fills short clauses first;
/// `max_variant` builds the max-satisfiability gadget.
#[pyfunction]
#[pyo3(signature = (dimacs, pad=false, max_variant=false))]
fn reduce_cnf(dimacs: &str, pad: bool, max_variant: bool) -> PyResult<(PyInstance, String)> {
    let formula = parse_dimacs(dimacs).map_err(value_err)?;
    let formula = if pad && formula.flavor() == CnfFlavor::AtMostThree {
        threesat_to_e3sat(&formula).map_err(value_err)?
    } else {
        formula
    };
    let (instance, meta) = if max_variant {
        maxe3sat_to_mwtm(&formula).map_err(value_err)?
    } else {
        e3sat_to_mwtm(&formula).map_err(value_err)?
    };
    Ok((PyInstance { inner: instance }, meta.to_json()))
}

/// Decode an optimal assignment on a reduced instance back into a truth
/// vector, using the metadata JSON emitted by `reduce_cnf`.
#[pyfunction]
fn decode_assignment(meta_json: &str, pairs: Vec<(usize, usize)>) -> PyResult<Vec<bool>> {
    let meta = ReductionMeta::from_json(meta_json).map_err(value_err)?;
    decode_truth_assignment(&meta, &Assignment::from_pairs(pairs)).map_err(value_err)
}

#[pymodule]
fn mwtm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PySolveResult>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_cnf, m)?)?;
    m.add_function(wrap_pyfunction!(decode_assignment, m)?)?;
    Ok(())
}
