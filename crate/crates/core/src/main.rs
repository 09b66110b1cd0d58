//! Command-line front end: `gen`, `solve`, `reduce` and `bench` subcommands
//! over the library, wired to JSON instance/result files and CSV reports.
//!
//! Exit codes: 0 success, 1 bad input, 2 infeasible instance (or non-E3
//! input without `--pad`), 3 solver limit hit, 64 usage errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use mwtm::bench::{emit_report, run_grid, summarize, Method, ReportFormat, RunConfig, GridSpec};
use mwtm::boa::{bottom_up_assignment, BoaError};
use mwtm::exact::{solve_brute_force, solve_ilp_with, ExactError, ExactStatus, IlpConfig};
use mwtm::gen::{generate_instance, GenParams, WeightDist};
use mwtm::instance::Assignment;
use mwtm::lp::{build_lp_relaxation, solve_lp};
use mwtm::reduction::{
    decode_truth_assignment, e3sat_to_mwtm, maxe3sat_to_mwtm, parse_dimacs, threesat_to_e3sat,
    CnfFlavor, ReductionMeta,
};
use mwtm::Instance;

const EXIT_BAD_INPUT: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_SOLVER_LIMIT: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "mwtm", version, about = "Solvers for task assignment in tree hierarchies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random instance and write it as JSON.
    Gen {
        /// Number of tree nodes (>= 2).
        #[arg(long)]
        nodes: usize,
        /// Target mean children per internal node.
        #[arg(long)]
        degree: f64,
        /// Tasks as a fraction of nodes, in (0, 1].
        #[arg(long)]
        ratio: f64,
        /// Weight distribution: increasing, decreasing or random.
        #[arg(long)]
        dist: WeightDist,
        /// RNG seed; the MWTM_SEED environment variable overrides it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output instance path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an instance file and write a JSON result.
    Solve {
        /// One of boa, ilp, lp, brute.
        #[arg(long)]
        method: Method,
        /// Instance file produced by `gen`, `reduce` or by hand.
        #[arg(long)]
        input: PathBuf,
        /// Result path; defaults to printing the objective only.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Wall-clock cap in seconds for the exact solver.
        #[arg(long)]
        timeout: Option<u64>,
        /// Branch-and-bound node cap for the exact solver.
        #[arg(long)]
        node_limit: Option<u64>,
        /// Write the root LP relaxation in LP text format to this path.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
        /// Emit one JSON trace line per heuristic iteration on stderr.
        #[arg(long, short)]
        verbose: bool,
    },
    /// Transform a DIMACS CNF into a matching instance, or decode a solved
    /// one back into a truth assignment.
    Reduce {
        /// DIMACS CNF input.
        #[arg(long, required_unless_present = "decode")]
        cnf: Option<PathBuf>,
        /// Output instance path.
        #[arg(long, required_unless_present = "decode")]
        out: Option<PathBuf>,
        /// Sidecar metadata path (written on reduce, read on decode).
        #[arg(long)]
        meta: PathBuf,
        /// Build the max-satisfiability variant of the gadget.
        #[arg(long)]
        max: bool,
        /// Pad at-most-three clauses to exactly three first.
        #[arg(long)]
        pad: bool,
        /// Solve result to decode; prints the truth assignment as JSON.
        #[arg(long)]
        decode: Option<PathBuf>,
    },
    /// Run the benchmark grid and write a CSV or markdown report.
    Bench {
        /// Grid to run: "default" (108 cells) or "mini" (54 cells).
        #[arg(long, default_value = "default")]
        grid: String,
        /// Trials per cell.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Comma-separated methods to compare.
        #[arg(long, value_delimiter = ',', default_values_t = [Method::Boa, Method::Ilp, Method::Lp])]
        methods: Vec<Method>,
        /// Per-solve wall-clock cap in seconds for the exact solver.
        #[arg(long, default_value_t = 60)]
        timeout: u64,
        /// Master seed; the MWTM_SEED environment variable overrides it.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Report output path.
        #[arg(long)]
        out: PathBuf,
        /// Report format: csv or markdown.
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn env_seed_override(seed: u64) -> Result<u64, Failure> {
    match std::env::var("MWTM_SEED") {
        Ok(text) => text
            .parse()
            .map_err(|_| fail(EXIT_BAD_INPUT, format!("MWTM_SEED is not a valid seed: {text:?}"))),
        Err(_) => Ok(seed),
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_BAD_INPUT, format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| fail(EXIT_BAD_INPUT, format!("cannot write {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen { nodes, degree, ratio, dist, seed, out } => {
            let params = GenParams {
                node_count: nodes,
                avg_degree: degree,
                task_ratio: ratio,
                weight_dist: dist,
                seed: env_seed_override(seed)?,
            };
            let generated = generate_instance(&params)
                .map_err(|e| fail(EXIT_BAD_INPUT, e.to_string()))?;
            write_file(&out, &generated.instance.to_json())?;
            println!(
                "wrote {} nodes, {} tasks to {} (feasible: {})",
                generated.instance.node_count(),
                generated.instance.task_count(),
                out.display(),
                generated.feasible
            );
            Ok(())
        }
        Command::Solve { method, input, out, timeout, node_limit, dump_lp, verbose } => {
            let instance = Instance::from_json(&read_file(&input)?)
                .map_err(|e| fail(EXIT_BAD_INPUT, e.to_string()))?;
            if let Some(path) = dump_lp {
                let model = build_lp_relaxation(&instance, &Assignment::new())
                    .map_err(|e| fail(EXIT_BAD_INPUT, e.to_string()))?;
                write_file(&path, &model.to_lp_format())?;
            }
            solve_command(&instance, method, out.as_deref(), timeout, node_limit, verbose)
        }
        Command::Reduce { cnf, out, meta, max, pad, decode } => {
            if let Some(result_path) = decode {
                return decode_command(&meta, &result_path, cnf.as_deref());
            }
            let cnf_path = cnf.expect("clap enforces --cnf without --decode");
            let out_path = out.expect("clap enforces --out without --decode");
            reduce_command(&cnf_path, &out_path, &meta, max, pad)
        }
        Command::Bench { grid, trials, methods, timeout, seed, out, format } => {
            let spec = match grid.as_str() {
                "default" => GridSpec::paper_default(),
                "mini" => GridSpec::mini(),
                other => return Err(fail(EXIT_BAD_INPUT, format!("unknown grid {other:?}"))),
            };
            let config = RunConfig {
                trials,
                methods,
                timeout: Duration::from_secs(timeout),
                master_seed: env_seed_override(seed)?,
            };
            let records = run_grid(&spec, &config);
            let summaries = summarize(&records);
            write_file(&out, &emit_report(&summaries, format))?;
            // Infeasible and timed-out cells are data, not failures.
            println!(
                "wrote {} cells x {} methods to {}",
                summaries.len(),
                config.methods.len(),
                out.display()
            );
            Ok(())
        }
    }
}

fn solve_command(
    instance: &Instance,
    method: Method,
    out: Option<&Path>,
    timeout: Option<u64>,
    node_limit: Option<u64>,
    verbose: bool,
) -> Result<(), Failure> {
    let write_result = |status: &str,
                        objective: Option<f64>,
                        assignment: Option<&Assignment>,
                        lp_calls: Option<u32>|
     -> Result<(), Failure> {
        if let Some(path) = out {
            let value = serde_json::json!({
                "status": status,
                "objective": objective,
                "assignment": assignment,
                "lp_calls": lp_calls,
            });
            write_file(path, &serde_json::to_string_pretty(&value).expect("result serializes"))?;
        }
        if let Some(objective) = objective {
            println!("{objective}");
        } else {
            println!("{status}");
        }
        Ok(())
    };

    match method {
        Method::Boa => match bottom_up_assignment(instance) {
            Ok(result) => {
                if verbose {
                    for trace in &result.iterations {
                        eprintln!("{}", serde_json::to_string(trace).expect("trace serializes"));
                    }
                }
                write_result(
                    "optimal",
                    Some(result.objective),
                    Some(&result.assignment),
                    Some(result.lp_calls),
                )
            }
            Err(BoaError::Infeasible { .. }) => {
                write_result("infeasible", None, None, None)?;
                Err(fail(EXIT_INFEASIBLE, "instance has fewer leaves than tasks"))
            }
            Err(e @ (BoaError::Instance(_) | BoaError::Tree(_))) => {
                Err(fail(EXIT_BAD_INPUT, e.to_string()))
            }
            Err(e) => Err(fail(EXIT_SOLVER_LIMIT, e.to_string())),
        },
        Method::Ilp => {
            let mut config = IlpConfig::default();
            if let Some(secs) = timeout {
                config.time_limit = Some(Duration::from_secs(secs));
            }
            if let Some(limit) = node_limit {
                config.node_limit = limit;
            }
            match solve_ilp_with(instance, &config) {
                Ok(result) => match result.status {
                    ExactStatus::Optimal => write_result(
                        "optimal",
                        Some(result.objective),
                        Some(&result.assignment),
                        None,
                    ),
                    ExactStatus::Infeasible => {
                        write_result("infeasible", None, None, None)?;
                        Err(fail(EXIT_INFEASIBLE, "instance has fewer leaves than tasks"))
                    }
                    ExactStatus::NodeLimit => {
                        write_result(
                            "node_limit",
                            Some(result.objective),
                            Some(&result.assignment),
                            None,
                        )?;
                        Err(fail(EXIT_SOLVER_LIMIT, "exact solver hit its node or time limit"))
                    }
                },
                Err(e @ ExactError::Instance(_)) => Err(fail(EXIT_BAD_INPUT, e.to_string())),
                Err(e) => Err(fail(EXIT_SOLVER_LIMIT, e.to_string())),
            }
        }
        Method::Brute => match solve_brute_force(instance) {
            Ok(result) => match result.status {
                ExactStatus::Optimal => {
                    write_result("optimal", Some(result.objective), Some(&result.assignment), None)
                }
                _ => {
                    write_result("infeasible", None, None, None)?;
                    Err(fail(EXIT_INFEASIBLE, "no feasible assignment exists"))
                }
            },
            Err(e @ ExactError::BudgetExceeded { .. }) => {
                Err(fail(EXIT_SOLVER_LIMIT, e.to_string()))
            }
            Err(e) => Err(fail(EXIT_BAD_INPUT, e.to_string())),
        },
        Method::Lp => {
            let model = build_lp_relaxation(instance, &Assignment::new())
                .map_err(|e| fail(EXIT_BAD_INPUT, e.to_string()))?;
            match solve_lp(&model) {
                Ok(solution) if solution.is_optimal() => {
                    write_result("optimal", Some(solution.objective), None, None)
                }
                Ok(_) => {
                    write_result("infeasible", None, None, None)?;
                    Err(fail(EXIT_INFEASIBLE, "relaxation is infeasible"))
                }
                Err(e) => Err(fail(EXIT_SOLVER_LIMIT, e.to_string())),
            }
        }
    }
}

fn reduce_command(
    cnf_path: &Path,
    out_path: &Path,
    meta_path: &Path,
    max: bool,
    pad: bool,
) -> Result<(), Failure> {
    let formula = parse_dimacs(&read_file(cnf_path)?)
        .map_err(|e| fail(EXIT_BAD_INPUT, e.to_string()))?;
    let formula = match formula.flavor() {
        CnfFlavor::ExactlyThree => formula,
        CnfFlavor::AtMostThree if pad => {
            threesat_to_e3sat(&formula).map_err(|e| fail(EXIT_BAD_INPUT, e.to_string()))?
        }
        CnfFlavor::AtMostThree => {
            return Err(fail(
                EXIT_INFEASIBLE,
                "formula has clauses with fewer than three literals; rerun with --pad",
            ))
        }
        CnfFlavor::General => {
            return Err(fail(EXIT_BAD_INPUT, "formula has clauses wider than three literals"))
        }
    };
    let (instance, meta) = if max {
        maxe3sat_to_mwtm(&formula).map_err(|e| fail(EXIT_BAD_INPUT, e.to_string()))?
    } else {
        e3sat_to_mwtm(&formula).map_err(|e| fail(EXIT_BAD_INPUT, e.to_string()))?
    };
    write_file(out_path, &instance.to_json())?;
    write_file(meta_path, &meta.to_json())?;
    println!(
        "wrote {} nodes, {} tasks to {} (meta: {})",
        instance.node_count(),
        instance.task_count(),
        out_path.display(),
        meta_path.display()
    );
    Ok(())
}

fn decode_command(
    meta_path: &Path,
    result_path: &Path,
    cnf_path: Option<&Path>,
) -> Result<(), Failure> {
    let meta = ReductionMeta::from_json(&read_file(meta_path)?)
        .map_err(|e| fail(EXIT_BAD_INPUT, e.to_string()))?;
    let text = read_file(result_path)?;
    // Accept either a solve result object or a bare pair array.
    let assignment: Assignment = serde_json::from_str::<serde_json::Value>(&text)
        .ok()
        .and_then(|value| {
            let pairs = if value.is_array() { value } else { value.get("assignment")?.clone() };
            serde_json::from_value(pairs).ok()
        })
        .ok_or_else(|| {
            fail(EXIT_BAD_INPUT, format!("{} holds no assignment", result_path.display()))
        })?;
    let truth = decode_truth_assignment(&meta, &assignment)
        .map_err(|e| fail(EXIT_BAD_INPUT, e.to_string()))?;
    println!("{}", serde_json::to_string(&truth).expect("truth vector serializes"));
    if let Some(cnf_path) = cnf_path {
        let formula = parse_dimacs(&read_file(cnf_path)?)
            .map_err(|e| fail(EXIT_BAD_INPUT, e.to_string()))?;
        let satisfied = formula.satisfied_count(&truth);
        eprintln!("satisfies {satisfied}/{} clauses", formula.clause_count());
        if !meta.max_variant && satisfied != formula.clause_count() {
            return Err(fail(
                EXIT_BAD_INPUT,
                "decoded assignment does not satisfy the formula; result and CNF do not match",
            ));
        }
    }
    Ok(())
}
