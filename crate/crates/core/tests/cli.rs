//! End-to-end tests of the `mwtm` binary: exit codes, file artifacts and
//! golden behavior of every subcommand.

mod common;

use std::path::Path;
use std::process::Output;

use common::{chain3_two_tasks, six_node_instance, EXAMPLE_DIMACS};
use mwtm::Instance;

fn mwtm_bin(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_mwtm"));
    cmd.current_dir(dir).args(args).env_remove("MWTM_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout_value(output: &Output) -> f64 {
    String::from_utf8_lossy(&output.stdout).trim().parse().unwrap_or_else(|_| {
        panic!("stdout is not a number: {:?}", String::from_utf8_lossy(&output.stdout))
    })
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn gen_is_deterministic_and_seed_env_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str, seed: &str, envs: &[(&str, &str)]| {
        let output = mwtm_bin(
            dir.path(),
            &[
                "gen", "--nodes", "16", "--degree", "2.0", "--ratio", "0.25", "--dist", "random",
                "--seed", seed, "--out", out,
            ],
            envs,
        );
        assert_eq!(exit_code(&output), 0, "{output:?}");
        std::fs::read_to_string(dir.path().join(out)).unwrap()
    };
    let a = run("a.json", "7", &[]);
    let b = run("b.json", "7", &[]);
    let c = run("c.json", "8", &[]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    // The environment variable wins over the flag.
    let d = run("d.json", "7", &[("MWTM_SEED", "8")]);
    assert_eq!(d, c);
    // The artifact parses back into a valid instance.
    let inst = Instance::from_json(&a).unwrap();
    assert_eq!(inst.node_count(), 16);
    assert_eq!(inst.task_count(), 4);
}

#[test]
fn solve_reports_each_method_on_the_sample() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("fig.json"), six_node_instance().to_json()).unwrap();

    let boa = mwtm_bin(
        dir.path(),
        &["solve", "--method", "boa", "--input", "fig.json", "--out", "boa.json"],
        &[],
    );
    assert_eq!(exit_code(&boa), 0);
    assert_eq!(stdout_value(&boa), 16.0);
    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("boa.json")).unwrap())
            .unwrap();
    assert_eq!(result["status"], "optimal");
    assert_eq!(result["lp_calls"], 2);
    assert_eq!(result["assignment"].as_array().unwrap().len(), 3);

    let ilp = mwtm_bin(dir.path(), &["solve", "--method", "ilp", "--input", "fig.json"], &[]);
    assert_eq!(stdout_value(&ilp), 18.0);

    let brute = mwtm_bin(dir.path(), &["solve", "--method", "brute", "--input", "fig.json"], &[]);
    assert_eq!(stdout_value(&brute), 18.0);

    let lp = mwtm_bin(dir.path(), &["solve", "--method", "lp", "--input", "fig.json"], &[]);
    assert!((stdout_value(&lp) - 19.0).abs() < 1e-6);
}

#[test]
fn identical_inputs_give_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("fig.json"), six_node_instance().to_json()).unwrap();
    for name in ["r1.json", "r2.json"] {
        let out = mwtm_bin(
            dir.path(),
            &["solve", "--method", "ilp", "--input", "fig.json", "--out", name],
            &[],
        );
        assert_eq!(exit_code(&out), 0);
    }
    let r1 = std::fs::read_to_string(dir.path().join("r1.json")).unwrap();
    let r2 = std::fs::read_to_string(dir.path().join("r2.json")).unwrap();
    assert_eq!(r1, r2);
}

#[test]
fn infeasible_instances_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("chain.json"), chain3_two_tasks().to_json()).unwrap();
    for method in ["boa", "ilp", "brute", "lp"] {
        let out = mwtm_bin(
            dir.path(),
            &["solve", "--method", method, "--input", "chain.json", "--out", "r.json"],
            &[],
        );
        assert_eq!(exit_code(&out), 2, "method {method}");
    }
    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap())
            .unwrap();
    assert_eq!(result["status"], "infeasible");
    assert!(result["objective"].is_null());
}

#[test]
fn bad_inputs_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("junk.json"), "{not json").unwrap();
    let out = mwtm_bin(dir.path(), &["solve", "--method", "boa", "--input", "junk.json"], &[]);
    assert_eq!(exit_code(&out), 1);
    let missing = mwtm_bin(dir.path(), &["solve", "--method", "boa", "--input", "nope.json"], &[]);
    assert_eq!(exit_code(&missing), 1);
    // Nonzero root weights are a contract violation, not a crash.
    let mut weights = vec![vec![1.0, 1.0]; 3];
    weights[0][0] = 5.0;
    let parents = std::collections::BTreeMap::from([(2, 1), (3, 1)]);
    let bad = Instance::new(mwtm::build_tree(&parents, 3).unwrap(), 2, weights).unwrap();
    std::fs::write(dir.path().join("badroot.json"), bad.to_json()).unwrap();
    let out = mwtm_bin(dir.path(), &["solve", "--method", "ilp", "--input", "badroot.json"], &[]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn usage_errors_exit_with_code_sixty_four() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = mwtm_bin(dir.path(), &["solve", "--bogus"], &[]);
    assert_eq!(exit_code(&unknown), 64);
    let missing_flag = mwtm_bin(dir.path(), &["gen", "--nodes", "8"], &[]);
    assert_eq!(exit_code(&missing_flag), 64);
    let help = mwtm_bin(dir.path(), &["--help"], &[]);
    assert_eq!(exit_code(&help), 0);
}

#[test]
fn reduce_solve_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ex.cnf"), EXAMPLE_DIMACS).unwrap();
    let reduce = mwtm_bin(
        dir.path(),
        &["reduce", "--cnf", "ex.cnf", "--out", "inst.json", "--meta", "meta.json"],
        &[],
    );
    assert_eq!(exit_code(&reduce), 0, "{reduce:?}");
    let inst =
        Instance::from_json(&std::fs::read_to_string(dir.path().join("inst.json")).unwrap())
            .unwrap();
    assert_eq!(inst.node_count(), 18);
    assert_eq!(inst.task_count(), 7);

    let solve = mwtm_bin(
        dir.path(),
        &["solve", "--method", "ilp", "--input", "inst.json", "--out", "result.json"],
        &[],
    );
    assert_eq!(stdout_value(&solve), 7.0);

    let decode = mwtm_bin(
        dir.path(),
        &["reduce", "--decode", "result.json", "--meta", "meta.json", "--cnf", "ex.cnf"],
        &[],
    );
    assert_eq!(exit_code(&decode), 0, "{decode:?}");
    let truth: Vec<bool> =
        serde_json::from_str(String::from_utf8_lossy(&decode.stdout).trim()).unwrap();
    assert_eq!(truth.len(), 4);
    let stderr = String::from_utf8_lossy(&decode.stderr);
    assert!(stderr.contains("satisfies 3/3"), "stderr: {stderr}");
}

#[test]
fn reduce_requires_pad_for_short_clauses() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("short.cnf"), "p cnf 2 2\n1 0\n-1 2 0\n").unwrap();
    let plain = mwtm_bin(
        dir.path(),
        &["reduce", "--cnf", "short.cnf", "--out", "i.json", "--meta", "m.json"],
        &[],
    );
    assert_eq!(exit_code(&plain), 2);
    let padded = mwtm_bin(
        dir.path(),
        &["reduce", "--cnf", "short.cnf", "--out", "i.json", "--meta", "m.json", "--pad"],
        &[],
    );
    assert_eq!(exit_code(&padded), 0);
    let inst =
        Instance::from_json(&std::fs::read_to_string(dir.path().join("i.json")).unwrap()).unwrap();
    // (2 + 3) variables and (2 + 7) clauses after padding.
    assert_eq!(inst.task_count(), 14);

    std::fs::write(dir.path().join("wide.cnf"), "p cnf 4 1\n1 2 3 4 0\n").unwrap();
    let wide = mwtm_bin(
        dir.path(),
        &["reduce", "--cnf", "wide.cnf", "--out", "i.json", "--meta", "m.json", "--pad"],
        &[],
    );
    assert_eq!(exit_code(&wide), 1);
}

#[test]
fn solve_can_dump_the_relaxation() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("fig.json"), six_node_instance().to_json()).unwrap();
    let out = mwtm_bin(
        dir.path(),
        &["solve", "--method", "lp", "--input", "fig.json", "--dump-lp", "model.lp"],
        &[],
    );
    assert_eq!(exit_code(&out), 0);
    let text = std::fs::read_to_string(dir.path().join("model.lp")).unwrap();
    assert!(text.contains("Maximize"));
    assert!(text.contains("task_1:"));
}

#[test]
fn bench_writes_a_loadable_report() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str| {
        let output = mwtm_bin(
            dir.path(),
            &[
                "bench", "--grid", "mini", "--trials", "1", "--methods", "boa", "--timeout",
                "30", "--seed", "5", "--out", out,
            ],
            &[],
        );
        assert_eq!(exit_code(&output), 0, "{output:?}");
        std::fs::read_to_string(dir.path().join(out)).unwrap()
    };
    let csv_text = run("report.csv");
    let lines: Vec<&str> = csv_text.lines().collect();
    // 2 sizes x 3 degrees x 3 ratios x 3 dists cells, one method each.
    assert_eq!(lines.len(), 1 + 54);
    assert!(lines[0].starts_with("nodes,avg_degree,task_ratio,weight_dist,method"));

    // Reports are reproducible apart from the runtime column.
    let strip_runtime = |text: &str| {
        text.lines()
            .map(|line| {
                let mut cols: Vec<&str> = line.split(',').collect();
                cols.remove(6);
                cols.join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let again = run("report2.csv");
    assert_eq!(strip_runtime(&csv_text), strip_runtime(&again));

    // Markdown flavor.
    let output = mwtm_bin(
        dir.path(),
        &[
            "bench", "--grid", "mini", "--trials", "1", "--methods", "boa", "--seed", "5",
            "--out", "report.md", "--format", "markdown",
        ],
        &[],
    );
    assert_eq!(exit_code(&output), 0);
    let md = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(md.starts_with("| nodes |"));
}
