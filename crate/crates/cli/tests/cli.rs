use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use seqdisc::povm::PovmDocument;
use seqdisc::search::ScanRow;

fn seqdisc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqdisc"))
        .args(args)
        .env_remove("SEQDISC_THREADS")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = seqdisc(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("missing {key} in {v}"))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn negative_trine_bound_halves_every_two_copies() {
    let v = json(&["bounds", "--task", "zero-error", "--r", "3", "--c", "-0.5", "--n", "3"]);
    assert_eq!(v["schema_version"], 1);
    assert!((num(&v, "inconclusive") - 0.25).abs() < 1e-12);
    assert_eq!(v["regime"], "OddParity");
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 3);
}

#[test]
fn orthogonal_states_are_perfectly_distinguished() {
    let v = json(&["bounds", "--task", "min-error", "--c", "0", "--n", "1", "--priors", "0.5,0.5"]);
    assert!((num(&v, "success") - 1.0).abs() < 1e-15);
    assert_eq!(num(&v, "error"), 0.0);
}

#[test]
fn lopsided_priors_drop_the_rare_state() {
    let v = json(&[
        "bounds", "--task", "zero-error", "--r", "2", "--c", "0.5", "--priors", "0.01,0.99", "--n", "1",
    ]);
    // Only the likely state is detected: Q = eta0 + eta1 c^2.
    assert!((num(&v, "inconclusive") - (0.01 + 0.99 * 0.25)).abs() < 1e-12);
    assert_eq!(v["regime"], "TwoOutcomeDrop0");
}

#[test]
fn invalid_configurations_exit_with_two() {
    let cases: &[&[&str]] = &[
        &["bounds", "--c", "1.5"],
        &["bounds", "--c", "0.5", "--r", "4"],
        &["bounds", "--c", "0.5", "--priors", "0.3,0.3"],
        &["bounds", "--c", "0.5", "--n", "0"],
        &["bounds", "--task", "zero-error", "--r", "3", "--c", "-0.9"],
        &["bounds", "--task", "min-error", "--r", "3", "--c", "0.2"],
        &["bounds", "--c", "0.5,0.4"],
        &["bounds", "--c", "x"],
        &["chain", "--c", "0.5,0.4", "--n", "3"],
        &["simulate", "--c", "0.5", "--trials", "0"],
        &["povm", "--c", "0.5", "--kind", "trine-unambiguous"],
        &["scan", "--radial", "0"],
        &["scan", "--angular", "0"],
        &["scan", "--theta", "0", "--radial", "0"],
        &["scan", "--theta", "0", "--s-max", "1.5"],
        &["bounds"],
    ];
    for args in cases {
        let out = seqdisc(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn thread_cap_must_be_a_positive_integer() {
    let out = Command::new(env!("CARGO_BIN_EXE_seqdisc"))
        .args(["bounds", "--c", "0.5"])
        .env("SEQDISC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rational_input_reports_exact_switching() {
    // eta0 / eta1 = 1/99 against c^2 = 1/4: three single-detection steps.
    let v = json(&["chain", "--c", "1/2", "--priors", "1/100,99/100", "--n", "5"]);
    assert_eq!(v["exact_arithmetic"], true);
    assert_eq!(v["switching"]["k0"], 3);
    let regimes: Vec<&str> = v["switching"]["regimes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r.as_str().unwrap())
        .collect();
    assert_eq!(regimes, ["drop-first", "drop-first", "drop-first", "three-outcome", "three-outcome"]);
    assert!(num(&v, "gap").abs() < 1e-12);

    let float = json(&["chain", "--c", "0.5", "--priors", "0.01,0.99", "--n", "5"]);
    assert_eq!(float["exact_arithmetic"], false);
    assert_eq!(float["switching"]["k0"], 3);
    assert!((num(&float, "failure") - num(&v, "failure")).abs() < 1e-12);
}

#[test]
fn exact_boundary_switches_immediately() {
    // eta0 / eta1 = c^2 exactly.
    let v = json(&["chain", "--c", "1/2", "--priors", "1/5,4/5", "--n", "2"]);
    assert_eq!(v["switching"]["k0"], 0);
}

#[test]
fn chain_matches_global_for_binary_min_error() {
    let v = json(&["chain", "--task", "min-error", "--c", "0.6", "--priors", "0.3,0.7", "--n", "6"]);
    let oracle = 0.5 * (1.0 + (1.0 - 4.0 * 0.21 * 0.6f64.powi(12)).sqrt());
    assert!((num(&v, "success") - oracle).abs() < 1e-12);
    assert!(num(&v, "max_invariant_deviation") < 1e-12);
}

#[test]
fn chain_over_varying_overlaps() {
    let v = json(&["chain", "--r", "3", "--c", "-0.4,0.5,0.3", "--n", "3"]);
    let report = &v["non_iid"];
    assert!((num(report, "effective_overlap") + 0.06).abs() < 1e-15);
    assert_eq!(report["optimality_established"], true);
    assert!((num(report, "online_failure") - num(report, "global_failure")).abs() < 1e-12);
}

#[test]
fn povm_dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("povm.json");
    let v = json(&["povm", "--r", "3", "--c", "0.3@pi/5", "--dump-povm", path_str(&dump)]);
    assert_eq!(v["kind"], "trine-unambiguous");
    assert!(num(&v, "completeness_error") < 1e-10);
    let doc: PovmDocument = serde_json::from_slice(&std::fs::read(&dump).unwrap()).unwrap();
    assert_eq!(doc.schema_version, 1);
    let povm = doc.to_povm().unwrap();
    assert_eq!(povm.effects().len(), 4);
    let embedded: PovmDocument = serde_json::from_value(v["povm"].clone()).unwrap();
    assert_eq!(embedded, doc);
}

#[test]
fn povm_kinds_by_task() {
    let v = json(&["povm", "--task", "min-error", "--c", "0.4", "--priors", "0.2,0.8"]);
    assert_eq!(v["kind"], "helstrom");
    let v = json(&["povm", "--r", "3", "--c", "-0.3"]);
    assert_eq!(v["kind"], "identify-or-exclude");
    let v = json(&["povm", "--r", "3", "--c", "-0.5", "--kind", "trine-exclusion"]);
    assert_eq!(v["kind"], "trine-exclusion");
    // Rows of `probabilities` are distributions.
    for row in v["probabilities"].as_array().unwrap() {
        let total: f64 = row.as_array().unwrap().iter().map(|p| p.as_f64().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }
}

#[test]
fn simulation_matches_exact_values() {
    let v = json(&["simulate", "--r", "2", "--c", "0.5", "--n", "3", "--trials", "100000", "--seed", "7"]);
    assert!((num(&v["exact"], "failure") - 0.125).abs() < 1e-12);
    assert_eq!(v["errors"], 0);
    assert!(num(&v["z_scores"], "failure").abs() < 3.0);
    assert!(v.get("WARN").is_none());

    let v = json(&["simulate", "--r", "3", "--c", "-0.3", "--n", "3", "--trials", "100000"]);
    assert!((num(&v["exact"], "failure") - 2.0 * 0.027).abs() < 1e-12);
    assert_eq!(v["errors"], 0);
    assert!(num(&v["z_scores"], "failure").abs() < 3.0);
}

#[test]
fn min_error_simulation_reports_errors_without_failing() {
    let out = seqdisc(&["simulate", "--task", "min-error", "--c", "0.8", "--n", "2", "--trials", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["errors"].as_u64().unwrap() > 0);
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let report = dir.path().join(format!("report{i}.json"));
        let trace = dir.path().join(format!("trace{i}.jsonl"));
        let status = Command::new(env!("CARGO_BIN_EXE_seqdisc"))
            .args(["simulate", "--r", "3", "--c", "0.2@1", "--n", "4", "--trials", "5000", "--seed", "11"])
            .args(["--keep-traces", "50", "--trace", path_str(&trace), "--out", path_str(&report)])
            .env("SEQDISC_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push((std::fs::read(&report).unwrap(), std::fs::read(&trace).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert!(!outputs[0].1.is_empty());

    let scan = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_seqdisc"))
            .args(["scan", "--radial", "3", "--angular", "5", "--n", "2", "--restarts", "0"])
            .env("SEQDISC_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(scan("1"), scan("2"));
}

type TraceKey = (u64, u64);

fn early_steps(path: &Path, horizon: u64) -> BTreeMap<TraceKey, Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|line| serde_json::from_str::<Value>(line).unwrap())
        .filter(|v| v["step"].as_u64().unwrap() <= horizon)
        .map(|v| ((v["trial"].as_u64().unwrap(), v["step"].as_u64().unwrap()), v))
        .collect()
}

#[test]
fn truncated_horizon_replays_the_same_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let run = |n: &str| {
        let trace = dir.path().join(format!("trace{n}.jsonl"));
        let out = seqdisc(&[
            "simulate", "--r", "2", "--c", "0.7", "--n", n, "--trials", "200", "--seed", "3",
            "--keep-traces", "200", "--trace", path_str(&trace),
        ]);
        assert!(out.status.success());
        early_steps(&trace, 3)
    };
    let long = run("5");
    let short = run("3");
    assert!(!short.is_empty());
    assert_eq!(long, short);
}

#[test]
fn reports_replay_from_their_config() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["bounds", "--r", "3", "--c", "0.4@2", "--n", "2"],
        &["povm", "--c", "1/3", "--priors", "1/4,3/4"],
        &["chain", "--c", "2/5", "--priors", "0.1,0.9", "--n", "4"],
        &["simulate", "--c", "0.5", "--n", "3", "--trials", "1000", "--seed", "9"],
        &["scan", "--theta", "pi", "--radial", "3", "--n", "3", "--format", "json"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let first = seqdisc(args);
        assert!(first.status.success(), "{args:?}");
        let report = dir.path().join(format!("report{i}.json"));
        std::fs::write(&report, &first.stdout).unwrap();
        let replay = seqdisc(&["run", "--config", path_str(&report), "--format", "json"]);
        assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stderr));
        assert_eq!(first.stdout, replay.stdout, "{args:?}");
    }
}

#[test]
fn scan_csv_reparses_into_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let status = seqdisc(&["scan", "--radial", "4", "--angular", "6", "--n", "2", "--out", path_str(&out)]);
    assert!(status.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# schema_version=1\n"));
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(&out).unwrap();
    let headers: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(headers, ["re", "im", "s", "theta", "n", "online", "global", "gap", "physical"]);
    let rows: Vec<ScanRow> = reader.deserialize().collect::<Result<_, _>>().unwrap();
    assert_eq!(rows.len(), 24);
    for row in &rows {
        assert_eq!(row.physical, row.gap.is_some());
        assert_eq!(row.n, 2);
    }
    assert!(rows.iter().any(|r| !r.physical));
}

#[test]
fn scan_zero_gap_sits_on_solid_lines_at_two_copies() {
    let v = json(&["scan", "--radial", "5", "--angular", "12", "--n", "2", "--restarts", "0", "--format", "json"]);
    for row in v["rows"].as_array().unwrap() {
        let Some(gap) = row["gap"].as_f64() else { continue };
        let k = (row["theta"].as_f64().unwrap() / (std::f64::consts::PI / 6.0)).round() as usize;
        if k % 4 == 0 {
            assert!(gap.abs() < 1e-6, "{row}");
        } else {
            assert!(gap > 1e-4, "{row}");
        }
    }
}

#[test]
fn negative_axis_slice_closes_for_odd_copies() {
    let v = json(&["scan", "--theta", "pi", "--radial", "5", "--n", "3", "--format", "json"]);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert!((num(&rows[4], "s") - 0.5).abs() < 1e-15);
    for row in rows {
        assert!(num(row, "gap").abs() < 1e-6, "{row}");
    }
}

#[test]
fn csv_formats_for_every_report() {
    for args in [
        &["bounds", "--c", "0.5", "--format", "csv"][..],
        &["chain", "--c", "0.5", "--n", "2", "--format", "csv"],
        &["povm", "--c", "0.5", "--format", "csv"],
        &["simulate", "--c", "0.5", "--trials", "100", "--format", "csv"],
    ] {
        let out = seqdisc(args);
        assert!(out.status.success(), "{args:?}");
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(out.stdout.as_slice());
        let records: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>().unwrap();
        assert!(!records.is_empty(), "{args:?}");
    }
}
