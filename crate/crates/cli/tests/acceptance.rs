//! Acceptance gate for the command-line contract: the exit-code matrix
//! over feasible, infeasible, and malformed invocations, and lossless
//! JSON round-trips against the library itself.

use std::io::Write as _;
use std::process::{Command, Output, Stdio};

use varbounds::MomentAccumulator;

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_varbounds"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn varbounds");
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().expect("wait for varbounds")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited without a code")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json_of(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout_of(out)).expect("stdout is JSON")
}

#[test]
fn criterion_10_exit_codes_follow_the_contract() {
    // Exit 0: successful computations and feasible verdicts.
    let ok: &[(&[&str], &str)] = &[
        (&["stats"], "1 2 4 6"),
        (&["bounds"], "1 2 4 6"),
        (&["bounds"], "5 5 5"),
        (&["shard-sim", "--shards", "100"], "1 2 4 6"),
        (
            &[
                "check", "--n", "4", "--mean", "3.25", "--var", "3.6875", "--kind", "population",
                "--min", "1", "--max", "6",
            ],
            "",
        ),
        (
            &["member", "--x", "3", "--n", "10", "--mean", "0", "--sd", "1", "--kind", "population"],
            "",
        ),
        (
            &["subset", "--r", "2", "--gamma", "5", "--n", "4", "--mean", "3.25", "--var", "3.6875"],
            "",
        ),
        (
            &["order", "--k", "3", "--value", "0", "--n", "5", "--mean", "0", "--sd", "1", "--kind", "population"],
            "",
        ),
        (&["--help"], ""),
        (&["stats", "--help"], ""),
        (&["--version"], ""),
    ];
    for (args, stdin) in ok {
        let out = run(args, stdin);
        assert_eq!(code(&out), 0, "{args:?}: {}", stderr_of(&out));
    }

    // Exit 1: well-formed input, infeasible verdict.
    let infeasible: &[&[&str]] = &[
        &["check", "--n", "10", "--mean", "0", "--sd", "1", "--kind", "population", "--max", "5"],
        &["member", "--x", "5", "--n", "10", "--mean", "0", "--sd", "1", "--kind", "population"],
        &["subset", "--r", "5", "--gamma", "2", "--n", "10", "--mean", "0", "--var", "1"],
        &["order", "--k", "3", "--value", "2", "--n", "5", "--mean", "0", "--sd", "1", "--kind", "population"],
    ];
    for args in infeasible {
        let out = run(args, "");
        assert_eq!(code(&out), 1, "{args:?}: {}", stdout_of(&out));
    }

    // Exit 2: usage errors and malformed input, never a panic.
    let errors: &[(&[&str], &str)] = &[
        (&["stats"], ""),
        (&["stats"], "1 2 three"),
        (&["stats"], "1 inf 3"),
        (&["stats", "/no/such/file"], ""),
        (&["bounds"], "7"),
        (&["nonsense"], ""),
        (&["check", "--n", "1", "--mean", "0", "--sd", "1", "--kind", "sample"], ""),
        (&["check", "--n", "1", "--sd", "1", "--kind", "sample"], ""),
        (&["check", "--n", "10", "--mean", "0", "--sd", "1", "--var", "1"], ""),
        (&["check", "--n", "10", "--mean", "0"], ""),
        (&["check", "--n", "10", "--mean", "0", "--var", "-2"], ""),
        (&["subset", "--r", "2", "--n", "10", "--mean", "0", "--var", "1"], ""),
        (&["subset", "--r", "2", "--gamma", "1", "--m", "2", "--subvar", "1", "--n", "10", "--mean", "0", "--var", "1"], ""),
        (&["order", "--k", "6", "--value", "0", "--n", "5", "--mean", "0", "--var", "1"], ""),
        (&["shard-sim", "--shards", "0"], "1 2 3"),
        (&["shard-sim", "--trials", "0"], "1 2 3"),
        (&["stats", "--csv"], "a,b\n1,2\n"),
        (&["stats", "--csv", "--column", "missing"], "a,b\n1,2\n"),
        (&["--tolerance", "-1", "stats"], "1 2 3"),
    ];
    for (args, stdin) in errors {
        let out = run(args, stdin);
        assert_eq!(code(&out), 2, "{args:?}: {}", stdout_of(&out));
        let err = stderr_of(&out);
        assert!(!err.contains("panicked"), "{args:?} panicked: {err}");
    }

    println!("PASS criterion 10 (exit codes): 0/1/2 across {} invocations", ok.len() + infeasible.len() + errors.len());
}

#[test]
fn criterion_10_json_round_trips_losslessly() {
    // Values chosen so none of the derived statistics are short decimals.
    let data = "0.1 0.2 0.30000000000000004 -7.25e-3 1e-7 123.456";
    let out = run(&["stats", "--json"], data);
    assert_eq!(code(&out), 0);
    let first = json_of(&out);
    // Re-render and re-parse: nothing may move.
    let rendered = serde_json::to_string(&first).unwrap();
    let second: serde_json::Value = serde_json::from_str(&rendered).unwrap();
    assert_eq!(first, second, "stats JSON drifted across a round trip");

    // And the printed numbers are bit-for-bit the library's numbers.
    let values: Vec<f64> = data
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    let acc = MomentAccumulator::from_values(&values).unwrap();
    assert_eq!(first["count"].as_u64().unwrap(), acc.count());
    assert_eq!(
        first["mean"].as_f64().unwrap().to_bits(),
        acc.mean().unwrap().to_bits()
    );
    assert_eq!(first["m2"].as_f64().unwrap().to_bits(), acc.m2().to_bits());
    assert_eq!(
        first["population_variance"].as_f64().unwrap().to_bits(),
        acc.population_variance().unwrap().to_bits()
    );
    assert_eq!(
        first["sample_variance"].as_f64().unwrap().to_bits(),
        acc.sample_variance().unwrap().to_bits()
    );

    // Verdict JSON: exact fields on the constructed infeasible report.
    let out = run(
        &["check", "--json", "--n", "10", "--mean", "0", "--sd", "1", "--kind", "population", "--max", "5"],
        "",
    );
    assert_eq!(code(&out), 1);
    let verdict = json_of(&out);
    assert_eq!(verdict["feasible"], serde_json::json!(false));
    assert_eq!(verdict["violations"][0]["constraint"], serde_json::json!("samuelson_max"));
    assert_eq!(verdict["violations"][0]["bound"], serde_json::json!(3.0));
    assert_eq!(verdict["violations"][0]["observed"], serde_json::json!(5.0));
    assert_eq!(verdict["violations"][0]["slack"], serde_json::json!(-2.0));
    let rendered = serde_json::to_string(&verdict).unwrap();
    let again: serde_json::Value = serde_json::from_str(&rendered).unwrap();
    assert_eq!(verdict, again);

    // Bounds JSON carries the catalog with exact reference values.
    let out = run(&["bounds", "--json"], "1 2 4 6");
    assert_eq!(code(&out), 0);
    let bounds = json_of(&out);
    let checks = bounds["checks"].as_array().unwrap();
    let nagy = checks.iter().find(|c| c["name"] == "nagy").unwrap();
    assert_eq!(nagy["bound"], serde_json::json!(3.125));
    assert_eq!(nagy["satisfied"], serde_json::json!(true));
    let refined = checks.iter().find(|c| c["name"] == "refined_range").unwrap();
    assert_eq!(refined["bound"], serde_json::json!(3.1875));
    assert_eq!(bounds["order_statistics"].as_array().unwrap().len(), 4);
    let rendered = serde_json::to_string(&bounds).unwrap();
    let again: serde_json::Value = serde_json::from_str(&rendered).unwrap();
    assert_eq!(bounds, again);

    println!("PASS criterion 10 (round trips): stats, check, and bounds JSON are lossless");
}

#[test]
fn shard_sim_reports_zero_drift_on_the_worked_example() {
    let out = run(
        &["shard-sim", "--json", "--shards", "2", "--trials", "10", "--seed", "1"],
        "1 2 4 6",
    );
    assert_eq!(code(&out), 0);
    let sim = json_of(&out);
    assert_eq!(sim["plan"]["shard_count"], serde_json::json!(2));
    assert_eq!(sim["plan"]["topology"], serde_json::json!("balanced_tree"));
    assert!(sim["report"]["m2_rel_error"].as_f64().unwrap() <= 1e-12);
    assert_eq!(sim["report"]["trials"], serde_json::json!(10));
    // Single trial includes the merged accumulator itself.
    let out = run(&["shard-sim", "--json", "--shards", "2"], "1 2 4 6");
    let sim = json_of(&out);
    assert_eq!(sim["merged"]["count"], serde_json::json!(4));
    assert_eq!(sim["merged"]["population_variance"], serde_json::json!(3.6875));
}

#[test]
fn file_and_csv_inputs_are_equivalent_to_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("values.txt");
    std::fs::write(&plain, "# four values\n1 2\n4 6\n").unwrap();
    let out = run(&["stats", "--json", plain.to_str().unwrap()], "");
    assert_eq!(code(&out), 0);
    assert_eq!(json_of(&out)["mean"], serde_json::json!(3.25));

    let csv = dir.path().join("values.csv");
    std::fs::write(&csv, "id,score\na,1\nb,2\nc,4\nd,6\n").unwrap();
    let out = run(
        &["stats", "--json", "--csv", "--column", "score", csv.to_str().unwrap()],
        "",
    );
    assert_eq!(code(&out), 0);
    let stats = json_of(&out);
    assert_eq!(stats["count"], serde_json::json!(4));
    assert_eq!(stats["population_variance"], serde_json::json!(3.6875));

    // Wrong column in a real file still exits 2.
    let out = run(
        &["stats", "--csv", "--column", "missing", csv.to_str().unwrap()],
        "",
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn tolerance_flag_loosens_decisions_and_flags_are_global() {
    // Nagy-violating report: infeasible by default, waved through under an
    // enormous tolerance.
    let report: &[&str] = &["--n", "4", "--mean", "2", "--var", "1", "--min", "0", "--max", "4"];
    let strict = run(&[&["check"], report].concat(), "");
    assert_eq!(code(&strict), 1);
    let loose = run(&[&["check", "--tolerance", "10"], report].concat(), "");
    assert_eq!(code(&loose), 0);
    // Same report with unattained extremes: the range floors don't apply.
    let unattained = run(&[&["check", "--range-not-attained"], report].concat(), "");
    assert_eq!(code(&unattained), 0);

    // Global flags are accepted before the subcommand too.
    let out = run(&["--json", "stats"], "1 2 4 6");
    assert_eq!(code(&out), 0);
    assert_eq!(json_of(&out)["count"], serde_json::json!(4));
}
