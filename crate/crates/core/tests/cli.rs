use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use crowdcode::analytic::pe_iid_majority;
use crowdcode::CodeMatrix;

fn crowdcode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crowdcode")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn eval_exact_perfect_crowd_is_zero() {
    let o = crowdcode(&["eval-exact", "--matrix", "m4n10", "--mu", "1.0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 0.0);
}

#[test]
fn eval_exact_majority_matches_library() {
    let o = crowdcode(&["eval-exact", "--matrix", "majority", "--m", "4", "--n", "10", "--fusion", "majority", "--mu", "0.7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - pe_iid_majority(4, 10, 0.7).unwrap().value).abs() < 1e-15);
}

#[test]
fn simulate_is_deterministic_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = crowdcode(&[
            "simulate", "--matrix", "m4n10", "--model", "constant", "--p", "0.8", "--trials", "5000", "--seed", "9",
            "--out", path(&out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("fusion,errors,trials,pe,stderr,exact"));
    assert_eq!(text.lines().count(), 3);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "simulate");
    assert_eq!(manifest["seed"], 9);
}

#[test]
fn simulate_trace_has_one_row_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let o = crowdcode(&["simulate", "--matrix", "m4n10", "--trials", "40", "--trace", path(&trace)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(trace).unwrap().lines().count(), 41);
}

#[test]
fn design_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.json");
    let o = crowdcode(&[
        "design", "--m", "4", "--n", "6", "--method", "ccr", "--q", "0.8", "--out", path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let a = CodeMatrix::from_json(&text).unwrap();
    assert_eq!((a.num_classes(), a.num_workers()), (4, 6));

    let e = crowdcode(&["eval-exact", "--matrix", path(&out), "--mu", "1.0"]);
    assert_eq!(e.status.code(), Some(0));
}

#[test]
fn bound_reports_condition() {
    let o = crowdcode(&["bound", "--matrix", "m4n10", "--mu", "0.95"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!stdout(&o).is_empty());
}

#[test]
fn dataset_command_reads_ratings() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ratings.csv");
    let mut text = String::from("task_id,gold,w1,w2,w3,w4,w5,w6,w7,w8,w9,w10\n");
    for t in 0..20 {
        let gold = (t * 37) % 100;
        let ratings: Vec<String> = (0..10).map(|_| gold.to_string()).collect();
        text.push_str(&format!("t{t},{gold},{}\n", ratings.join(",")));
    }
    fs::write(&csv, text).unwrap();
    let out = dir.path().join("report.json");
    let o = crowdcode(&["dataset", "--csv", path(&csv), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["tasks"], 20);
    assert_eq!(report["coding_error_fraction"], 0.0);
    assert_eq!(report["dataset"], "ratings");
}

#[test]
fn reproduce_figure_writes_series_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig3.csv");
    let o = crowdcode(&["reproduce-figure", "fig3", "--trials", "200", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.lines().next().unwrap().starts_with("series,"));
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn exit_codes() {
    assert_eq!(crowdcode(&["eval-exact", "--matrix", "/nonexistent/a.json", "--mu", "0.5"]).status.code(), Some(1));
    assert_eq!(crowdcode(&["eval-exact", "--matrix", "m4n10", "--mu", "1.5"]).status.code(), Some(2));
    assert_eq!(crowdcode(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(crowdcode(&["sweep", "--matrix", "m4n10", "--axis", "quality"]).status.code(), Some(2));
}
