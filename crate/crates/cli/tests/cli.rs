use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qkdsim::report::comparable;
use serde_json::Value;
use tempfile::TempDir;

fn qkdsim(args: &[&str]) -> Output {
    qkdsim_env(args, None)
}

fn qkdsim_env(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qkdsim"));
    cmd.args(args).env_remove("QKDSIM_SEED");
    if let Some(s) = seed_env {
        cmd.env("QKDSIM_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_out(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

#[test]
fn minimal_mdi_report() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "s.json", r#"{"kind": "mdi", "rngSeed": 3, "parameters": {"rounds": 2000}}"#);
    let out = qkdsim(&["simulate", path(&f)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_out(&out);
    assert_eq!(v["schemaVersion"], 1);
    assert_eq!(v["scenario"]["rngSeed"], 3);
    assert_eq!(v["scenario"]["parameters"]["detector"]["efficiency"], 1.0);
    assert_eq!(v["scenario"]["parameters"]["channelA"]["transmittance"], 1.0);
    assert_eq!(v["scenario"]["parameters"]["channelB"]["misalignment"], 0.0);
    assert_eq!(v["result"]["qberZ"], 0.0);
    assert!(v["wallClockSeconds"].is_number());
}

#[test]
fn validation_errors_exit_2_and_name_the_field() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (
            r#"{"kind": "mdi", "rngSeed": 1, "parameters": {"rounds": 10, "channelA": {"transmittance": 1.5}}}"#,
            "parameters.channelA.transmittance",
        ),
        (
            r#"{"kind": "qpv-honest", "rngSeed": 1, "parameters": {"rounds": 10, "geometry": {"line": {"length": 2, "claimed": 2.5}}}}"#,
            "parameters.geometry",
        ),
        (r#"{"kind": "mdi", "rngSeed": 1, "parameters": {"rounds": 10, "colour": 1}}"#, "colour"),
        (r#"{"kind": "teleport", "rngSeed": 1}"#, "kind"),
        (r#"{"kind": "mdi", "parameters": {"rounds": 10}}"#, "rngSeed"),
    ];
    for (body, field) in cases {
        let f = write(&dir, "bad.json", body);
        let out = qkdsim(&["simulate", path(&f)]);
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(2), "{body}: {err}");
        assert!(err.contains(field), "{body}: {err}");
    }
}

#[test]
fn malformed_json_reports_line() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "bad.json", "{\n  \"kind\": \"mdi\",\n  \"rngSeed\": 1\n  \"parameters\": {}\n}\n");
    let out = qkdsim(&["simulate", path(&f)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json:4:"), "{err}");
    assert!(err.contains("\"parameters\": {}"), "{err}");
}

#[test]
fn io_errors_exit_4() {
    let out = qkdsim(&["simulate", "/nonexistent/scenario.json"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/scenario.json"));

    let out = qkdsim(&["bound", "--budget", "10000", "--out", "/nonexistent/dir/report.json"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/dir/report.json"));
}

#[test]
fn qpv_report_schema() {
    let out = qkdsim(&["simulate", path(&scenarios_dir().join("qpv-honest.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_out(&out);
    for key in ["rounds", "detections", "errorRate", "timingOk", "consistencyOk", "accepted", "threshold"] {
        assert!(v["result"].get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["result"]["accepted"], true);
}

#[test]
fn displaced_prover_aborts_with_exit_3() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "far.json",
        r#"{"kind": "qpv-honest", "rngSeed": 1, "parameters": {"rounds": 50, "prover": {"position": [1.4, 0]}}}"#,
    );
    let report = dir.path().join("r.json");
    let out = qkdsim(&["simulate", path(&f), "--out", path(&report)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Timing"));
    let v: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["result"]["timingOk"], false);
    assert_eq!(v["result"]["abort"]["step"], "Timing");
}

#[test]
fn infeasible_coalition_aborts_with_exit_3() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "slow.json",
        r#"{"kind": "qpv-locc", "rngSeed": 1, "parameters": {"rounds": 50, "placement": [[0.5, 1.0], [1.5, 1.0]]}}"#,
    );
    let out = qkdsim(&["simulate", path(&f)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bound_reaches_a_quarter() {
    let out = qkdsim(&["bound", "--budget", "10000"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_out(&out);
    let value = v["result"]["minimum"]["value"].as_f64().unwrap();
    assert!((value - 0.25).abs() < 1e-6, "{value}");
    assert_eq!(v["scenario"]["kind"], "qpv-bound");
}

#[test]
fn rate_compare_ratios() {
    let out = qkdsim(&["simulate", path(&scenarios_dir().join("rate-compare.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_out(&out);
    let mdi = v["result"]["mdiRatios"][0]["ratio"].as_f64().unwrap();
    let bb84 = v["result"]["bb84Ratios"][0]["ratio"].as_f64().unwrap();
    assert!((mdi / 4.0 - 1.0).abs() < 0.05, "{mdi}");
    assert!((bb84 / 2.0 - 1.0).abs() < 0.05, "{bb84}");
}

#[test]
fn sweep_csv_columns() {
    let out = qkdsim(&["sweep", "--param", "eta", "--values", "0.5,1", "--rounds", "20000", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap(), vec!["protocol", "eta", "rate"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(&rows[0][0], "mdi");
    assert_eq!(&rows[1][0], "bb84");
}

#[test]
fn empty_sweep_is_header_only() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("sweep.csv");
    for args in [
        vec!["sweep", "--param", "eta", "--values", "--out", path(&target)],
        vec!["sweep", "--param", "eta", "--out", path(&target)],
    ] {
        let out = qkdsim(&args);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(std::fs::read_to_string(&target).unwrap(), "protocol,eta,rate\n");
    }
}

#[test]
fn sweep_rejects_bad_values() {
    let out = qkdsim(&["sweep", "--param", "eta", "--values", "0.5,1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parameters.etas[1]"));
    let out = qkdsim(&["sweep", "--param", "loss", "--values", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_runs_identical_reports() {
    for name in ["mdi.json", "bb84-relay.json", "qpv-locc.json", "qpv-equivalence.json"] {
        let f = scenarios_dir().join(name);
        let a = json_out(&qkdsim(&["simulate", path(&f)]));
        let b = json_out(&qkdsim(&["simulate", path(&f)]));
        assert_eq!(comparable(&a), comparable(&b), "{name}");
    }
}

#[test]
fn seed_sources_in_order() {
    let dir = TempDir::new().unwrap();
    let no_seed = write(&dir, "n.json", r#"{"kind": "qpv-epr", "parameters": {"rounds": 100}}"#);
    let with_seed = write(&dir, "w.json", r#"{"kind": "qpv-epr", "rngSeed": 5, "parameters": {"rounds": 100}}"#);

    let v = json_out(&qkdsim_env(&["simulate", path(&no_seed)], Some("77")));
    assert_eq!(v["scenario"]["rngSeed"], 77);
    let v = json_out(&qkdsim_env(&["simulate", path(&with_seed)], Some("77")));
    assert_eq!(v["scenario"]["rngSeed"], 5);
    let v = json_out(&qkdsim_env(&["simulate", path(&with_seed), "--seed", "9"], Some("77")));
    assert_eq!(v["scenario"]["rngSeed"], 9);
    assert_eq!(qkdsim_env(&["simulate", path(&no_seed)], Some("x")).status.code(), Some(2));
}

#[test]
fn different_seeds_differ() {
    let f = scenarios_dir().join("qpv-epr.json");
    let a = json_out(&qkdsim(&["simulate", path(&f), "--seed", "1"]));
    let b = json_out(&qkdsim(&["simulate", path(&f), "--seed", "2"]));
    assert_ne!(a["result"]["detections"], b["result"]["detections"]);
}

#[test]
fn shipped_scenarios_parse() {
    let mut n = 0;
    for entry in std::fs::read_dir(scenarios_dir()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "json") {
            qkdsim::parse_scenario(&p, None).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert_eq!(n, 8);
}
