use std::path::Path;
use std::process::{Command, Output};

use qel::RunConfig;
use serde_json::Value;

const EXP2: &str = r#"{"type":"exponential","rate":2}"#;

fn qel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qel"))
        .args(args)
        .env_remove("QEL_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn busy_period_csv_starts_with_first_probability() {
    let out = qel(&[
        "busy-period",
        "--lambda",
        "1",
        "--dist",
        EXP2,
        "--s-max",
        "50",
        "--format",
        "csv",
    ]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,N_s"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "1");
    assert_eq!(first[1], "6.6666666666666663e-1");
    assert!((first[1].parse::<f64>().unwrap() - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn busy_period_json_has_moments() {
    let text = stdout(&qel(&["busy-period", "--lambda", "1", "--dist", EXP2]));
    let json: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["version"], qel_core::VERSION);
    // η_1 = 1/(1 - ρ) = 2
    assert!((json["eta"][0].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!(json["tail_mass"].as_f64().unwrap() < 1e-8);
}

#[test]
fn zero_service_gives_zero_moments() {
    let text = stdout(&qel(&[
        "moments", "--lambda", "1", "--dist", EXP2, "--v", "1", "--x", "0",
    ]));
    let json: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["results"][0]["mean"], 0.0);
    assert_eq!(json["results"][0]["variance"], 0.0);
    assert!(json["results"][0]["correlation"].is_null());
}

#[test]
fn seeded_simulation_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = qel(&[
            "simulate",
            "--lambda",
            "0.5",
            "--dist",
            r#"{"type":"exponential","rate":1}"#,
            "--v",
            "1",
            "--x",
            "1,2",
            "--reps",
            "500",
            "--seed",
            "7",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        stdout(&out);
    }
    for name in ["simulate.json", "simulate.csv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    let csv = read(a.path(), "simulate.csv");
    assert_eq!(csv.lines().next(), Some("rep,v,E(1),E(2)"));
    assert_eq!(csv.lines().count(), 501);
}

#[test]
fn thread_count_does_not_change_results() {
    let run = |threads: &str| {
        stdout(&qel(&[
            "--threads",
            threads,
            "simulate",
            "--lambda",
            "0.5",
            "--dist",
            EXP2,
            "--x",
            "1",
            "--reps",
            "200",
            "--seed",
            "3",
            "--format",
            "csv",
        ]))
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn seed_falls_back_to_environment() {
    let args = [
        "simulate", "--lambda", "0.5", "--dist", EXP2, "--x", "1", "--reps", "50", "--format",
        "csv",
    ];
    let from_env = Command::new(env!("CARGO_BIN_EXE_qel"))
        .args(args)
        .env("QEL_SEED", "11")
        .output()
        .unwrap();
    let mut explicit = args.to_vec();
    explicit.extend(["--seed", "11"]);
    assert_eq!(stdout(&from_env), stdout(&qel(&explicit)));
}

#[test]
fn missing_seed_is_generated_and_logged() {
    let out = qel(&[
        "simulate", "--lambda", "0.5", "--dist", EXP2, "--x", "1", "--reps", "10",
    ]);
    let text = stdout(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("auto-generated seed"));
    let json: Value = serde_json::from_str(&text).unwrap();
    assert!(json["config"]["experiment"]["seed"].is_u64());
}

#[test]
fn unstable_model_exits_with_config_error() {
    let out = qel(&["moments", "--lambda", "3", "--dist", EXP2, "--x", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("unstable model") && err.contains("rho must be < 1, got 1.5"),
        "{err}"
    );
}

#[test]
fn all_diagnostics_are_printed() {
    let out = qel(&["lst", "--lambda", "1", "--dist", EXP2, "--alpha", "0.1,0.2"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("x grid must not be empty") && err.contains("one alpha per x"),
        "{err}"
    );
}

#[test]
fn truncation_exits_with_code_four() {
    let out = qel(&[
        "simulate",
        "--lambda",
        "0.9",
        "--dist",
        r#"{"type":"exponential","rate":1}"#,
        "--v",
        "5",
        "--x",
        "5",
        "--reps",
        "20",
        "--seed",
        "1",
        "--max-events",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn config_errors_point_at_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"command\": \"moments\",\n  \"model\": {\"lambda\": 1,\n    \"dist\": {\"type\": \"erlang\", \"shape\": 0, \"rate\": 1}}\n}\n").unwrap();
    let out = qel(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn report_config_round_trips_through_run() {
    let first = tempfile::tempdir().unwrap();
    stdout(&qel(&[
        "simulate",
        "--lambda",
        "0.4",
        "--dist",
        r#"{"type":"erlang","shape":2,"rate":2}"#,
        "--v-dist",
        "stationary",
        "--x",
        "0.5,1.5",
        "--reps",
        "300",
        "--seed",
        "5",
        "--out",
        first.path().to_str().unwrap(),
    ]));
    let report: Value = serde_json::from_str(&read(first.path(), "simulate.json")).unwrap();
    let config: RunConfig = serde_json::from_value(report["config"].clone()).unwrap();
    assert_eq!(serde_json::to_value(&config).unwrap(), report["config"]);

    let config_path = first.path().join("config.json");
    std::fs::write(
        &config_path,
        serde_json::to_string_pretty(&report["config"]).unwrap(),
    )
    .unwrap();
    let second = tempfile::tempdir().unwrap();
    stdout(&qel(&[
        "run",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        second.path().to_str().unwrap(),
    ]));
    for name in ["simulate.json", "simulate.csv"] {
        assert_eq!(
            read(first.path(), name),
            read(second.path(), name),
            "{name}"
        );
    }
}

#[test]
fn crossing_report() {
    let text = stdout(&qel(&[
        "crossing", "--lambda", "1", "--dist", EXP2, "--y", "2",
    ]));
    let json: Value = serde_json::from_str(&text).unwrap();
    assert!((json["psi0"].as_f64().unwrap() - 5.0 / 3.0).abs() < 1e-12);
    assert!((json["var_upsilon"].as_f64().unwrap() - 2.0 / 9.0).abs() < 1e-12);
}

#[test]
fn lst_at_zero_arguments_is_one() {
    let text = stdout(&qel(&[
        "lst", "--lambda", "1", "--dist", EXP2, "--v", "1", "--x", "1,2", "--alpha", "0,0",
    ]));
    let json: Value = serde_json::from_str(&text).unwrap();
    assert!((json["lst_value"].as_f64().unwrap() - 1.0).abs() < 1e-14);
    assert!(json["quadrature_error"].is_number());
}

#[test]
fn fclt_table_has_one_row_per_model_and_x() {
    let seq = r#"[{"lambda":5,"dist":{"type":"exponential","rate":10}},
                  {"lambda":10,"dist":{"type":"exponential","rate":20}},
                  {"lambda":20,"dist":{"type":"exponential","rate":40}}]"#;
    let text = stdout(&qel(&[
        "fclt",
        "--sequence",
        seq,
        "--v",
        "1",
        "--x-grid",
        "0.5,1",
        "--reps",
        "200",
        "--seed",
        "2",
        "--format",
        "csv",
    ]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,lambda,rho,x,ks_stat,ks_p,ratio_iii");
    assert_eq!(lines.len(), 7);
}
