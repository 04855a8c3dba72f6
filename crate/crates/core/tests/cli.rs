use std::path::Path;
use std::process::{Command, Output};

use dense_coding::io::MessageSetFile;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dense-coding")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn pauli_search_verify_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("w.json");
    let o = run(&["search", "--dim", "2", "--schmidt", "0.5,0.5", "--messages", "4", "--mode", "unitary", "--out", p(&f)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let line = stdout(&o);
    assert_eq!(line.lines().count(), 1);
    assert!(line.starts_with("verdict=feasible "));
    assert!(line.contains("best_cost="));

    let o = run(&["verify", p(&f)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("verdict=pass"));
    assert!(stdout(&o).contains("cost_agrees=true"));

    let log = dir.path().join("trials.csv");
    let o = run(&["simulate", p(&f), "--trials", "400", "--seed", "3", "--log", p(&log)]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.starts_with("message,rank,trials,correct,accuracy\n"));
    assert!(out.contains("0,1,100,100,1.0000000000000000e0"));
    assert!(out.contains("overall_accuracy=1.0000000000000000e0"));
    let log = std::fs::read_to_string(log).unwrap();
    assert_eq!(log.lines().count(), 401);
}

#[test]
fn negative_results_exit_two() {
    // excluded outright: 3 × 0.7 > 2
    let o = run(&["search", "--dim", "2", "--schmidt", "0.7,0.3", "--messages", "3", "--mode", "general"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).starts_with("verdict=excluded-by-bound"));
    // allowed by the bound but impossible below maximal entanglement
    let o = run(&["search", "--schmidt", "0.6,0.4", "--messages", "3", "--mode", "general", "--restarts", "10"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).starts_with("verdict=infeasible"));
    assert!(stdout(&o).contains("profiles_tried=1,1,1;1,1,2"));
}

#[test]
fn malformed_input_exits_one() {
    for schmidt in ["0.7,0.2", "0.2,0.8", "0.5,0.5,x"] {
        let o = run(&["search", "--schmidt", schmidt, "--messages", "2"]);
        assert_eq!(code(&o), 1, "{schmidt}");
        assert!(stderr(&o).contains("error"), "{schmidt}");
    }
    assert_eq!(code(&run(&["search", "--dim", "3", "--schmidt", "0.5,0.5", "--messages", "2"])), 1);
    assert_eq!(code(&run(&["search", "--schmidt", "0.5,0.5", "--messages", "2", "--profile", "1,1,1"])), 1);
    assert_eq!(code(&run(&["no-such-command"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"format_version\": 1,").unwrap();
    assert_eq!(code(&run(&["verify", p(&bad)])), 1);
    assert_eq!(code(&run(&["verify", p(&dir.path().join("missing.json"))])), 1);

    let f = dir.path().join("b.json");
    assert_eq!(code(&run(&["construct", "--family", "blockset", "--x", "0.26", "--out", p(&f)])), 0);
    let mut file = MessageSetFile::read(&f).unwrap();
    file.format_version = 2;
    file.write(&f).unwrap();
    let o = run(&["verify", p(&f)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("format version 2"));
}

#[test]
fn tampered_file_fails_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("b.json");
    assert_eq!(code(&run(&["construct", "--family", "blockset", "--x", "0.26", "--out", p(&f)])), 0);
    assert_eq!(code(&run(&["verify", p(&f)])), 0);
    let mut file = MessageSetFile::read(&f).unwrap();
    file.messages[5].kraus[0][0][1][0] += 1e-3;
    file.write(&f).unwrap();
    let o = run(&["verify", p(&f)]);
    assert_eq!(code(&o), 2);
    let out = stdout(&o);
    assert!(out.starts_with("verdict=fail"));
    assert!(out.contains("worst:"), "{out}");
    assert!(out.contains("cost_agrees=false"));
    assert_eq!(code(&run(&["simulate", p(&f), "--trials", "10"])), 2);
}

#[test]
fn construct_families() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("n.json");
    let o = run(&["construct", "--family", "ninth-tenth", "--x", "0.26", "--out", p(&f)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("\"passed\": true"));
    let file = MessageSetFile::read(&f).unwrap();
    assert_eq!(file.messages.len(), 10);
    assert_eq!(code(&run(&["verify", p(&f), "--tol", "1e-12"])), 0);

    let o = run(&["construct", "--family", "ninth-tenth", "--x", "0.24"]);
    assert_eq!(code(&o), 2);
    let slack: f64 = stdout(&o).split("slack=").nth(1).unwrap().trim().parse().unwrap();
    assert!((slack - (4.0 - 0.28 / 0.0576)).abs() < 1e-12);

    let o = run(&["construct", "--family", "qubit-nogo", "--lambda0", "0.7"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["gap"].as_f64().unwrap() - 1.9047619047619047).abs() < 1e-12);
    assert_eq!(code(&run(&["construct", "--family", "qubit-nogo", "--lambda0", "0.5"])), 2);
    assert_eq!(code(&run(&["construct", "--family", "qubit-nogo", "--lambda0", "1.5"])), 1);

    let g = dir.path().join("ten.json");
    let o = run(&["construct", "--family", "five-plus-five", "--dressings", "random", "--dressing-seed", "4", "--out", p(&g)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(&["pairing", p(&g)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("conforms, 5+5"));

    let o = run(&["construct", "--family", "u", "--x", "0.25", "--phases", "0.4"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["pair_residual"].as_f64().unwrap() < 1e-14);
    assert!(v["fifth_unitarity_defect"].as_f64().unwrap() < 1e-12);
    assert_eq!(code(&run(&["construct", "--family", "u", "--x", "0.4"])), 1);
}

#[test]
fn boundary_csv_and_no_transition() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("b.csv");
    let args = ["boundary", "--start", "0.5,0.5", "--end", "0.6,0.4", "--messages", "4", "--resolution", "0.01"];
    let o = run(&[&args[..], &["--out", p(&f)]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("location="));
    let csv = std::fs::read_to_string(&f).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "row,parameter,lambda0,lambda1,n,mode,verdict,cost,seed");
    let last = csv.lines().last().unwrap();
    assert!(last.starts_with("location,"));
    let loc: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!(loc > 0.0 && loc < 0.01);

    let o = run(&["boundary", "--start", "0.5,0.5", "--end", "0.5,0.5", "--messages", "4"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no transition"));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for (i, jobs) in ["1", "4", "4"].iter().enumerate() {
        let w = dir.path().join(format!("w{i}.json"));
        let s = dir.path().join(format!("s{i}.csv"));
        let o = run(&["--jobs", jobs, "search", "--schmidt", "0.4,0.35,0.25", "--messages", "6", "--seed", "11", "--out", p(&w)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let o = run(&["sweep", "--jobs", jobs, "--step", "0.125", "--restarts", "5", "--out", p(&s)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        texts.push((std::fs::read(&w).unwrap(), std::fs::read(&s).unwrap()));
    }
    assert!(texts.windows(2).all(|w| w[0] == w[1]));
    let file = MessageSetFile::read(&dir.path().join("w0.json")).unwrap();
    assert_eq!(file.metadata.timestamp, None);
}

#[test]
fn config_file_with_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"schmidt": [0.5, 0.5], "messages": 4, "mode": "unitary", "restarts": 3}"#).unwrap();
    let o = run(&["--config", p(&cfg), "search"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("n=4"));
    let o = run(&["--config", p(&cfg), "search", "--messages", "5"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("n=5"));

    std::fs::write(&cfg, r#"{"no_such_flag": 1}"#).unwrap();
    assert_eq!(code(&run(&["search", "--config", p(&cfg), "--schmidt", "0.5,0.5", "--messages", "2"])), 1);
}

#[test]
fn timestamp_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("t.json");
    let o = run(&["--timestamp", "construct", "--family", "blockset", "--x", "0.3", "--out", p(&f)]);
    assert_eq!(code(&o), 0);
    assert!(MessageSetFile::read(&f).unwrap().metadata.timestamp.is_some());
}
