use std::path::Path;
use std::process::{Command, Output};

fn tandem(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tandem"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("run tandem")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

const UNIT: [&str; 12] = [
    "--lambda", "1", "--mu1", "1", "--mu2", "1", "--R", "4", "--c1", "1", "--c2", "1",
];

#[test]
fn solve_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["solve"];
    args.extend(UNIT);
    let out = tandem(dir.path(), &args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("solve.json")).unwrap()).unwrap();
    assert_eq!(doc["outcome"], "finite");
    assert_eq!(doc["K"], 3);
    assert_eq!(doc["profile"].as_array().unwrap().len(), 4);
    let manifest: serde_json::Value = serde_json::from_slice(
        &std::fs::read(dir.path().join("solve.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 1);
}

#[test]
fn solve_never_join_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = tandem(
        dir.path(),
        &[
            "solve", "--R", "1", "--c1", "1", "--c2", "1", "--mu1", "1", "--mu2", "1", "--lambda",
            "1", "--format", "csv",
        ],
    );
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("solve.csv")).unwrap();
    assert_eq!(csv, "k,t1,t2,profit\n0,1,1,-1\n");
}

#[test]
fn solve_reads_config_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("model.json");
    std::fs::write(&cfg, r#"{"lambda":1,"mu1":1,"mu2":1,"R":1,"c1":1,"c2":1}"#).unwrap();
    let out = tandem(
        dir.path(),
        &["solve", "--config", cfg.to_str().unwrap(), "--R", "4"],
    );
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["K"], 3);
}

#[test]
fn solve_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["solve"];
    args.extend(UNIT);
    args[4] = "0";
    let out = tandem(dir.path(), &args);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("mu1 must be > 0"));
    let out = tandem(dir.path(), &["solve", "--lambda", "1"]);
    assert_eq!(code(&out), 2);
    let out = tandem(dir.path(), &["solve", "--bogus"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn solve_unresolved_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = tandem(
        dir.path(),
        &[
            "solve", "--lambda", "1", "--mu1", "0.1", "--mu2", "1", "--R", "5", "--c1", "0",
            "--c2", "1", "--cap", "20",
        ],
    );
    assert_eq!(code(&out), 3);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["outcome"], "unresolved");
    assert!(doc["K"].is_null());
}

#[test]
fn table_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = tandem(dir.path(), &["table", "--mu1", "1", "--mu2", "1", "--nmax", "2"]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 7);
    assert_eq!(lines[0], "n,m,t1,t2,t");
    assert!(lines.contains(&"0,2,0,2,2"));
    assert!(lines.contains(&"1,1,1,1.5,2.5"));
    assert_eq!(csv.as_bytes(), out.stdout.as_slice());

    let out = tandem(dir.path(), &["table", "--mu1", "1", "--mu2", "1", "--nmax", "-1"]);
    assert_eq!(code(&out), 2);
    let out = tandem(dir.path(), &["table", "--mu1", "1", "--mu2", "1", "--nmax", "100000"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn simulate_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "simulate", "--lambda", "1", "--mu1", "1", "--mu2", "1", "--K", "1", "--seed", "7",
        "--events", "1000000",
    ];
    assert_eq!(code(&tandem(a.path(), &args)), 0);
    assert_eq!(code(&tandem(b.path(), &args)), 0);
    let ja = std::fs::read(a.path().join("simulate.json")).unwrap();
    let jb = std::fs::read(b.path().join("simulate.json")).unwrap();
    assert_eq!(ja, jb);
    let doc: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    assert_eq!(doc["seed"], 7);
    let tv: f64 = doc["occupancy"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| (s["p"].as_f64().unwrap() - 1.0 / 3.0).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv < 0.01, "tv {tv}");
    assert!(doc.get("empirical_profit").is_none());
}

#[test]
fn simulate_rejects_negative_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = tandem(
        dir.path(),
        &[
            "simulate", "--lambda", "1", "--mu1", "1", "--mu2", "1", "--K", "-1", "--seed", "1",
            "--events", "10",
        ],
    );
    assert_eq!(code(&out), 2);
}

fn sweep_rows(dir: &Path) -> Vec<Vec<String>> {
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("value,outcome,K,monotone"));
    lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn sweep_lambda_keeps_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = tandem(
        dir.path(),
        &[
            "sweep", "--param", "lambda", "--from", "0.25", "--to", "4", "--step", "0.25", "--mu1",
            "1", "--mu2", "1", "--R", "4", "--c1", "1", "--c2", "1",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = sweep_rows(dir.path());
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r[1] == "finite" && r[2] == "3" && r[3] == "true"));
}

#[test]
fn sweep_reward_viability_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let out = tandem(
        dir.path(),
        &[
            "sweep", "--param", "R", "--from", "0", "--to", "2", "--step", "0.5", "--lambda", "1",
            "--mu1", "1", "--mu2", "1", "--c1", "1", "--c2", "1",
        ],
    );
    assert_eq!(code(&out), 0);
    let rows = sweep_rows(dir.path());
    let ks: Vec<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(ks, vec!["0", "0", "0", "0", "1"]);
}

#[test]
fn sweep_threshold_grows_with_reward_when_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let out = tandem(
        dir.path(),
        &[
            "sweep", "--param", "R", "--from", "0", "--to", "30", "--step", "0.75", "--lambda",
            "1", "--mu1", "1.5", "--mu2", "0.8", "--c1", "0.5", "--c2", "2",
        ],
    );
    assert_eq!(code(&out), 0);
    let rows = sweep_rows(dir.path());
    assert!(rows.iter().all(|r| r[3] == "true"));
    let ks: Vec<usize> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(ks.windows(2).all(|w| w[0] <= w[1]), "{ks:?}");
    assert!(ks.last().unwrap() > &ks[0]);
}

#[test]
fn sweep_rejects_empty_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--param", "R", "--from", "2", "--to", "1", "--step", "0.5"];
    args.extend(UNIT);
    assert_eq!(code(&tandem(dir.path(), &args)), 2);
    let mut args = vec!["sweep", "--param", "R", "--from", "0", "--to", "1", "--step", "0"];
    args.extend(UNIT);
    assert_eq!(code(&tandem(dir.path(), &args)), 2);
    let mut args = vec!["sweep", "--param", "mu1", "--from", "0", "--to", "1", "--step", "0.5"];
    args.extend(UNIT);
    assert_eq!(code(&tandem(dir.path(), &args)), 2);
}

#[test]
fn validate_quick_and_negative_self_test() {
    let dir = tempfile::tempdir().unwrap();
    let start = std::time::Instant::now();
    let out = tandem(dir.path(), &["validate", "--quick"]);
    assert!(start.elapsed().as_secs_f64() < 5.0);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().all(|l| l.starts_with("PASS")));

    let out = tandem(dir.path(), &["validate", "--quick", "--self-test-negative"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta1_t2_closed_form"));
}
