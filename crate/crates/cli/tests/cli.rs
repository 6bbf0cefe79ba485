use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bcor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcor")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const CONFIG: &str = r#"{
    "setting": "well_specified", "N": 8, "T": 5, "B": 2, "k": 4, "d": 4,
    "seeds": {"start": 0, "count": 2},
    "learners": ["random", "ts-whittle"],
    "mcmc": {"n_warmup": 20, "n_rewarmup": 5}
}"#;

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    assert_eq!(text.trim().lines().count(), 1, "stderr: {text}");
    serde_json::from_str(text.trim()).expect("one-line JSON error")
}

#[test]
fn run_aggregate_plot_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let runs = dir.path().join("runs.csv");
    let agg = dir.path().join("agg.csv");
    let plot = dir.path().join("plot.csv");

    let out = bcor(&["run", "--config", &cfg, "--out", runs.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&runs).unwrap();
    assert_eq!(text.lines().next().unwrap(), "seed,learner,t,step_reward,time_avg_reward,cum_reward");
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 5);

    let out = bcor(&["aggregate", runs.to_str().unwrap(), "--out", agg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(&agg).unwrap();
    assert_eq!(text.lines().next().unwrap(), "learner,t,mean_time_avg,se_time_avg,mean_centered,se_centered,n_seeds");
    assert_eq!(text.lines().count(), 1 + 2 * 5);

    let out = bcor(&["plotdata", agg.to_str().unwrap(), "--out", plot.to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(&plot).unwrap();
    assert_eq!(text.lines().next().unwrap(), "learner,t,mean_centered,lower,upper");
    assert!(text.lines().any(|l| l == "random,1,0,0,0"));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = bcor(&["run", "--config", &cfg, "--seed-start", "7", "--seed-count", "3", "--learners", "random,ucw-whittle,oracle-greedy"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 3 * 5);
    assert!(text.lines().nth(1).unwrap().starts_with("7,oracle-greedy,1,"));
    assert!(text.lines().last().unwrap().starts_with("9,ucw-whittle,5,"));
}

#[test]
fn reruns_and_worker_counts_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let a = bcor(&["run", "--config", &cfg, "--workers", "1"]);
    let b = bcor(&["run", "--config", &cfg, "--workers", "1"]);
    let c = bcor(&["run", "--config", &cfg, "--workers", "4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn gen_writes_valid_instance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let path = dir.path().join("inst.json");
    let out = bcor(&["gen", "--config", &cfg, "--seed-start", "4", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let inst = bcor_core::RmabInstance::from_json(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!((inst.n_arms, inst.horizon, inst.budget, inst.meta.seed), (8, 5, 2, 4));
    assert_eq!(inst.meta.setting, "well_specified");

    // The generated file can drive a run.
    let with_instance = CONFIG.replace("\"k\": 4", &format!("\"k\": 4, \"instance\": {:?}", path.to_str().unwrap()));
    let cfg2 = dir.path().join("c2.json");
    fs::write(&cfg2, with_instance).unwrap();
    let out = bcor(&["run", "--config", cfg2.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn errors_are_one_line_json() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), &CONFIG.replace("\"k\": 4", "\"k\": 4, \"kk\": 1"));
    let out = bcor(&["run", "--config", &bad]);
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["error"], "config");

    let good = write_config(dir.path(), CONFIG);
    let out = bcor(&["run", "--config", &good, "--learners", "random,nope"]);
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["error"], "unknown_learner");

    let out = bcor(&["aggregate", dir.path().join("missing.csv").to_str().unwrap()]);
    assert_eq!(stderr_json(&out)["error"], "failure");

    let out = bcor(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");
}

#[test]
fn aggregate_without_center_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("[\"random\", \"ts-whittle\"]", "[\"ts-whittle\"]"));
    let runs = dir.path().join("runs.csv");
    assert!(bcor(&["run", "--config", &cfg, "--out", runs.to_str().unwrap()]).status.success());
    let out = bcor(&["aggregate", runs.to_str().unwrap()]);
    assert_eq!(stderr_json(&out)["error"], "missing_centering_learner");
}

#[test]
fn check_subcommand_passes() {
    let out = bcor(&["check"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}
