use std::path::Path;
use std::process::{Command, Output};

fn rampup(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rampup"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn run_writes_trajectories_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = rampup(&["run", "--policy", "random", "--episodes", "3", "--seed", "4"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for k in 0..3 {
        let text = std::fs::read_to_string(out.join(format!("trajectory_ep{k}.jsonl"))).unwrap();
        assert_eq!(text.lines().count(), 150);
        for line in text.lines() {
            serde_json::from_str::<serde_json::Value>(line).unwrap();
        }
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["policy"], "random");
    assert_eq!(summary["episodes"].as_array().unwrap().len(), 3);

    let again = tmp.path().join("again");
    assert!(rampup(&["run", "--policy", "random", "--episodes", "3", "--seed", "4"], &again).status.success());
    for name in ["trajectory_ep0.jsonl", "trajectory_ep2.jsonl", "summary.json"] {
        assert_eq!(std::fs::read(out.join(name)).unwrap(), std::fs::read(again.join(name)).unwrap());
    }
}

#[test]
fn one_point_tune_writes_one_row() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rampup(&["tune", "--n", "1", "--m", "1"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("surface.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert_eq!(csv.lines().next(), Some("kp,ki,J,J_clipped"));
    let best: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("best_gains.json")).unwrap()).unwrap();
    assert_eq!(best["k_p"], 0.0);
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"env": {"gamma": 3}}"#).unwrap();
    let o = rampup(&["run", "--policy", "pi", "--config", bad.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));

    let o = rampup(&["run", "--policy", "nonsense"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let o = rampup(&["run", "--policy", "open_loop", "--episodes", "2"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn io_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.json");
    let o = rampup(&["run", "--policy", "pi", "--config", missing.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));

    let file = tmp.path().join("occupied");
    std::fs::write(&file, "x").unwrap();
    let o = rampup(&["run", "--policy", "pi"], &file.join("sub"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_is_read_not_written() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("cfg.json");
    let o = rampup(&["config"], &path);
    assert!(o.status.success());
    let before = std::fs::read(&path).unwrap();
    let o = rampup(&["run", "--policy", "open_loop", "--config", path.to_str().unwrap()], &tmp.path().join("o"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&path).unwrap(), before);
}
