use rampup_core::config::ConfigFile;
use rampup_core::report::{
    parse_surface_csv, parse_trajectory_jsonl, round9, run_policy, run_tune, trajectory_jsonl, PolicyKind,
};
use rampup_core::tuning::GridSpec;

#[test]
fn trajectories_round_trip_through_jsonl() {
    let cfg = ConfigFile::iter_hybrid();
    let out = run_policy(&cfg, PolicyKind::Random, None, 2, 5).unwrap();
    assert_eq!(out.trajectories.len(), 2);
    let text = trajectory_jsonl(&out.trajectories[0]);
    assert_eq!(text.lines().count(), 150);
    let back = parse_trajectory_jsonl(&text).unwrap();
    assert_eq!(back.len(), 150);
    assert_eq!(trajectory_jsonl(&back), text);
    assert_eq!(back[10].reward, round9(out.trajectories[0][10].reward));
}

#[test]
fn run_summary_mean_matches_episodes() {
    let cfg = ConfigFile::iter_hybrid();
    let out = run_policy(&cfg, PolicyKind::Random, None, 3, 1).unwrap();
    let mean = out.summary.episodes.iter().map(|e| e.j).sum::<f64>() / 3.0;
    assert_eq!(out.summary.mean_j, round9(mean));
    assert!(run_policy(&cfg, PolicyKind::OpenLoop, None, 2, 0).is_err());
}

#[test]
fn surface_csv_round_trips() {
    let cfg = ConfigFile::iter_hybrid();
    let grid = GridSpec { n: 2, m: 3, ..GridSpec::default() };
    let t = run_tune(&cfg, &grid, Some(2.0)).unwrap();
    assert!(t.csv.starts_with("kp,ki,J,J_clipped\n"));
    let rows = parse_surface_csv(&t.csv).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.j_clipped == r.j.max(2.0)));
    assert_eq!(t.best.k_p, t.surface.best_gains.k_p);
}

#[test]
fn round9_keeps_nine_significant_digits() {
    assert_eq!(round9(1.23456789012), 1.23456789);
    assert_eq!(round9(-0.000123456789123), -0.000123456789);
    assert_eq!(round9(0.0), 0.0);
}
