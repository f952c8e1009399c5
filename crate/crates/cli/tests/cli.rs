use std::process::{Command, Output};

fn vdv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vdv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn dump_scenario_prints_loadable_json() {
    let o = vdv(&["dump-scenario", "set2"]);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(json["name"], "set2");
    assert_eq!(json["t_end"], 400.0);
    assert_eq!(json["checkpoints"].as_array().unwrap().len(), 10);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("set2.json");
    std::fs::write(&path, stdout(&o)).unwrap();
    let o = vdv(&["matrices", "--scenario", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("# A11 3x3"));
}

#[test]
fn unknown_scenario_fails() {
    let o = vdv(&["dump-scenario", "set9"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("set9"));
    let o = vdv(&["run", "--scenario", "builtin:set9", "--methods", "ekf"]);
    assert!(!o.status.success());
    let o = vdv(&["run", "--methods", "carleman,particle"]);
    assert!(!o.status.success());
}

#[test]
fn run_writes_csv_and_charts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = vdv(&[
        "run",
        "--scenario",
        "builtin:set1",
        "--t-end",
        "10",
        "--mc-paths",
        "100",
        "--threads",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files = stdout(&o);
    assert_eq!(files.lines().count(), 4 + 8);
    let checkpoints = std::fs::read_to_string(out.join("checkpoints.csv")).unwrap();
    assert_eq!(checkpoints.lines().count(), 1 + 3);
    let traj = std::fs::read_to_string(out.join("trajectories.csv")).unwrap();
    assert_eq!(traj.lines().count(), 1 + 1001);
    assert!(out.join("variance_x2.svg").exists());
}

#[test]
fn off_grid_step_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = vdv(&[
        "run",
        "--dt",
        "0.3",
        "--t-end",
        "1.5",
        "--methods",
        "ekf",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid"));
}
