use ffplan::model::{identity_quat, ObstacleBox};
use ffplan::ocp::{parse_trajectory_csv, write_problem, ProblemParameters};
use nalgebra::Vector3;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn ffplan(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffplan")).current_dir(dir).args(args).output().unwrap()
}

fn short_hop() -> ProblemParameters {
    ProblemParameters::rest_to_rest(Vector3::zeros(), identity_quat(), Vector3::new(0.6, -0.2, 0.1), identity_quat(), 20, 0.5)
}

#[test]
fn solve_writes_trajectory_and_plot() {
    let dir = scratch("solve");
    std::fs::write(dir.join("p.txt"), write_problem(&short_hop())).unwrap();
    let out = ffplan(&dir, &["solve", "--problem", "p.txt", "--out", "t.csv", "--plot", "t.svg"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = parse_trajectory_csv(&std::fs::read_to_string(dir.join("t.csv")).unwrap()).unwrap();
    assert_eq!(traj.states.len(), 21);
    assert!((traj.states[20].r - Vector3::new(0.6, -0.2, 0.1)).norm() <= 0.01 + 1e-4);
    assert!(std::fs::read_to_string(dir.join("t.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn solver_failure_exits_one() {
    let dir = scratch("failure");
    let goal = Vector3::new(1.0, 0.0, 0.0);
    let mut p = short_hop().with_obstacle(ObstacleBox::new(goal, Vector3::repeat(0.2)).unwrap());
    p.r_goal = goal;
    std::fs::write(dir.join("p.txt"), write_problem(&p)).unwrap();
    let out = ffplan(&dir, &["solve", "--problem", "p.txt", "--out", "t.csv"]);
    assert_eq!(out.status.code(), Some(1));
    // the last iterate is still written for inspection
    assert!(dir.join("t.csv").exists());
}

#[test]
fn invalid_input_exits_two() {
    let dir = scratch("invalid");
    std::fs::write(dir.join("p.txt"), "horizon = banana\n").unwrap();
    std::fs::write(dir.join("bad.ffds"), b"not a dataset").unwrap();
    std::fs::write(dir.join("bad.csv"), "id,category\n1,x\n").unwrap();
    std::fs::write(dir.join("gusto.txt"), "gusto.rho0 = 2.0\n").unwrap();
    for args in [
        &["solve", "--problem", "p.txt"][..],
        &["train", "--data", "bad.ffds", "--out", "m.ffnn"],
        &["report", "--input", "bad.csv"],
        &["gen-data", "--count", "1", "--dt", "-1", "--out", "d.ffds"],
        &["--config", "gusto.txt", "gen-data", "--count", "1", "--out", "d.ffds"],
    ] {
        let out = ffplan(&dir, args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn io_errors_exit_three() {
    let dir = scratch("io");
    std::fs::write(dir.join("p.txt"), write_problem(&short_hop())).unwrap();
    for args in [
        &["solve", "--problem", "missing.txt"][..],
        &["solve", "--problem", "p.txt", "--out", "no/such/dir/t.csv"],
        &["bench", "--model", "missing.ffnn"],
        &["report", "--input", "missing.csv"],
    ] {
        let out = ffplan(&dir, args);
        assert_eq!(out.status.code(), Some(3), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn report_reads_bench_output() {
    let dir = scratch("report");
    std::fs::write(dir.join("suite.txt"), "count.trans_only = 1\ncount.trans_rot = 1\ncount.obs_seen = 0\ncount.obs_ood = 0\nN = 12\ndt = 1.5\n").unwrap();
    let steps: [&[&str]; 3] = [
        &["gen-data", "--env", "jem", "--count", "12", "--horizon", "12", "--dt", "1.5", "--seed", "2", "--out", "d.ffds"],
        &["train", "--data", "d.ffds", "--epochs", "5", "--batch", "4", "--out", "m.ffnn"],
        &["bench", "--suite", "suite.txt", "--model", "m.ffnn", "--out", "b.csv", "--plot", "b.svg"],
    ];
    for s in steps {
        let out = ffplan(&dir, s);
        assert_eq!(out.status.code(), Some(0), "{s:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = ffplan(&dir, &["report", "--input", "b.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("TransOnly") && table.contains("Trans+Rot"), "{table}");
    assert!(std::fs::read_to_string(dir.join("b.svg")).unwrap().contains("<svg"));
}
