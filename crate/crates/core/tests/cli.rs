//! Exit-code contract and output formats of the `pqlap` binary.

use std::path::Path;
use std::process::{Command, Output};

use pqlap::io::TrajectoryFile;

fn pqlap(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqlap"))
        .args(args)
        .env("PQLAP_OUTPUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn classify_exit_codes() {
    let dir = tmp();
    let run = |a: &[&str]| pqlap(a, dir.path());

    let o = run(&[
        "classify", "--N", "4", "--p", "2.1", "--q", "2.1", "--delta", "4", "--mu", "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "NonexistenceSuperquadratic");
    assert_eq!(v["details"].as_array().unwrap().len(), 8);

    let o = run(&[
        "classify", "--N", "3", "--p", "2", "--q", "2", "--delta", "1", "--mu", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("NotSuperhomogeneous"));

    let o = run(&[
        "classify", "--N", "4", "--p", "1.9", "--q", "1.9", "--delta", "2", "--mu", "2.1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("ExistenceNewSubquadratic"));

    // p < 2 < q falls outside every theorem
    let o = run(&[
        "classify", "--N", "4", "--p", "1.7", "--q", "2.3", "--delta", "3", "--mu", "3",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("Unknown"));

    for bad in [
        vec![
            "classify", "--N", "4", "--p", "-1", "--q", "2", "--delta", "1", "--mu", "1",
        ],
        vec![
            "classify", "--N", "1", "--p", "2", "--q", "2", "--delta", "1", "--mu", "1",
        ],
        vec!["classify", "--N", "4", "--p", "2"],
        vec![
            "classify", "--N", "4", "--p", "x", "--q", "2", "--delta", "1", "--mu", "1",
        ],
    ] {
        assert_eq!(run(&bad).status.code(), Some(1), "{bad:?}");
    }
}

#[test]
fn solve_writes_trajectory_and_residual() {
    let dir = tmp();
    let o = pqlap(
        &[
            "solve", "--N", "3", "--p", "2", "--q", "2", "--delta", "2", "--mu", "2", "--R", "1", "--output",
            "sol.json",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let file = TrajectoryFile::read(&dir.path().join("sol.json")).unwrap();
    assert!(file.residual.unwrap() <= 1e-6);
    let last = file.nodes.last().unwrap();
    assert_eq!(last[0], 1.0);
    assert!(last[1].abs() < 1e-6 && last[2].abs() < 1e-6);
}

#[test]
fn solve_failures_and_usage() {
    let dir = tmp();
    let o = pqlap(
        &[
            "solve", "--N", "4", "--p", "2.1", "--q", "2.1", "--delta", "4", "--mu", "4", "--R", "1",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["error"].is_string());
    assert_eq!(v["scan"].as_array().unwrap().len(), 60);

    // a narrow scan without any polarity change: no bracket at all
    let o = pqlap(
        &[
            "solve", "--N", "4", "--p", "2.1", "--q", "2.1", "--delta", "4", "--mu", "4", "--R", "1", "--b-min", "10",
            "--count", "5",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("no bracket found"));

    let o = pqlap(
        &["solve", "--N", "3", "--p", "2", "--q", "2", "--delta", "2", "--mu", "2"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn energy_check_and_operator_residual() {
    let dir = tmp();
    let solve = pqlap(
        &[
            "solve", "--N", "4", "--p", "1.9", "--q", "1.9", "--delta", "2", "--mu", "2", "--R", "1", "--output",
            "s.json",
        ],
        dir.path(),
    );
    assert_eq!(solve.status.code(), Some(0));
    let path = dir.path().join("s.json");
    let path = path.to_str().unwrap();

    let o = pqlap(&["energy-check", "--input", path], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["kind"], "E2");
    assert_eq!(v["derivative_check_passed"], true);

    // an impossible tolerance turns the same check into a failure
    let o = pqlap(&["energy-check", "--input", path, "--tolerance", "1e-30"], dir.path());
    assert_eq!(o.status.code(), Some(4));

    let o = pqlap(&["energy-check", "--input", "missing.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    let o = pqlap(&["operator-residual", "--input", path], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["residual"].as_f64().unwrap() <= 1e-4 * v["norm"].as_f64().unwrap());

    let o = pqlap(&["operator-residual", "--input", path, "--threshold", "0"], dir.path());
    assert_eq!(o.status.code(), Some(4));

    std::fs::write(dir.path().join("bad.json"), r#"{"params": 3}"#).unwrap();
    let o = pqlap(&["operator-residual", "--input", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn energy_check_on_ground_state() {
    let dir = tmp();
    let o = pqlap(
        &[
            "shoot", "--N", "4", "--p", "2.1", "--q", "2.1", "--delta", "4", "--mu", "4", "--b0", "1", "--r-max",
            "1e12", "--output", "gs.json",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let path = dir.path().join("gs.json");
    let o = pqlap(&["energy-check", "--input", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["kind"], "E1");
    assert!(v["tail_error_estimate"].as_f64().unwrap() > 0.0);
}

#[test]
fn region_data_csv() {
    let dir = tmp();
    let o = pqlap(&["region-data", "--figure", "m-window-sub", "--n-max", "6"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("N,lower,upper"));
    assert!(lines.nth(1).unwrap().starts_with("3,1.5,"));

    let o = pqlap(
        &[
            "region-data",
            "--figure",
            "delta-mu",
            "--N",
            "4",
            "--m",
            "2",
            "--mu-min",
            "1",
            "--mu-max",
            "5",
            "--mu-count",
            "5",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let row = stdout(&o).lines().find(|l| l.starts_with("3.0,")).unwrap().to_string();
    let cells: Vec<&str> = row.split(',').collect();
    assert!((cells[2].parse::<f64>().unwrap() - 3.0).abs() < 1e-12);

    let o = pqlap(
        &[
            "region-data",
            "--figure",
            "delta-mu",
            "--N",
            "4",
            "--m",
            "1.9",
            "--output",
            "fig.csv",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(dir.path().join("fig.csv"))
        .unwrap()
        .starts_with("mu,"));

    let o = pqlap(&["region-data", "--figure", "figure-9"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn scan_csv_has_one_row_per_point() {
    let dir = tmp();
    let o = pqlap(
        &[
            "scan", "--N", "4", "--p", "1.9", "--q", "1.9", "--delta", "4", "--mu", "4", "--count", "7",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 8);
    assert!(text.starts_with("b,outcome,radius,error"));
}
