use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn reachtrack(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reachtrack"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Tiny grids and short horizons so the whole pipeline runs in seconds.
fn write_manifest(dir: &Path) {
    let m = json!({
        "out": "art",
        "grids": {
            "vertical-tracking": [41, 17],
            "vertical-game": [21, 9, 21],
            "horizontal-tracking": [9, 9, 5, 5],
            "horizontal-game": [10, 6, 3, 3, 10, 6],
            "attacker-reach": [46, 26]
        },
        "config": {
            "vertical_tracking": {"horizon": 2.0, "cfl": 0.9, "tolerance": 0.001, "max_iterations": 1000000, "snapshot_interval": null, "stop_on_convergence": true},
            "vertical_game": {"horizon": 3.0, "cfl": 0.9, "tolerance": 0.001, "max_iterations": 1000000, "snapshot_interval": 0.1, "stop_on_convergence": false},
            "horizontal_tracking": {"horizon": 0.5, "cfl": 0.9, "tolerance": 0.001, "max_iterations": 1000000, "snapshot_interval": null, "stop_on_convergence": false},
            "horizontal_game": {"horizon": 2.0, "cfl": 0.9, "tolerance": 0.001, "max_iterations": 1000000, "snapshot_interval": null, "stop_on_convergence": true},
            "attacker_reach": {"horizon": 15.0, "cfl": 0.9, "tolerance": 0.001, "max_iterations": 1000000, "snapshot_interval": 0.1, "stop_on_convergence": false},
            "variant": "invariant_set",
            "tracking_anchor": null,
            "seed": 11
        }
    });
    std::fs::write(dir.join("manifest.json"), m.to_string()).unwrap();
}

#[test]
fn game_solve_requires_tracking_artifact() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(dir.path());
    let o = reachtrack(dir.path(), &["--manifest", "manifest.json", "solve", "horizontal-game"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("horizontal-tracking"), "{}", stderr(&o));
}

#[test]
fn solve_reports_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(dir.path());
    let o = reachtrack(dir.path(), &["--manifest", "manifest.json", "solve", "vertical-tracking"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("vertical-tracking: grid [41, 17]"), "{out}");
    assert!(out.contains("B_z at level 1"), "{out}");
    let field = dir.path().join("art/vertical_tracking.hjvf");
    let first = std::fs::read(&field).unwrap();
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("art/vertical_tracking.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 11);
    assert!(dir.path().join("art/manifest.json").exists());

    let o = reachtrack(dir.path(), &["--manifest", "manifest.json", "solve", "vertical-tracking"]);
    assert!(stdout(&o).contains("fresh artifact"));
    let o = reachtrack(dir.path(), &["--manifest", "manifest.json", "solve", "vertical-tracking", "--force"]);
    assert!(o.status.success());
    assert_eq!(first, std::fs::read(&field).unwrap());
}

#[test]
fn full_pipeline_classify_and_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_manifest(d);
    let o = reachtrack(d, &["--manifest", "manifest.json", "solve", "all"]);
    assert!(o.status.success(), "{}", stderr(&o));

    std::fs::write(d.join("empty.json"), "[]").unwrap();
    let o = reachtrack(d, &["--manifest", "manifest.json", "classify", "--states", "empty.json", "--strict"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["results"], json!([]));

    let states = json!([[20.0, 10.0, 5.0, 0.0, 0.0, 0.0, 2.0, 10.0, 5.0]]);
    std::fs::write(d.join("states.json"), states.to_string()).unwrap();
    let o = reachtrack(d, &["--manifest", "manifest.json", "classify", "--states", "states.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["results"][0]["verdict"], "AttackerGuaranteed");
    assert_eq!(v["results"][0]["rule"], "Prop1");

    let o = reachtrack(d, &["--manifest", "manifest.json", "classify", "--sample", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["results"].as_array().unwrap().len(), 20);
    assert_eq!(v["seed"], 11);

    let o = reachtrack(d, &["--manifest", "manifest.json", "simulate", "--states", "states.json", "--attacker", "goal-seeking"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("AttackerWins"), "{}", stdout(&o));
    assert!(d.join("art/sims/run_0000.csv").exists());
    assert!(d.join("art/sims/summary.json").exists());

    // A different capture distance invalidates every stored field.
    let mut scenario = serde_json::to_value(reachtrack::geometry::Scenario::reference()).unwrap();
    scenario["d_z"] = json!(1.5);
    std::fs::write(d.join("scenario.json"), scenario.to_string()).unwrap();
    let o = reachtrack(d, &["--manifest", "manifest.json", "--scenario", "scenario.json", "classify", "--states", "states.json"]);
    assert!(!o.status.success());
    assert!(stderr(&o).to_lowercase().contains("stale"), "{}", stderr(&o));
}

#[test]
fn idle_agents_time_out() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("states.json"), "[[20, 10, 5, 0, 0, 0, 40, 20, 5]]").unwrap();
    let o = reachtrack(
        d,
        &["simulate", "--states", "states.json", "--defender", "idle", "--attacker", "constant=0,0,0", "--duration", "1"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("Timeout"), "{}", stdout(&o));
}

#[test]
fn export_slice_contract() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_manifest(d);
    assert!(reachtrack(d, &["--manifest", "manifest.json", "solve", "vertical-tracking"]).status.success());
    let o = reachtrack(d, &["export-slice", "art/vertical_tracking.hjvf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 1 + 41 * 17);
    let o = reachtrack(d, &["export-slice", "art/vertical_tracking.hjvf", "--fix", "0=0.1", "--fix", "1=0"]);
    assert!(!o.status.success());
}

#[test]
fn oracle_diff_prints_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let o = reachtrack(dir.path(), &["oracle-diff", "vertical-game", "--grid", "11x9x11", "--horizon", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("max |diff|") && out.contains("boundary"), "{out}");
    assert!(dir.path().join("artifacts/oracle-diff/vertical-game.oracle.hjvf").exists());
}
