use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rig_cli::RunManifest;
use rig_core::BeaconResult;

fn rig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rig")).args(args).output().expect("binary runs")
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn game_analyze_writes_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("game");
    let o = rig(&["game-analyze", "--m", "8", "--f", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("unique NE: uniform"));
    let csv = std::fs::read_to_string(out.join("matrix.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("1,1,1,0,0,-1,-1,-1"));
    assert_eq!(csv.lines().count(), 8);
    assert!(manifest(&out).verify(&out));
}

#[test]
fn game_analyze_rejects_bad_density() {
    let o = rig(&["game-analyze", "--m", "6", "--f", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gcd(f,m) must be 1"));
}

#[test]
fn withholder_is_confiscated_without_moving_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| -> (PathBuf, BeaconResult) {
        let out = dir.path().join(name);
        let o = rig(&["beacon-run", "--scenario", &scenario(name), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        let result = BeaconResult::from_json(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
        (out, result)
    };
    let (_, honest) = run("honest-commit.toml");
    let (out, withheld) = run("withholder-commit.toml");
    assert_eq!(honest.v, withheld.v);
    assert_eq!(withheld.confiscations.len(), 1);
    let m = manifest(&out);
    assert!(m.verify(&out));
    assert!(m.scenario_sha256.is_some());
    assert_eq!(m.artifacts.len(), 2);
}

#[test]
fn bad_timing_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = rig(&["beacon-run", "--scenario", &scenario("bad-timing.toml"), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("T_commit > Δ"));
}

#[test]
fn missing_scenario_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = rig(&["beacon-run", "--scenario", "/no/such/file.toml", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn many_sessions_then_stats() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("honest-sessions.toml")).unwrap();
    let small = text.replace("sessions = 200", "sessions = 12");
    assert_ne!(small, text, "scenario no longer sets sessions = 200");
    let path = dir.path().join("s.toml");
    std::fs::write(&path, small).unwrap();
    let out = dir.path().join("runs");
    let o = rig(&["beacon-run", "--scenario", path.to_str().unwrap(), "--seed", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("results/00011.json").exists());
    assert!(out.join("summary.csv").exists());
    assert!(manifest(&out).verify(&out));

    let pattern = format!("{}/results/*.json", out.display());
    let o = rig(&["stats", &pattern, "--m", "16"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("# files,12"));
    assert!(s.contains("# total_payoff,0"));
    assert_eq!(s.lines().filter(|l| !l.starts_with('#')).count(), 17);
}

#[test]
fn stats_needs_matching_files() {
    let dir = tempfile::tempdir().unwrap();
    let pattern = format!("{}/*.json", dir.path().display());
    let o = rig(&["stats", &pattern, "--m", "16"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no result files"));
}

#[test]
fn pvss_demo_reconstructs() {
    let o = rig(&["pvss-demo", "--seed", "3"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("need 2 shares, got 1"));
    assert_eq!(s, stdout(&rig(&["pvss-demo", "--seed", "3"])));
}

#[test]
fn single_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("epochs.toml")).unwrap();
    let one = text.replace("count = 100", "count = 1");
    assert_ne!(one, text, "scenario no longer sets count = 100");
    let path = dir.path().join("e.toml");
    std::fs::write(&path, one).unwrap();
    let out = dir.path().join("epochs");
    let o = rig(&["epochs", "--scenario", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let seeds = std::fs::read_to_string(out.join("seeds.csv")).unwrap();
    // Header and one epoch row carrying both v_0 and v_1.
    assert_eq!(seeds.lines().count(), 2, "{seeds}");
    assert!(manifest(&out).verify(&out));
}
