use std::path::Path;
use std::process::{Command, Output};

fn mixdta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixdta")).args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

/// Writes the bundled scenarios into `dir` and trims the iteration budgets.
fn bundle(dir: &Path) {
    let out = mixdta(&["nguyen", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    for name in ["scenario.json", "scenario_tolled.json"] {
        let p = dir.join(name);
        let s = std::fs::read_to_string(&p).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&s).unwrap();
        v["solver"]["max_iterations"] = 3.into();
        if let Some(t) = v.get_mut("toll") {
            t["max_outer_iterations"] = 2.into();
        }
        std::fs::write(&p, v.to_string()).unwrap();
    }
}

#[test]
fn validate_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    bundle(dir.path());
    let out = mixdta(&["validate", dir.path().join("scenario.json").to_str().unwrap()]);
    assert!(out.status.success());
    let s = text(&out.stdout);
    assert!(s.starts_with("ok: nguyen"), "{s}");
    assert!(s.contains("19 links"), "{s}");
}

#[test]
fn validate_fails_on_missing_demand() {
    let dir = tempfile::tempdir().unwrap();
    bundle(dir.path());
    std::fs::remove_file(dir.path().join("demand.json")).unwrap();
    let out = mixdta(&["validate", dir.path().join("scenario.json").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("stage 'demand'"), "{}", text(&out.stderr));
}

#[test]
fn equilibrate_then_nfd() {
    let dir = tempfile::tempdir().unwrap();
    bundle(dir.path());
    let run = dir.path().join("run");
    let out = mixdta(&[
        "equilibrate",
        dir.path().join("scenario.json").to_str().unwrap(),
        "--so-ratio",
        "0.5",
        "--out",
        run.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(run.join("manifest.json").is_file());
    let out = mixdta(&["nfd", run.join("so_0.50/untolled").to_str().unwrap(), "--network"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).lines().count() > 1);
    assert!(text(&out.stderr).contains("k_cr_veh_km="));
}

#[test]
fn sweep_prints_one_row_per_ratio_and_toll_state() {
    let dir = tempfile::tempdir().unwrap();
    bundle(dir.path());
    let out = mixdta(&[
        "--seed",
        "5",
        "--threads",
        "2",
        "sweep",
        dir.path().join("scenario_tolled.json").to_str().unwrap(),
        "--ratios",
        "0,0.5",
        "--out",
        dir.path().join("sweep").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    // Header, then untolled and tolled rows for each ratio.
    assert_eq!(text(&out.stdout).lines().count(), 5, "{}", text(&out.stdout));
}

#[test]
fn price_requires_a_toll_section() {
    let dir = tempfile::tempdir().unwrap();
    bundle(dir.path());
    let out = mixdta(&["price", dir.path().join("scenario.json").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("no toll section"));
}

#[test]
fn rejects_bad_ratio() {
    let dir = tempfile::tempdir().unwrap();
    bundle(dir.path());
    let out = mixdta(&[
        "equilibrate",
        dir.path().join("scenario.json").to_str().unwrap(),
        "--so-ratio",
        "1.5",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).starts_with("error:"));
}
