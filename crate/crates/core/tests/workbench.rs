use mixdta::Error;
use mixdta::workbench::{
    nfd_from_run_dir, nguyen_scenario, read_link_states, ratio_dir, run_scenario, write_nguyen_bundle,
    LoadedScenario, RunOptions,
};

#[test]
fn bundle_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    write_nguyen_bundle(dir.path()).unwrap();
    let mut sc = LoadedScenario::load(&dir.path().join("scenario.json")).unwrap();
    sc.scenario.so_ratios = vec![0.0, 1.0];
    sc.scenario.solver.max_iterations = 4;
    let out = dir.path().join("run");
    let manifest = run_scenario(&sc, &out, &RunOptions::default()).unwrap();

    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3, "header plus one row per ratio");
    for f in &manifest.files {
        assert!(out.join(&f.path).is_file(), "{} listed but missing", f.path);
    }

    let run = out.join(ratio_dir(1.0)).join("untolled");
    let states = read_link_states(&sc.network, std::fs::File::open(run.join("link_states.csv")).unwrap()).unwrap();
    assert_eq!(states.len(), sc.scenario.clock.intervals);
    let (series, kcr) = nfd_from_run_dir(&run, true).unwrap();
    assert_eq!(series.len(), states.len());
    assert!(kcr.k_cr > 0.0);
}

#[test]
fn missing_network_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    write_nguyen_bundle(dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("network.json")).unwrap();
    match LoadedScenario::load(&dir.path().join("scenario.json")) {
        Err(Error::Stage { stage, .. }) => assert_eq!(stage, "network"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn pricing_without_toll_section_runs_untolled() {
    let sc = mixdta::workbench::load_nguyen(nguyen_scenario()).unwrap();
    assert!(sc.scenario.toll.is_none());
    let dir = tempfile::tempdir().unwrap();
    let mut s = sc.clone();
    s.scenario.solver.max_iterations = 2;
    let m = run_scenario(&s, dir.path(), &RunOptions { pricing: true, trajectories: false });
    // No toll section: the run is untolled only.
    let m = m.unwrap();
    assert!(m.files.iter().all(|f| !f.path.contains("tolled/toll_schedule")));
}
