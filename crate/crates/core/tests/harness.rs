use std::fs;
use std::path::Path;

use k4flab_core::harness::*;
use k4flab_core::Error;

fn greedy_cfg(dir: &Path, seeds: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(
        Experiment::Greedy(GreedyParams {
            checkpoints: vec!["r=0.2".into()],
            ..Default::default()
        }),
        vec![40, 60],
        seeds.parse().unwrap(),
        dir,
    );
    cfg.threads = 1;
    cfg
}

fn cell_bytes(dir: &Path, stem: &str) -> Vec<u8> {
    fs::read(dir.join(CELL_DIR).join(format!("{stem}.csv"))).unwrap()
}

#[test]
fn empty_seed_range_gives_empty_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_experiment(&greedy_cfg(tmp.path(), "4..4")).unwrap();
    assert!(out.manifest.cells.is_empty());
    assert!(tmp.path().join(MANIFEST_FILE).exists());
}

#[test]
fn rerun_resumes_without_recomputation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = greedy_cfg(tmp.path(), "0..3");
    let first = run_experiment(&cfg).unwrap();
    assert_eq!(first.computed, 6);
    let before = cell_bytes(tmp.path(), "greedy_n40_s1");
    let second = run_experiment(&cfg).unwrap();
    assert_eq!(second.computed, 0);
    assert_eq!(second.resumed, 6);
    assert_eq!(cell_bytes(tmp.path(), "greedy_n40_s1"), before);
}

#[test]
fn corrupt_cell_is_recomputed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = greedy_cfg(tmp.path(), "0..2");
    run_experiment(&cfg).unwrap();
    let good = cell_bytes(tmp.path(), "greedy_n60_s0");
    let path = tmp.path().join(CELL_DIR).join("greedy_n60_s0.csv");
    fs::write(&path, b"truncated").unwrap();
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.computed, 1);
    assert_eq!(fs::read(&path).unwrap(), good);
}

#[test]
fn multi_cell_matches_single_cell_runs() {
    let both = tempfile::tempdir().unwrap();
    let one = tempfile::tempdir().unwrap();
    let two = tempfile::tempdir().unwrap();
    let mut cfg = greedy_cfg(both.path(), "5..7");
    cfg.threads = 2;
    run_experiment(&cfg).unwrap();
    run_experiment(&greedy_cfg(one.path(), "5..6")).unwrap();
    run_experiment(&greedy_cfg(two.path(), "6..7")).unwrap();
    for n in [40, 60] {
        assert_eq!(
            cell_bytes(both.path(), &format!("greedy_n{n}_s5")),
            cell_bytes(one.path(), &format!("greedy_n{n}_s5"))
        );
        assert_eq!(
            cell_bytes(both.path(), &format!("greedy_n{n}_s6")),
            cell_bytes(two.path(), &format!("greedy_n{n}_s6"))
        );
    }
}

#[test]
fn different_experiment_in_same_dir_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    run_experiment(&greedy_cfg(tmp.path(), "0..1")).unwrap();
    let mut other = greedy_cfg(tmp.path(), "0..1");
    other.master_seed = 99;
    assert!(matches!(run_experiment(&other), Err(Error::Config(_))));
}

#[test]
fn invalid_config_is_structured() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = greedy_cfg(tmp.path(), "0..1");
    cfg.n_grid = vec![60, 3];
    match run_experiment(&cfg) {
        Err(Error::InvalidConfig(v)) => assert_eq!(v.len(), 2, "{v:?}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn every_kind_runs_and_reports() {
    let root = tempfile::tempdir().unwrap();
    let kinds = vec![
        Experiment::Greedy(GreedyParams::default()),
        Experiment::Staged(StagedParams {
            sample_size: 20,
            ..Default::default()
        }),
        Experiment::Survival(SurvivalParams {
            trials: 2000,
            grid_step: 1e-2,
            ..Default::default()
        }),
        Experiment::Ramsey(RamseyParams {
            c: 0.8,
            samples: 50,
            heuristic_budget: 50,
        }),
        Experiment::Trajectory(TrajectoryParams {
            profile: k4flab_core::staged::Profile::Desk,
            step: 1e-3,
        }),
    ];
    let mut dirs = Vec::new();
    for exp in kinds {
        let dir = root.path().join(exp.name());
        let grid = match exp {
            Experiment::Greedy(_) => vec![30, 40, 50],
            Experiment::Survival(_) => vec![20],
            _ => vec![60],
        };
        let mut cfg = ExperimentConfig::new(exp, grid, "0..5".parse().unwrap(), &dir);
        cfg.threads = 1;
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.failed, 0);
        dirs.push(dir);
    }
    let traj = fs::read_dir(root.path().join("trajectory").join(CELL_DIR))
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == "csv")
        })
        .count();
    assert_eq!(traj, 1);
    let summary = root.path().join("summary");
    let rep = report(&dirs, &summary).unwrap();
    for name in [
        "scaling.csv",
        "scaling_fit.json",
        "survival_mc.csv",
        "staged_final.csv",
        "coverage.csv",
        "survival_limit.csv",
    ] {
        assert!(
            summary.join(name).exists(),
            "{name} missing; notes {:?}",
            rep.notes
        );
    }
}
