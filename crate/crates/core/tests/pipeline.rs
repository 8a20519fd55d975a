//! End-to-end artifact pipeline: run, re-parse, reproduce.

use mesasim_core::config::{SimulationConfig, ThresholdSpec};
use mesasim_core::grid::read_snapshot;
use mesasim_core::output::{execute_run, read_two_column_csv};
use mesasim_core::scenarios::DeploymentPreset;

/// Small scenario that still exercises sources, wind, and every artifact.
fn small_config(seed: u64) -> SimulationConfig {
    let mut config = SimulationConfig {
        seed,
        ..SimulationConfig::default()
    };
    config.grid.x_min = -25.0;
    config.grid.x_max = 25.0;
    config.grid.y_min = -25.0;
    config.grid.y_max = 25.0;
    config.grid.z_max = 2.5;
    config.solver.total_steps = 90;
    config.metrics.thresholds = ThresholdSpec::List(vec![1e4, 1e8, 1e12]);
    config.metrics.timeseries_threshold = 1e12;
    config.output.snapshot_times_hours = vec![0.0, 1.0 / 36.0]; // t = 0 and 100 s
    config
}

#[test]
fn run_emits_complete_artifact_set() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(3);
    let summary = execute_run::<f64>(&config, Some(dir.path())).unwrap();

    assert_eq!(summary.steps, 90);
    assert!(summary.budget.released > 0.0);
    assert_eq!(summary.cei.thresholds.len(), 3);

    // every artifact present
    let manifest = dir.path().join("manifest.toml");
    assert!(manifest.exists());
    assert!(summary.artifacts.budget_csv.as_ref().unwrap().exists());
    assert!(summary.artifacts.cei_threshold_csv.exists());
    assert!(summary.artifacts.cei_time_csv.as_ref().unwrap().exists());
    assert_eq!(summary.artifacts.snapshots.len(), 2);
    assert_eq!(summary.artifacts.slabs.len(), 2);

    // budget CSV parses and its last row matches the final budget
    let budget_path = summary.artifacts.budget_csv.as_ref().unwrap();
    let mut reader = csv::Reader::from_path(budget_path).unwrap();
    assert_eq!(
        reader.headers().unwrap(),
        &csv::StringRecord::from(vec![
            "step",
            "time_s",
            "released",
            "in_domain",
            "absorbed_ground",
            "boundary_outflow",
        ])
    );
    let last = reader.records().last().unwrap().unwrap();
    assert_eq!(&last[0], "90");
    let released: f64 = last[2].parse().unwrap();
    assert_eq!(released, summary.budget.released);

    // coverage CSVs parse back and match the in-memory result
    let curve = read_two_column_csv(&summary.artifacts.cei_threshold_csv).unwrap();
    assert_eq!(curve.len(), 3);
    for ((threshold, cei), (expect_th, expect_cei)) in curve
        .iter()
        .zip(summary.cei.thresholds.iter().zip(&summary.cei.cei))
    {
        assert_eq!(threshold, expect_th);
        assert_eq!(cei, expect_cei);
    }
    let series = read_two_column_csv(summary.artifacts.cei_time_csv.as_ref().unwrap()).unwrap();
    assert_eq!(series.len(), 90);

    // snapshots carry the right header and the initial one is all zero
    let first = read_snapshot(&summary.artifacts.snapshots[0]).unwrap();
    assert_eq!(first.time(), 0.0);
    assert!(first.values().iter().all(|&v| v == 0.0));
    let second = read_snapshot(&summary.artifacts.snapshots[1]).unwrap();
    assert_eq!(second.time(), 100.0);
    assert!(second.values().iter().any(|&v| v > 0.0));
}

#[test]
fn manifest_alone_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(9);
    let original = dir.path().join("original");
    let reproduced = dir.path().join("reproduced");
    execute_run::<f64>(&config, Some(&original)).unwrap();

    // feed the emitted manifest back in as the config
    let manifest_config = SimulationConfig::from_path(&original.join("manifest.toml")).unwrap();
    assert_eq!(manifest_config, config);
    execute_run::<f64>(&manifest_config, Some(&reproduced)).unwrap();

    for name in ["budget.csv", "cei_vs_threshold.csv", "cei_vs_time.csv"] {
        let a = std::fs::read(original.join(name)).unwrap();
        let b = std::fs::read(reproduced.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs after manifest round-trip");
    }
}

#[test]
fn different_seeds_give_different_fields() {
    let dir = tempfile::tempdir().unwrap();
    let a = execute_run::<f64>(&small_config(1), Some(&dir.path().join("a"))).unwrap();
    let b = execute_run::<f64>(&small_config(2), Some(&dir.path().join("b"))).unwrap();
    assert_ne!(
        a.cei.cei, b.cei.cei,
        "independent seeds should not produce identical coverage"
    );
}

#[test]
fn single_precision_run_emits_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let summary = execute_run::<f32>(&small_config(4), Some(dir.path())).unwrap();
    assert!(summary.budget.released > 0.0);
    let snapshot = read_snapshot(&summary.artifacts.snapshots[1]).unwrap();
    assert!(snapshot.values().iter().any(|&v| v > 0.0));
}

#[test]
fn presets_fit_the_default_domain() {
    // every preset builds, validates, and runs a few steps on the default grid
    for preset in DeploymentPreset::ALL {
        let mut config = SimulationConfig::default();
        config.deployment.preset = Some(preset);
        config.solver.total_steps = 3;
        let dir = tempfile::tempdir().unwrap();
        let summary = execute_run::<f64>(&config, Some(dir.path())).unwrap();
        assert!(summary.budget.released > 0.0, "{preset} released nothing");
    }
}
