//! Black-box tests of the command-line interface.

use std::path::Path;
use std::process::{Command, Output};

fn mesasim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mesasim"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn small_config_toml() -> &'static str {
    r#"
seed = 5

[grid]
x_min = -25.0
x_max = 25.0
y_min = -25.0
y_max = 25.0
z_min = 0.0
z_max = 2.5
dx = 5.0
dy = 5.0
dz = 0.5

[solver]
total_steps = 60

[metrics]
thresholds = [1e4, 1e8, 1e12]
timeseries_threshold = 1e12

[output]
snapshot_times_hours = [0.016666666666666666]
"#
}

#[test]
fn run_produces_artifacts_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("config.toml"), small_config_toml()).unwrap();

    let out = mesasim(
        &["run", "--config", "config.toml", "--out", "first"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for artifact in [
        "first/manifest.toml",
        "first/budget.csv",
        "first/cei_vs_threshold.csv",
        "first/cei_vs_time.csv",
        "first/snapshots/snapshot_t0000060s.bin",
        "first/slabs/slab_t0000060s.csv",
    ] {
        assert!(dir.path().join(artifact).exists(), "{artifact} missing");
    }

    // byte-identical rerun
    let out = mesasim(
        &["run", "--config", "config.toml", "--out", "second"],
        dir.path(),
    );
    assert!(out.status.success());
    for name in ["budget.csv", "cei_vs_threshold.csv", "cei_vs_time.csv"] {
        let a = std::fs::read(dir.path().join("first").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("second").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn sweep_creates_one_directory_per_preset_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    // keep the sweep quick
    let config = small_config_toml().replace("total_steps = 60", "total_steps = 5");
    std::fs::write(dir.path().join("config.toml"), config).unwrap();

    let out = mesasim(
        &[
            "run",
            "--config",
            "config.toml",
            "--preset",
            "central_patch",
            "--seeds",
            "1..2",
            "--out",
            "sweep",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir
        .path()
        .join("sweep/central_patch_seed1/manifest.toml")
        .exists());
    assert!(dir
        .path()
        .join("sweep/central_patch_seed2/manifest.toml")
        .exists());
}

#[test]
fn preset_all_sweeps_every_arrangement() {
    let dir = tempfile::tempdir().unwrap();
    // domain wide enough for the full 80 m host stripe
    let config = r#"
seed = 2

[grid]
x_min = -50.0
x_max = 50.0
y_min = -10.0
y_max = 10.0
z_min = 0.0
z_max = 2.5
dx = 5.0
dy = 5.0
dz = 0.5

[solver]
total_steps = 5

[metrics]
thresholds = [1e6]
timeseries_threshold = 1e6

[output]
snapshot_times_hours = []
"#;
    std::fs::write(dir.path().join("config.toml"), config).unwrap();
    let out = mesasim(
        &[
            "run",
            "--config",
            "config.toml",
            "--preset",
            "all",
            "--seeds",
            "1..1",
            "--out",
            "sweep",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for preset in [
        "central_patch",
        "uniform_patch",
        "four_corners",
        "perimeter_stripe",
    ] {
        assert!(
            dir.path()
                .join(format!("sweep/{preset}_seed1/cei_vs_threshold.csv"))
                .exists(),
            "{preset} run missing"
        );
    }
}

#[test]
fn check_reports_cfl_and_rejects_bad_timesteps() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ok.toml"), small_config_toml()).unwrap();
    let out = mesasim(&["check", "--config", "ok.toml"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("CFL report"), "{stdout}");
    assert!(stdout.contains("PASS"), "{stdout}");

    let bad = small_config_toml().replace("total_steps = 60", "total_steps = 60\ndt = 5000.0");
    std::fs::write(dir.path().join("bad.toml"), bad).unwrap();
    let out = mesasim(&["check", "--config", "bad.toml"], dir.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("CFL"), "{stderr}");

    let out = mesasim(&["check", "--config", "missing.toml"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn fit_recovers_power_law_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    // noiseless samples of fraction = 0.4429 t^0.1789
    let mut csv = String::from("time_hours,fraction\n");
    for t in [1.0f64, 2.0, 4.0, 8.0, 16.0, 32.0] {
        csv.push_str(&format!("{t},{}\n", 0.4429 * t.powf(0.1789)));
    }
    std::fs::write(dir.path().join("release.csv"), csv).unwrap();

    let out = mesasim(
        &["fit", "--data", "release.csv", "--out", "report.txt"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("0.4429"), "{stdout}");
    assert!(stdout.contains("converged       : true"), "{stdout}");
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("0.1789"));
}

#[test]
fn wind_dump_writes_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("config.toml"), small_config_toml()).unwrap();
    let out = mesasim(
        &[
            "wind-dump",
            "--config",
            "config.toml",
            "--step",
            "3",
            "--out",
            "wind.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("wind.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    // header + 11 x 11 x 6 cells
    assert_eq!(lines.len(), 1 + 11 * 11 * 6);
    assert_eq!(lines[0], "i,j,k,x,y,z,vx,vy,vz");
}

#[test]
fn render_slab_and_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("config.toml"), small_config_toml()).unwrap();
    let out = mesasim(
        &["run", "--config", "config.toml", "--out", "run"],
        dir.path(),
    );
    assert!(out.status.success());

    // slab CSV -> PNG at one pixel per cell
    let out = mesasim(
        &[
            "render",
            "--input",
            "run/slabs/slab_t0000060s.csv",
            "--out",
            "slab.png",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let img = image::open(dir.path().join("slab.png")).unwrap();
    assert_eq!((img.width(), img.height()), (11, 11));

    // all-zero slab renders a uniform image of the same dimensions
    let mut zero_csv = String::from("x,y,mean_concentration\n");
    for i in 0..11 {
        for j in 0..11 {
            zero_csv.push_str(&format!(
                "{},{},0\n",
                -25.0 + 5.0 * i as f64,
                -25.0 + 5.0 * j as f64
            ));
        }
    }
    std::fs::write(dir.path().join("zero.csv"), zero_csv).unwrap();
    let out = mesasim(
        &["render", "--input", "zero.csv", "--out", "zero.png"],
        dir.path(),
    );
    assert!(out.status.success());
    let img = image::open(dir.path().join("zero.png")).unwrap().to_rgb8();
    assert_eq!((img.width(), img.height()), (11, 11));
    let first = img.get_pixel(0, 0);
    assert!(
        img.pixels().all(|p| p == first),
        "zero slab must render uniformly"
    );

    // snapshot input with scaling
    let out = mesasim(
        &[
            "render",
            "--input",
            "run/snapshots/snapshot_t0000060s.bin",
            "--out",
            "snap.png",
            "--scale",
            "4",
            "--z-center",
            "1.0",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let img = image::open(dir.path().join("snap.png")).unwrap();
    assert_eq!((img.width(), img.height()), (44, 44));

    // missing input fails
    let out = mesasim(
        &["render", "--input", "nope.csv", "--out", "x.png"],
        dir.path(),
    );
    assert!(!out.status.success());
}

#[test]
fn aggregate_groups_by_preset() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config_toml().replace("total_steps = 60", "total_steps = 10");
    std::fs::write(dir.path().join("config.toml"), config).unwrap();
    let out = mesasim(
        &[
            "run",
            "--config",
            "config.toml",
            "--preset",
            "central_patch",
            "--seeds",
            "1..3",
            "--out",
            "sweep",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = mesasim(
        &[
            "aggregate",
            "--out",
            "agg",
            "sweep/central_patch_seed1",
            "sweep/central_patch_seed2",
            "sweep/central_patch_seed3",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stats = std::fs::read_to_string(dir.path().join("agg/cei_vs_threshold_stats.csv")).unwrap();
    let lines: Vec<&str> = stats.lines().collect();
    assert_eq!(lines[0], "preset,threshold,mean_cei,stddev_cei");
    // three thresholds for one preset group
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("central_patch,"));
    assert!(dir.path().join("agg/cei_vs_time_stats.csv").exists());
}
