//! Run orchestration and artifact emission.
//!
//! A run writes, under its output directory:
//!
//! * `manifest.toml` — the fully-resolved config (every default
//!   materialized) plus a `[provenance]` table with version and the CFL
//!   report. The manifest itself parses as a config, so a run can be
//!   reproduced from its manifest alone.
//! * `budget.csv` — `step,time_s,released,in_domain,absorbed_ground,boundary_outflow`
//!   per step.
//! * `cei_vs_threshold.csv` — `threshold,cei` at the final time.
//! * `cei_vs_time.csv` — `time_s,cei` running average at the configured
//!   threshold.
//! * `snapshots/snapshot_t<seconds>s.bin` and `slabs/slab_t<seconds>s.csv`
//!   at the configured times.
//!
//! Float columns use Rust's shortest round-trip formatting, so identical
//! runs produce byte-identical artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{SimulationConfig, SimulationSetup};
use crate::error::{Error, Result};
use crate::grid::write_snapshot;
use crate::metrics::CeiResult;
use crate::scalar::Scalar;
use crate::solver::MassBudget;

/// Extra, non-config information recorded in the manifest; ignored when a
/// manifest is re-parsed as a config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub cfl_advective_limit_s: f64,
    pub cfl_diffusive_limit_s: f64,
    pub cfl_pass: bool,
}

#[derive(Serialize)]
struct ManifestProvenance<'a> {
    provenance: &'a Provenance,
}

/// Paths of the artifacts a run produced.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub manifest: PathBuf,
    pub budget_csv: Option<PathBuf>,
    pub cei_threshold_csv: PathBuf,
    pub cei_time_csv: Option<PathBuf>,
    pub snapshots: Vec<PathBuf>,
    pub slabs: Vec<PathBuf>,
}

/// Result of a completed run.
pub struct RunSummary<T> {
    pub budget: MassBudget<T>,
    pub cei: CeiResult<T>,
    pub steps: u64,
    pub artifacts: RunArtifacts,
}

/// One budget-trace row (molecules; cumulative except `in_domain`).
#[derive(Debug, Clone, Copy)]
pub struct BudgetRow {
    pub step: u64,
    pub time_s: f64,
    pub released: f64,
    pub in_domain: f64,
    pub absorbed_ground: f64,
    pub boundary_outflow: f64,
}

/// Executes a validated config end to end, emitting artifacts under
/// `out_dir` (falling back to the config's output directory).
pub fn execute_run<T: Scalar>(
    config: &SimulationConfig,
    out_dir: Option<&Path>,
) -> Result<RunSummary<T>> {
    let setup: SimulationSetup<T> = config.build()?;
    let out_dir = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.output.directory.clone());
    fs::create_dir_all(&out_dir)?;

    // manifest first: reproducibility survives an aborted run
    let manifest_path = out_dir.join("manifest.toml");
    write_manifest(config, &setup, &manifest_path)?;

    let mut sim = setup.simulation()?;
    let mut accumulator = setup.accumulator()?;

    // snapshot schedule: completed-step index per requested time
    let dt = config.solver.dt;
    let mut snapshot_steps: Vec<u64> = config
        .output
        .snapshot_times_hours
        .iter()
        .map(|&h| (h * 3600.0 / dt).round() as u64)
        .filter(|&s| s <= config.solver.total_steps)
        .collect();
    snapshot_steps.sort_unstable();
    snapshot_steps.dedup();

    let snapshots_dir = out_dir.join("snapshots");
    let slabs_dir = out_dir.join("slabs");
    if config.output.write_snapshots && !snapshot_steps.is_empty() {
        fs::create_dir_all(&snapshots_dir)?;
    }
    if config.output.write_slabs && !snapshot_steps.is_empty() {
        fs::create_dir_all(&slabs_dir)?;
    }

    let mut budget_trace: Vec<BudgetRow> = Vec::new();
    let mut snapshot_paths = Vec::new();
    let mut slab_paths = Vec::new();

    // time zero counts as a valid snapshot point
    if snapshot_steps.first() == Some(&0) {
        emit_state(
            sim.field(),
            config,
            &snapshots_dir,
            &slabs_dir,
            &mut snapshot_paths,
            &mut slab_paths,
        )?;
    }

    let total_steps = config.solver.total_steps;
    sim.run(total_steps, |view| {
        accumulator.accumulate(view.field)?;
        budget_trace.push(BudgetRow {
            step: view.step,
            time_s: view.time_s.widen(),
            released: view.budget.released.widen(),
            in_domain: view.budget.in_domain.widen(),
            absorbed_ground: view.budget.absorbed_ground.widen(),
            boundary_outflow: view.budget.boundary_outflow.widen(),
        });
        if snapshot_steps.binary_search(&view.step).is_ok() {
            emit_state(
                view.field,
                config,
                &snapshots_dir,
                &slabs_dir,
                &mut snapshot_paths,
                &mut slab_paths,
            )?;
        }
        Ok(())
    })?;

    let budget_csv = if config.output.write_budget {
        let path = out_dir.join("budget.csv");
        write_budget_csv(&budget_trace, &path)?;
        Some(path)
    } else {
        None
    };

    let cei = accumulator.finalize()?;
    let cei_threshold_csv = out_dir.join("cei_vs_threshold.csv");
    write_cei_threshold_csv(&cei, &cei_threshold_csv)?;

    let cei_time_csv = if setup.record_timeseries {
        let series = accumulator.timeseries(setup.timeseries_threshold)?;
        let path = out_dir.join("cei_vs_time.csv");
        write_cei_time_csv(&series, &path)?;
        Some(path)
    } else {
        None
    };

    Ok(RunSummary {
        budget: *sim.budget(),
        cei,
        steps: sim.steps_completed(),
        artifacts: RunArtifacts {
            out_dir,
            manifest: manifest_path,
            budget_csv,
            cei_threshold_csv,
            cei_time_csv,
            snapshots: snapshot_paths,
            slabs: slab_paths,
        },
    })
}

fn emit_state<T: Scalar>(
    field: &crate::grid::ConcentrationField<T>,
    config: &SimulationConfig,
    snapshots_dir: &Path,
    slabs_dir: &Path,
    snapshot_paths: &mut Vec<PathBuf>,
    slab_paths: &mut Vec<PathBuf>,
) -> Result<()> {
    let seconds = field.time().widen().round() as u64;
    if config.output.write_snapshots {
        let path = snapshots_dir.join(format!("snapshot_t{seconds:07}s.bin"));
        write_snapshot(field, &path)?;
        snapshot_paths.push(path);
    }
    if config.output.write_slabs {
        let slab = field.slab_mean(
            T::of(config.output.slab_z_center),
            T::of(config.output.slab_half_width),
        )?;
        let path = slabs_dir.join(format!("slab_t{seconds:07}s.csv"));
        slab.write_csv_path(&path)?;
        slab_paths.push(path);
    }
    Ok(())
}

/// Writes the resolved config plus provenance; the file round-trips as a
/// config.
pub fn write_manifest<T: Scalar>(
    config: &SimulationConfig,
    setup: &SimulationSetup<T>,
    path: &Path,
) -> Result<()> {
    let provenance = Provenance {
        version: env!("CARGO_PKG_VERSION").to_string(),
        cfl_advective_limit_s: setup.cfl.advective_limit.widen(),
        cfl_diffusive_limit_s: setup.cfl.diffusive_limit.widen(),
        cfl_pass: setup.cfl.pass,
    };
    let mut text = config.to_toml();
    text.push('\n');
    text.push_str(
        &toml::to_string_pretty(&ManifestProvenance {
            provenance: &provenance,
        })
        .expect("provenance serializes"),
    );
    let mut file = fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

pub fn write_budget_csv(rows: &[BudgetRow], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "step",
        "time_s",
        "released",
        "in_domain",
        "absorbed_ground",
        "boundary_outflow",
    ])?;
    for row in rows {
        writer.write_record([
            format!("{}", row.step),
            format!("{}", row.time_s),
            format!("{:e}", row.released),
            format!("{:e}", row.in_domain),
            format!("{:e}", row.absorbed_ground),
            format!("{:e}", row.boundary_outflow),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_cei_threshold_csv<T: Scalar>(cei: &CeiResult<T>, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["threshold", "cei"])?;
    for (threshold, value) in cei.thresholds.iter().zip(&cei.cei) {
        writer.write_record([format!("{:e}", threshold.widen()), format!("{}", value)])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_cei_time_csv<T: Scalar>(series: &[(T, T)], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["time_s", "cei"])?;
    for (time, value) in series {
        writer.write_record([format!("{}", time.widen()), format!("{}", value)])?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a two-column CSV written by this crate back into pairs.
pub fn read_two_column_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Config(format!("bad number {s:?} in {}: {e}", path.display())))
        };
        rows.push((parse(&record[0])?, parse(&record[1])?));
    }
    Ok(rows)
}
