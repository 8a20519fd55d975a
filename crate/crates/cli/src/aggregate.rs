//! Aggregation of coverage curves across runs.
//!
//! Stochastic wind makes each seed's coverage curve a sample; comparing
//! arrangements calls for the seed mean and spread. Runs are grouped by the
//! deployment preset recorded in their manifests; thresholds (and times)
//! must match within a group.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use mesasim_core::config::SimulationConfig;
use mesasim_core::output::read_two_column_csv;

#[derive(Args)]
pub struct AggregateArgs {
    /// Output directory for the aggregated CSVs.
    #[arg(long)]
    out: PathBuf,
    /// Run directories (each containing manifest.toml and the CEI CSVs).
    #[arg(required = true)]
    runs: Vec<PathBuf>,
}

struct Group {
    /// Abscissa (threshold or time), shared by all runs of the group.
    axis: Vec<f64>,
    /// One CEI column per run.
    columns: Vec<Vec<f64>>,
}

pub fn cmd_aggregate(args: AggregateArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let mut threshold_groups: BTreeMap<String, Group> = BTreeMap::new();
    let mut time_groups: BTreeMap<String, Group> = BTreeMap::new();

    for run in &args.runs {
        let manifest = run.join("manifest.toml");
        let config = SimulationConfig::from_path(&manifest)
            .with_context(|| format!("reading {}", manifest.display()))?;
        let preset = config
            .deployment
            .preset
            .map(|p| p.name().to_string())
            .unwrap_or_else(|| "custom".to_string());

        let threshold_rows = read_two_column_csv(&run.join("cei_vs_threshold.csv"))
            .with_context(|| format!("reading coverage curve in {}", run.display()))?;
        insert(&mut threshold_groups, &preset, threshold_rows)?;

        let time_csv = run.join("cei_vs_time.csv");
        if time_csv.exists() {
            let time_rows = read_two_column_csv(&time_csv)?;
            insert(&mut time_groups, &preset, time_rows)?;
        }
    }

    write_stats(
        &threshold_groups,
        "threshold",
        &args.out.join("cei_vs_threshold_stats.csv"),
    )?;
    if !time_groups.is_empty() {
        write_stats(
            &time_groups,
            "time_s",
            &args.out.join("cei_vs_time_stats.csv"),
        )?;
    }
    println!(
        "aggregated {} runs over {} preset groups into {}",
        args.runs.len(),
        threshold_groups.len(),
        args.out.display()
    );
    Ok(())
}

fn insert(groups: &mut BTreeMap<String, Group>, preset: &str, rows: Vec<(f64, f64)>) -> Result<()> {
    let (axis, column): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    match groups.get_mut(preset) {
        None => {
            groups.insert(
                preset.to_string(),
                Group {
                    axis,
                    columns: vec![column],
                },
            );
        }
        Some(group) => {
            if group.axis != axis {
                bail!("runs in preset group {preset:?} disagree on their curve axis");
            }
            group.columns.push(column);
        }
    }
    Ok(())
}

fn write_stats(groups: &BTreeMap<String, Group>, axis_name: &str, path: &PathBuf) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["preset", axis_name, "mean_cei", "stddev_cei"])?;
    for (preset, group) in groups {
        let n = group.columns.len() as f64;
        for (row, &axis_value) in group.axis.iter().enumerate() {
            let mean = group.columns.iter().map(|c| c[row]).sum::<f64>() / n;
            let stddev = if group.columns.len() > 1 {
                (group
                    .columns
                    .iter()
                    .map(|c| (c[row] - mean) * (c[row] - mean))
                    .sum::<f64>()
                    / (n - 1.0))
                    .sqrt()
            } else {
                0.0
            };
            writer.write_record([
                preset.clone(),
                format!("{axis_value:e}"),
                format!("{mean}"),
                format!("{stddev}"),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}
