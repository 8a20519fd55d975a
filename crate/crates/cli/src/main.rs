//! Command-line front end for the dispersion simulator.

mod aggregate;
mod render;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mesasim_core::config::{SimulationConfig, ThresholdSpec};
use mesasim_core::kinetics::{fit_korsmeyer_peppas, ReleaseDataset};
use mesasim_core::output::execute_run;
use mesasim_core::scenarios::DeploymentPreset;
use mesasim_core::wind::{StochasticWind, WindField};

#[derive(Parser)]
#[command(
    name = "mesasim",
    about = "Wind-driven dispersion of volatiles released from microsphere carriers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario, or a preset x seed sweep, emitting artifacts.
    Run(RunArgs),
    /// Fit the power-law release model to a measured dataset.
    Fit(FitArgs),
    /// Validate a config and print its CFL report without running.
    Check(CheckArgs),
    /// Dump the sampled wind field at one step as CSV.
    WindDump(WindDumpArgs),
    /// Render a slab CSV or a field snapshot as a PNG heatmap.
    Render(render::RenderArgs),
    /// Aggregate matching runs into mean +/- stddev coverage curves.
    Aggregate(aggregate::AggregateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file (TOML); defaults to the built-in baseline scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Deployment preset override, or `all` to sweep every preset.
    #[arg(long)]
    preset: Option<String>,
    /// Seed override.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Inclusive seed range `a..b` to sweep.
    #[arg(long)]
    seeds: Option<String>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Snapshot times override, comma-separated hours (e.g. `1,11,22`).
    #[arg(long)]
    snapshot_times: Option<String>,
    /// Coverage thresholds override, comma-separated (molecules/m^3); the
    /// time series follows the largest one.
    #[arg(long)]
    thresholds: Option<String>,
}

#[derive(Args)]
struct FitArgs {
    /// Release dataset CSV with header `time_hours,fraction`.
    #[arg(long)]
    data: PathBuf,
    /// Write the report here as well as printing it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct WindDumpArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Step index to sample (time = step * dt).
    #[arg(long, default_value_t = 0)]
    step: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    if let Err(err) = dispatch() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn dispatch() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Check(args) => cmd_check(args),
        Command::WindDump(args) => cmd_wind_dump(args),
        Command::Render(args) => render::cmd_render(args),
        Command::Aggregate(args) => aggregate::cmd_aggregate(args),
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<SimulationConfig> {
    match path {
        Some(path) => SimulationConfig::from_path(path)
            .with_context(|| format!("loading config {}", path.display())),
        None => Ok(SimulationConfig::default()),
    }
}

fn parse_number_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number {s:?} in list"))
        })
        .collect()
}

/// Inclusive `a..b` range.
fn parse_seed_range(text: &str) -> Result<Vec<u64>> {
    let (a, b) = text
        .split_once("..")
        .with_context(|| format!("seed range must look like 1..5, got {text:?}"))?;
    let a: u64 = a.trim().parse().context("bad range start")?;
    let b: u64 = b.trim().parse().context("bad range end")?;
    if b < a {
        bail!("seed range end {b} is below start {a}");
    }
    Ok((a..=b).collect())
}

fn apply_scalar_overrides(config: &mut SimulationConfig, args: &RunArgs) -> Result<()> {
    if let Some(times) = &args.snapshot_times {
        config.output.snapshot_times_hours = parse_number_list(times)?;
    }
    if let Some(thresholds) = &args.thresholds {
        let list = parse_number_list(thresholds)?;
        let largest = list.iter().cloned().fold(f64::NAN, f64::max);
        config.metrics.thresholds = ThresholdSpec::List(list);
        config.metrics.timeseries_threshold = largest;
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut config = load_config(&args.config)?;
    apply_scalar_overrides(&mut config, &args)?;

    let presets: Vec<Option<DeploymentPreset>> = match args.preset.as_deref() {
        Some("all") => DeploymentPreset::ALL.iter().map(|p| Some(*p)).collect(),
        Some(name) => vec![Some(name.parse::<DeploymentPreset>()?)],
        None => vec![None],
    };
    let seeds: Vec<Option<u64>> = match &args.seeds {
        Some(range) => parse_seed_range(range)?.into_iter().map(Some).collect(),
        None => vec![args.seed],
    };

    let sweep = presets.len() > 1 || seeds.len() > 1;
    let base_out = args
        .out
        .clone()
        .unwrap_or_else(|| config.output.directory.clone());

    for preset in &presets {
        for seed in &seeds {
            let mut run_config = config.clone();
            if let Some(preset) = preset {
                run_config.deployment.preset = Some(*preset);
                run_config.deployment.csv = None;
            }
            if let Some(seed) = seed {
                run_config.seed = *seed;
            }
            let out_dir = if sweep {
                let preset_name = run_config
                    .deployment
                    .preset
                    .map(|p| p.name().to_string())
                    .unwrap_or_else(|| "custom".to_string());
                base_out.join(format!("{preset_name}_seed{}", run_config.seed))
            } else {
                base_out.clone()
            };
            let summary = execute_run::<f64>(&run_config, Some(&out_dir))
                .with_context(|| format!("run into {}", out_dir.display()))?;
            let final_cei = summary
                .cei
                .at_threshold(run_config.metrics.timeseries_threshold)
                .unwrap_or(f64::NAN);
            println!(
                "run {}: {} steps, released {:.4e} molecules, CEI({:.1e}) = {:.4}",
                out_dir.display(),
                summary.steps,
                summary.budget.released,
                run_config.metrics.timeseries_threshold,
                final_cei
            );
        }
    }
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let dataset = ReleaseDataset::<f64>::from_csv_path(&args.data)
        .with_context(|| format!("reading dataset {}", args.data.display()))?;
    let report = fit_korsmeyer_peppas(&dataset)?;
    let text = format!("{report}\n");
    print!("{text}");
    if let Some(out) = &args.out {
        std::fs::write(out, &text).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn cmd_check(args: CheckArgs) -> Result<()> {
    let config = load_config(&args.config)?;
    let setup = config.build::<f64>()?;
    println!(
        "config OK: grid {}x{}x{}, {} steps of {} s, deployment of {} spheres over {} sources",
        setup.grid.nx(),
        setup.grid.ny(),
        setup.grid.nz(),
        setup.solver.total_steps,
        setup.solver.dt,
        setup.deployment.total_spheres(),
        setup.deployment.sources().len()
    );
    println!("{}", setup.cfl);
    Ok(())
}

fn cmd_wind_dump(args: WindDumpArgs) -> Result<()> {
    let config = load_config(&args.config)?;
    let setup = config.build::<f64>()?;
    let wind = StochasticWind::new(setup.wind_params, &setup.grid)?;
    let t = args.step as f64 * setup.solver.dt;
    let state = wind.begin_step(t, args.step);
    let mut writer = csv::Writer::from_path(&args.out)?;
    writer.write_record(["i", "j", "k", "x", "y", "z", "vx", "vy", "vz"])?;
    for i in 0..setup.grid.nx() {
        for j in 0..setup.grid.ny() {
            for k in 0..setup.grid.nz() {
                let sample = wind.sample(&state, (i, j, k));
                writer.write_record([
                    i.to_string(),
                    j.to_string(),
                    k.to_string(),
                    format!("{}", setup.grid.x(i)),
                    format!("{}", setup.grid.y(j)),
                    format!("{}", setup.grid.z(k)),
                    format!("{}", sample.vx),
                    format!("{}", sample.vy),
                    format!("{}", sample.vz),
                ])?;
            }
        }
    }
    writer.flush()?;
    println!(
        "wind field at step {} (t = {t} s) written to {}",
        args.step,
        args.out.display()
    );
    Ok(())
}
