//! TOML run configuration: parsing, validation, and the assembly of runtime
//! objects.
//!
//! Every field has a default; the defaults reproduce the baseline field
//! scenario (200 m x 200 m x 5 m domain at 5 m / 0.5 m resolution, 2 s
//! steps over 24 h, light-air diurnal wind, the fitted release parameters,
//! and a 2 kg batch at 10% loading). A config file only needs the fields it
//! overrides. Validation covers grid consistency, deployment-in-domain, the
//! threshold ordering, and the CFL pre-check, so a config that parses and
//! validates will run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::kinetics::{microsphere_inventory, MicrosphereSpec, ReleaseModel};
use crate::metrics::{CeiAccumulator, SubVolume};
use crate::scalar::Scalar;
use crate::scenarios::{build_deployment, Deployment, DeploymentPreset, DEFAULT_LATTICE_PITCH};
use crate::solver::{check_cfl, CflReport, Simulation, SolverConfig};
use crate::wind::{StochasticWind, WindField, WindModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    /// Seed for the wind noise; the only stochastic input.
    pub seed: u64,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub wind: WindSection,
    pub release: ReleaseSection,
    pub deployment: DeploymentSection,
    pub metrics: MetricsSection,
    pub output: OutputSection,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            grid: GridSection::default(),
            solver: SolverSection::default(),
            wind: WindSection::default(),
            release: ReleaseSection::default(),
            deployment: DeploymentSection::default(),
            metrics: MetricsSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            x_min: -100.0,
            x_max: 100.0,
            y_min: -100.0,
            y_max: 100.0,
            z_min: 0.0,
            z_max: 5.0,
            dx: 5.0,
            dy: 5.0,
            dz: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSection {
    pub diffusion_coefficient: f64,
    pub dt: f64,
    pub total_steps: u64,
    pub cfl_runtime_check: bool,
    pub noise_clamp_sigmas: f64,
    pub nan_check_interval: u64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            diffusion_coefficient: 1.0e-5,
            dt: 2.0,
            total_steps: 43_200,
            cfl_runtime_check: true,
            noise_clamp_sigmas: 3.0,
            nan_check_interval: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindSection {
    pub mean_speed: f64,
    pub diurnal_amplitude: f64,
    pub diurnal_period: f64,
    pub speed_noise_variance: f64,
    pub direction_noise_variance: f64,
    pub vertical_scale: f64,
    pub reference_height: f64,
}

impl Default for WindSection {
    fn default() -> Self {
        let p = WindModelParams::<f64>::default();
        Self {
            mean_speed: p.mean_speed,
            diurnal_amplitude: p.diurnal_amplitude,
            diurnal_period: p.diurnal_period,
            speed_noise_variance: p.speed_noise_variance,
            direction_noise_variance: p.direction_noise_variance,
            vertical_scale: p.vertical_scale,
            reference_height: p.reference_height,
        }
    }
}

/// Release parameters. `molecules_per_sphere` wins when set; otherwise it is
/// derived from the inventory section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReleaseSection {
    pub rate_constant: f64,
    pub exponent: f64,
    pub molecules_per_sphere: Option<f64>,
    pub inventory: Option<InventorySection>,
}

impl Default for ReleaseSection {
    fn default() -> Self {
        Self {
            rate_constant: 0.4429,
            exponent: 0.1789,
            molecules_per_sphere: None,
            inventory: Some(InventorySection::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InventorySection {
    pub diameter: f64,
    pub matrix_density: f64,
    pub cargo_density: f64,
    pub cargo_mass_fraction: f64,
    pub cargo_molar_mass: f64,
    pub total_microsphere_mass: f64,
    pub total_cargo_mass: f64,
}

impl Default for InventorySection {
    fn default() -> Self {
        Self {
            diameter: 180.0e-6,
            matrix_density: 900.0,
            cargo_density: 1174.0,
            cargo_mass_fraction: 0.1,
            cargo_molar_mass: 152.149,
            total_microsphere_mass: 2.0,
            total_cargo_mass: 0.2,
        }
    }
}

impl InventorySection {
    fn spec(&self) -> MicrosphereSpec<f64> {
        MicrosphereSpec {
            diameter: self.diameter,
            matrix_density: self.matrix_density,
            cargo_density: self.cargo_density,
            cargo_mass_fraction: self.cargo_mass_fraction,
            cargo_molar_mass: self.cargo_molar_mass,
        }
    }
}

/// Source arrangement: a preset name or a CSV of custom sources; exactly one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeploymentSection {
    pub preset: Option<DeploymentPreset>,
    pub csv: Option<PathBuf>,
    pub lattice_pitch: f64,
    /// Spheres to deploy; defaults to the inventory sphere count.
    pub total_spheres: Option<u64>,
}

impl Default for DeploymentSection {
    fn default() -> Self {
        Self {
            preset: Some(DeploymentPreset::CentralPatch),
            csv: None,
            lattice_pitch: DEFAULT_LATTICE_PITCH,
            total_spheres: None,
        }
    }
}

/// Threshold list, explicit or log-spaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThresholdSpec {
    List(Vec<f64>),
    LogRange {
        log_min: f64,
        log_max: f64,
        count: usize,
    },
}

impl ThresholdSpec {
    pub fn resolve(&self) -> Result<Vec<f64>> {
        match self {
            ThresholdSpec::List(list) => Ok(list.clone()),
            ThresholdSpec::LogRange {
                log_min,
                log_max,
                count,
            } => {
                if *count < 2 || !(log_max > log_min) || !(*log_min > 0.0) {
                    return Err(Error::Config(format!(
                        "log threshold range needs 0 < log_min < log_max and count >= 2, \
                         got [{log_min}, {log_max}] x {count}"
                    )));
                }
                let (a, b) = (log_min.log10(), log_max.log10());
                let mut out: Vec<f64> = (0..*count)
                    .map(|i| 10f64.powf(a + (b - a) * i as f64 / (*count as f64 - 1.0)))
                    .collect();
                // pin the endpoints against round-off
                out[0] = *log_min;
                let last = out.len() - 1;
                out[last] = *log_max;
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsSection {
    pub thresholds: ThresholdSpec,
    /// Threshold whose coverage-vs-time series is emitted; must be in the
    /// resolved list.
    pub timeseries_threshold: f64,
    pub subvolume: Option<BoxSection>,
    pub record_timeseries: bool,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            thresholds: ThresholdSpec::LogRange {
                log_min: 1.0e4,
                log_max: 1.0e14,
                count: 41,
            },
            timeseries_threshold: 1.0e14,
            subvolume: None,
            record_timeseries: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSection {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub snapshot_times_hours: Vec<f64>,
    pub slab_z_center: f64,
    pub slab_half_width: f64,
    pub write_snapshots: bool,
    pub write_slabs: bool,
    pub write_budget: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            snapshot_times_hours: vec![1.0, 11.0, 22.0],
            slab_z_center: 2.0,
            slab_half_width: 0.5,
            write_snapshots: true,
            write_slabs: true,
            write_budget: true,
        }
    }
}

/// Everything a run needs, built from a validated config.
#[derive(Debug)]
pub struct SimulationSetup<T: Scalar> {
    pub grid: GridSpec<T>,
    pub solver: SolverConfig<T>,
    pub wind_params: WindModelParams<T>,
    pub release: ReleaseModel<T>,
    pub deployment: Deployment<T>,
    pub thresholds: Vec<T>,
    pub timeseries_threshold: T,
    pub subvolume: SubVolume,
    pub record_timeseries: bool,
    pub cfl: CflReport<T>,
}

impl SimulationConfig {
    /// Parses a config file. Empty files are rejected: an empty config is
    /// almost always a path mix-up, not a request for all defaults.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if text.trim().is_empty() {
            return Err(Error::Config(format!(
                "config file {} is empty",
                path.display()
            )));
        }
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Validates the whole config and assembles the runtime objects.
    pub fn build<T: Scalar>(&self) -> Result<SimulationSetup<T>> {
        let grid = GridSpec::from_bounds(
            [
                T::of(self.grid.x_min),
                T::of(self.grid.y_min),
                T::of(self.grid.z_min),
            ],
            [
                T::of(self.grid.x_max),
                T::of(self.grid.y_max),
                T::of(self.grid.z_max),
            ],
            [
                T::of(self.grid.dx),
                T::of(self.grid.dy),
                T::of(self.grid.dz),
            ],
        )?;

        let solver = SolverConfig {
            diffusion_coefficient: T::of(self.solver.diffusion_coefficient),
            dt: T::of(self.solver.dt),
            total_steps: self.solver.total_steps,
            cfl_runtime_check: self.solver.cfl_runtime_check,
            noise_clamp_sigmas: T::of(self.solver.noise_clamp_sigmas),
            nan_check_interval: self.solver.nan_check_interval,
        };
        solver.validate()?;

        let wind_params = WindModelParams {
            mean_speed: T::of(self.wind.mean_speed),
            diurnal_amplitude: T::of(self.wind.diurnal_amplitude),
            diurnal_period: T::of(self.wind.diurnal_period),
            speed_noise_variance: T::of(self.wind.speed_noise_variance),
            direction_noise_variance: T::of(self.wind.direction_noise_variance),
            vertical_scale: T::of(self.wind.vertical_scale),
            reference_height: T::of(self.wind.reference_height),
            seed: self.seed,
        };
        wind_params.validate()?;

        // per-sphere cargo: explicit value wins, else derived from inventory
        let (molecules_per_sphere, inventory_spheres) =
            match (self.release.molecules_per_sphere, &self.release.inventory) {
                (Some(m), _) => (m, None),
                (None, Some(inv)) => {
                    let computed = microsphere_inventory(
                        &inv.spec(),
                        inv.total_microsphere_mass,
                        inv.total_cargo_mass,
                    )?;
                    (
                        computed.molecules_per_sphere,
                        Some(computed.sphere_count.round() as u64),
                    )
                }
                (None, None) => {
                    return Err(Error::Config(
                        "release needs either molecules_per_sphere or an inventory section"
                            .to_string(),
                    ))
                }
            };
        let release = ReleaseModel::new(
            T::of(self.release.rate_constant),
            T::of(self.release.exponent),
            T::of(molecules_per_sphere),
        )?;

        let deployment = match (&self.deployment.preset, &self.deployment.csv) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "deployment must name a preset or a CSV path, not both".to_string(),
                ))
            }
            (Some(preset), None) => {
                let spheres = self
                    .deployment
                    .total_spheres
                    .or(inventory_spheres)
                    .ok_or_else(|| {
                        Error::Config(
                            "deployment.total_spheres is required when no inventory section \
                             provides a sphere count"
                                .to_string(),
                        )
                    })?;
                build_deployment(
                    *preset,
                    spheres,
                    &grid,
                    T::of(self.deployment.lattice_pitch),
                )?
            }
            (None, Some(path)) => {
                let d = Deployment::<T>::from_csv_path(path)?;
                d.validate_in_domain(&grid)?;
                d
            }
            (None, None) => {
                return Err(Error::Config(
                    "deployment needs a preset or a CSV path".to_string(),
                ))
            }
        };

        let thresholds_f64 = self.metrics.thresholds.resolve()?;
        let thresholds: Vec<T> = thresholds_f64.iter().map(|&t| T::of(t)).collect();
        let timeseries_threshold = T::of(self.metrics.timeseries_threshold);
        if self.metrics.record_timeseries && !thresholds.contains(&timeseries_threshold) {
            return Err(Error::Config(format!(
                "timeseries_threshold {:e} is not in the resolved threshold list",
                self.metrics.timeseries_threshold
            )));
        }
        let subvolume = match self.metrics.subvolume {
            None => SubVolume::WholeDomain,
            Some(b) => SubVolume::Box {
                x: b.x,
                y: b.y,
                z: b.z,
            },
        };
        // probe the accumulator so subvolume errors surface at parse time
        CeiAccumulator::new(grid, thresholds.clone(), subvolume, false)?;

        for &t in &self.output.snapshot_times_hours {
            if !(t >= 0.0) {
                return Err(Error::Config(format!("snapshot time {t} h is negative")));
            }
        }

        // CFL pre-check against the clamped wind bound
        let wind = StochasticWind::new(wind_params, &grid)?;
        let cfl = check_cfl(
            &grid,
            &solver,
            wind.component_bounds(solver.noise_clamp_sigmas, grid.z_max()),
        );
        if !cfl.pass {
            return Err(Error::Config(format!("CFL pre-check failed\n{cfl}")));
        }

        Ok(SimulationSetup {
            grid,
            solver,
            wind_params,
            release,
            deployment,
            thresholds,
            timeseries_threshold,
            subvolume,
            record_timeseries: self.metrics.record_timeseries,
            cfl,
        })
    }
}

impl<T: Scalar> SimulationSetup<T> {
    /// Builds the simulation with the configured stochastic wind.
    pub fn simulation(&self) -> Result<Simulation<T, StochasticWind<T>>> {
        let wind = StochasticWind::new(self.wind_params, &self.grid)?;
        Simulation::new(self.grid, self.solver, wind, self.release, &self.deployment)
    }

    pub fn accumulator(&self) -> Result<CeiAccumulator<T>> {
        CeiAccumulator::new(
            self.grid,
            self.thresholds.clone(),
            self.subvolume,
            self.record_timeseries,
        )
    }
}

/// Parses and fully validates a config file.
pub fn parse_config(path: &Path) -> Result<SimulationConfig> {
    let config = SimulationConfig::from_path(path)?;
    config.build::<f64>()?;
    Ok(config)
}
