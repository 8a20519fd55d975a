//! Deployment geometry: where the carrier spheres sit and how many per spot.
//!
//! Presets place sources inside a 4 m x 80 m host stripe centered on the
//! origin, all at 0.5 m height. Within a region, spheres are spread over a
//! deterministic generation lattice (default 0.5 m pitch) rather than drawn
//! at random, so runs are reproducible and scenario comparisons carry no
//! placement noise. Integer remainders go to the first points in scan order.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::scalar::Scalar;

/// Host stripe half-extents, m.
pub const STRIPE_X_HALF: f64 = 40.0;
pub const STRIPE_Y_HALF: f64 = 2.0;
/// Height of every generated source, m.
pub const SOURCE_HEIGHT: f64 = 0.5;
/// Default generation-lattice pitch, m.
pub const DEFAULT_LATTICE_PITCH: f64 = 0.5;

const CENTRAL_PATCH_HALF: f64 = 2.0;
const CORNER_PATCH_HALF: f64 = 0.5;
const CORNER_CENTER_X: f64 = 39.5;
const CORNER_CENTER_Y: f64 = 1.5;
const PERIMETER_BAND_WIDTH: f64 = 0.5;

/// The four source arrangements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeploymentPreset {
    /// 4 m x 4 m patch centered on the origin.
    CentralPatch,
    /// The whole 4 m x 80 m stripe.
    UniformPatch,
    /// Four 1 m x 1 m patches at the stripe corners, a quarter of the
    /// spheres each.
    FourCorners,
    /// A 0.5 m wide band along the inside of the stripe perimeter.
    PerimeterStripe,
}

impl DeploymentPreset {
    pub const ALL: [DeploymentPreset; 4] = [
        DeploymentPreset::CentralPatch,
        DeploymentPreset::UniformPatch,
        DeploymentPreset::FourCorners,
        DeploymentPreset::PerimeterStripe,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DeploymentPreset::CentralPatch => "central_patch",
            DeploymentPreset::UniformPatch => "uniform_patch",
            DeploymentPreset::FourCorners => "four_corners",
            DeploymentPreset::PerimeterStripe => "perimeter_stripe",
        }
    }
}

impl fmt::Display for DeploymentPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DeploymentPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "central_patch" => Ok(DeploymentPreset::CentralPatch),
            "uniform_patch" => Ok(DeploymentPreset::UniformPatch),
            "four_corners" => Ok(DeploymentPreset::FourCorners),
            "perimeter_stripe" => Ok(DeploymentPreset::PerimeterStripe),
            other => Err(Error::Deployment(format!(
                "unknown preset {other:?}; expected one of central_patch, uniform_patch, \
                 four_corners, perimeter_stripe"
            ))),
        }
    }
}

/// One point source: position and the sphere count it carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Source<T> {
    pub position: [T; 3],
    pub sphere_count: u64,
}

/// A set of point sources; sphere counts sum to `total_spheres` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment<T> {
    sources: Vec<Source<T>>,
    total_spheres: u64,
}

impl<T: Scalar> Deployment<T> {
    pub fn from_sources(sources: Vec<Source<T>>) -> Self {
        let total_spheres = sources.iter().map(|s| s.sphere_count).sum();
        Self {
            sources,
            total_spheres,
        }
    }

    pub fn sources(&self) -> &[Source<T>] {
        &self.sources
    }

    pub fn total_spheres(&self) -> u64 {
        self.total_spheres
    }

    /// Checks that every source lies inside the grid box, above the ground
    /// plane.
    pub fn validate_in_domain(&self, grid: &GridSpec<T>) -> Result<()> {
        for (idx, s) in self.sources.iter().enumerate() {
            if !grid.contains(s.position) {
                return Err(Error::Deployment(format!(
                    "source {idx} at ({}, {}, {}) lies outside the domain",
                    s.position[0], s.position[1], s.position[2]
                )));
            }
            if !(s.position[2] > T::zero()) {
                return Err(Error::Deployment(format!(
                    "source {idx} must sit above the ground plane (z > 0), got z = {}",
                    s.position[2]
                )));
            }
        }
        Ok(())
    }

    /// Reads `x,y,z,sphere_count` rows.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        let expected = ["x", "y", "z", "sphere_count"];
        if headers.len() < 4 || (0..4).any(|c| &headers[c] != expected[c]) {
            return Err(Error::Deployment(format!(
                "deployment CSV must have header `x,y,z,sphere_count`, got {headers:?}"
            )));
        }
        let mut sources = Vec::new();
        for record in reader.records() {
            let record = record?;
            let coord =
                |c: usize| -> Result<T> {
                    record[c].trim().parse::<f64>().map(T::of).map_err(|e| {
                        Error::Deployment(format!("bad coordinate {:?}: {e}", &record[c]))
                    })
                };
            let count = record[3].trim().parse::<u64>().map_err(|e| {
                Error::Deployment(format!("bad sphere count {:?}: {e}", &record[3]))
            })?;
            sources.push(Source {
                position: [coord(0)?, coord(1)?, coord(2)?],
                sphere_count: count,
            });
        }
        Ok(Self::from_sources(sources))
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(["x", "y", "z", "sphere_count"])?;
        for s in &self.sources {
            writer.write_record([
                format!("{}", s.position[0]),
                format!("{}", s.position[1]),
                format!("{}", s.position[2]),
                format!("{}", s.sphere_count),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Builds a preset deployment of `n_spheres` on the given grid.
pub fn build_deployment<T: Scalar>(
    preset: DeploymentPreset,
    n_spheres: u64,
    grid: &GridSpec<T>,
    lattice_pitch: T,
) -> Result<Deployment<T>> {
    if n_spheres == 0 {
        return Err(Error::Deployment(
            "deployments need at least 1 sphere".to_string(),
        ));
    }
    if !(lattice_pitch > T::zero()) {
        return Err(Error::Deployment(format!(
            "lattice pitch must be > 0, got {lattice_pitch}"
        )));
    }
    let pitch = lattice_pitch.widen();

    let deployment = match preset {
        DeploymentPreset::CentralPatch => {
            let points = rect_lattice(
                -CENTRAL_PATCH_HALF,
                CENTRAL_PATCH_HALF,
                -CENTRAL_PATCH_HALF,
                CENTRAL_PATCH_HALF,
                pitch,
            );
            Deployment::from_sources(split_spheres::<T>(&points, n_spheres))
        }
        DeploymentPreset::UniformPatch => {
            let points = rect_lattice(
                -STRIPE_X_HALF,
                STRIPE_X_HALF,
                -STRIPE_Y_HALF,
                STRIPE_Y_HALF,
                pitch,
            );
            Deployment::from_sources(split_spheres::<T>(&points, n_spheres))
        }
        DeploymentPreset::FourCorners => {
            // a quarter of the spheres per corner patch, remainder to the
            // first patches in scan order
            let centers = [
                (-CORNER_CENTER_X, -CORNER_CENTER_Y),
                (CORNER_CENTER_X, -CORNER_CENTER_Y),
                (-CORNER_CENTER_X, CORNER_CENTER_Y),
                (CORNER_CENTER_X, CORNER_CENTER_Y),
            ];
            let base = n_spheres / 4;
            let remainder = (n_spheres % 4) as usize;
            let mut sources = Vec::new();
            for (patch_idx, (cx, cy)) in centers.iter().enumerate() {
                let share = base + u64::from(patch_idx < remainder);
                if share == 0 {
                    continue;
                }
                let points = rect_lattice(
                    cx - CORNER_PATCH_HALF,
                    cx + CORNER_PATCH_HALF,
                    cy - CORNER_PATCH_HALF,
                    cy + CORNER_PATCH_HALF,
                    pitch,
                );
                sources.extend(split_spheres::<T>(&points, share));
            }
            Deployment::from_sources(sources)
        }
        DeploymentPreset::PerimeterStripe => {
            let points = perimeter_lattice(pitch);
            Deployment::from_sources(split_spheres::<T>(&points, n_spheres))
        }
    };

    deployment.validate_in_domain(grid)?;
    Ok(deployment)
}

/// Cell-centered lattice over a rectangle: per axis `round(extent / pitch)`
/// points (at least one), offset half a pitch from the edges.
fn rect_lattice(x0: f64, x1: f64, y0: f64, y1: f64, pitch: f64) -> Vec<(f64, f64)> {
    let count = |lo: f64, hi: f64| -> usize { (((hi - lo) / pitch).round() as usize).max(1) };
    let coord = |lo: f64, hi: f64, idx: usize, n: usize| -> f64 {
        if n == 1 {
            (lo + hi) / 2.0
        } else {
            lo + (idx as f64 + 0.5) * (hi - lo) / n as f64
        }
    };
    let (nx, ny) = (count(x0, x1), count(y0, y1));
    let mut points = Vec::with_capacity(nx * ny);
    for ix in 0..nx {
        for iy in 0..ny {
            points.push((coord(x0, x1, ix, nx), coord(y0, y1, iy, ny)));
        }
    }
    points
}

/// Points every `pitch` along the centerline of the perimeter band: the
/// stripe rectangle inset by half the band width, walked counterclockwise
/// from its lower-left corner.
fn perimeter_lattice(pitch: f64) -> Vec<(f64, f64)> {
    let x_half = STRIPE_X_HALF - PERIMETER_BAND_WIDTH / 2.0;
    let y_half = STRIPE_Y_HALF - PERIMETER_BAND_WIDTH / 2.0;
    let width = 2.0 * x_half;
    let height = 2.0 * y_half;
    let perimeter = 2.0 * (width + height);
    let count = ((perimeter / pitch) + 1e-9).floor() as usize;
    (0..count)
        .map(|m| {
            let s = m as f64 * pitch;
            if s < width {
                (-x_half + s, -y_half)
            } else if s < width + height {
                (x_half, -y_half + (s - width))
            } else if s < 2.0 * width + height {
                (x_half - (s - width - height), y_half)
            } else {
                (-x_half, y_half - (s - 2.0 * width - height))
            }
        })
        .collect()
}

/// Splits `n` spheres over the lattice points: equal shares, remainder to the
/// first points in scan order. Points left with zero spheres are dropped.
fn split_spheres<T: Scalar>(points: &[(f64, f64)], n: u64) -> Vec<Source<T>> {
    let count = points.len() as u64;
    let base = n / count;
    let remainder = n % count;
    points
        .iter()
        .enumerate()
        .filter_map(|(idx, &(x, y))| {
            let share = base + u64::from((idx as u64) < remainder);
            (share > 0).then(|| Source {
                position: [T::of(x), T::of(y), T::of(SOURCE_HEIGHT)],
                sphere_count: share,
            })
        })
        .collect()
}
