//! Discretized 3D domain: geometry, indexing, field storage, slab
//! extraction, and binary snapshots.
//!
//! Fields are dense contiguous arrays in k-fastest order (z innermost),
//! `index = (i * ny + j) * nz + k`, which keeps the vertical stencil
//! cache-friendly and fixes the byte order of snapshot files.

use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;
use crate::scalar::Scalar;

mod snapshot;
pub use snapshot::{read_snapshot, write_snapshot};

/// Uniform structured grid over an axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    x_min: T,
    y_min: T,
    z_min: T,
    dx: T,
    dy: T,
    dz: T,
    nx: usize,
    ny: usize,
    nz: usize,
}

impl<T: Scalar> GridSpec<T> {
    /// Builds a grid from box bounds and step sizes. The extents must be
    /// whole multiples of the steps (to 1e-6 of a step) and every axis needs
    /// at least 3 points so the stencil has an interior.
    pub fn from_bounds(min: [T; 3], max: [T; 3], steps: [T; 3]) -> Result<Self> {
        let mut counts = [0usize; 3];
        for axis in 0..3 {
            let d = steps[axis];
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "grid step on axis {axis} must be > 0, got {d}"
                )));
            }
            let extent = max[axis] - min[axis];
            if !(extent > T::zero()) {
                return Err(Error::InvalidParameter(format!(
                    "grid extent on axis {axis} must be > 0"
                )));
            }
            let ratio = (extent / d).widen();
            let n = ratio.round();
            if (ratio - n).abs() > 1e-6 * n.max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "grid extent on axis {axis} is not a whole multiple of the step \
                     ({extent} / {d})"
                )));
            }
            counts[axis] = n as usize + 1;
        }
        Self::from_counts(min, steps, counts)
    }

    pub fn from_counts(min: [T; 3], steps: [T; 3], counts: [usize; 3]) -> Result<Self> {
        for axis in 0..3 {
            if counts[axis] < 3 {
                return Err(Error::InvalidParameter(format!(
                    "grid needs at least 3 points per axis for interior cells, \
                     axis {axis} has {}",
                    counts[axis]
                )));
            }
            if !(steps[axis] > T::zero()) {
                return Err(Error::InvalidParameter(format!(
                    "grid step on axis {axis} must be > 0"
                )));
            }
        }
        Ok(Self {
            x_min: min[0],
            y_min: min[1],
            z_min: min[2],
            dx: steps[0],
            dy: steps[1],
            dz: steps[2],
            nx: counts[0],
            ny: counts[1],
            nz: counts[2],
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn nz(&self) -> usize {
        self.nz
    }
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.nx, self.ny, self.nz)
    }
    pub fn cell_count(&self) -> usize {
        self.nx * self.ny * self.nz
    }
    pub fn dx(&self) -> T {
        self.dx
    }
    pub fn dy(&self) -> T {
        self.dy
    }
    pub fn dz(&self) -> T {
        self.dz
    }
    pub fn x_min(&self) -> T {
        self.x_min
    }
    pub fn y_min(&self) -> T {
        self.y_min
    }
    pub fn z_min(&self) -> T {
        self.z_min
    }
    pub fn x_max(&self) -> T {
        self.x(self.nx - 1)
    }
    pub fn y_max(&self) -> T {
        self.y(self.ny - 1)
    }
    pub fn z_max(&self) -> T {
        self.z(self.nz - 1)
    }
    pub fn cell_volume(&self) -> T {
        self.dx * self.dy * self.dz
    }

    pub fn x(&self, i: usize) -> T {
        self.x_min + T::of(i as f64) * self.dx
    }
    pub fn y(&self, j: usize) -> T {
        self.y_min + T::of(j as f64) * self.dy
    }
    pub fn z(&self, k: usize) -> T {
        self.z_min + T::of(k as f64) * self.dz
    }
    pub fn cell_coordinates(&self, cell: (usize, usize, usize)) -> [T; 3] {
        [self.x(cell.0), self.y(cell.1), self.z(cell.2)]
    }

    #[inline]
    pub fn linear_index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.ny + j) * self.nz + k
    }

    /// Maps a point to the nearest grid cell, per axis independently.
    /// Exact midpoints round toward the lower index. Points outside the
    /// domain (inclusive bounds) are rejected.
    pub fn nearest_cell(&self, point: [T; 3]) -> Result<(usize, usize, usize)> {
        let i = nearest_index(point[0], self.x_min, self.dx, self.nx);
        let j = nearest_index(point[1], self.y_min, self.dy, self.ny);
        let k = nearest_index(point[2], self.z_min, self.dz, self.nz);
        match (i, j, k) {
            (Some(i), Some(j), Some(k)) => Ok((i, j, k)),
            _ => Err(Error::OutOfDomain {
                x: point[0].widen(),
                y: point[1].widen(),
                z: point[2].widen(),
            }),
        }
    }

    /// True if the point lies inside the box (inclusive, with a 1e-9-step
    /// tolerance on the faces).
    pub fn contains(&self, point: [T; 3]) -> bool {
        let tol = T::of(1e-9);
        point[0] >= self.x_min - tol * self.dx
            && point[0] <= self.x_max() + tol * self.dx
            && point[1] >= self.y_min - tol * self.dy
            && point[1] <= self.y_max() + tol * self.dy
            && point[2] >= self.z_min - tol * self.dz
            && point[2] <= self.z_max() + tol * self.dz
    }
}

fn nearest_index<T: Scalar>(p: T, min: T, d: T, n: usize) -> Option<usize> {
    let t = (p - min) / d;
    let tol = T::of(1e-9);
    if t < -tol || t > T::of((n - 1) as f64) + tol {
        return None;
    }
    let floor = t.floor();
    let frac = t - floor;
    let base = floor.widen().max(0.0) as usize;
    let idx = if frac > T::of(0.5) { base + 1 } else { base };
    Some(idx.min(n - 1))
}

/// Scalar concentration over a grid, molecules/m^3, plus the simulation
/// time it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationField<T> {
    grid: GridSpec<T>,
    values: Vec<T>,
    time: T,
}

impl<T: Scalar> ConcentrationField<T> {
    pub fn zeros(grid: GridSpec<T>) -> Self {
        Self {
            values: vec![T::zero(); grid.cell_count()],
            grid,
            time: T::zero(),
        }
    }

    pub fn from_values(grid: GridSpec<T>, values: Vec<T>, time: T) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::GridMismatch(format!(
                "value buffer has {} entries, grid has {} cells",
                values.len(),
                grid.cell_count()
            )));
        }
        Ok(Self { grid, values, time })
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn set_time(&mut self, time: T) {
        self.time = time;
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize, k: usize) -> T {
        self.values[self.grid.linear_index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: T) {
        let idx = self.grid.linear_index(i, j, k);
        self.values[idx] = v;
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::zero(), T::max)
    }

    /// Total molecules in the domain: `sum(values) * cell_volume`, with
    /// compensated accumulation.
    pub fn total_mass(&self) -> T {
        let mut acc = CompensatedSum::new();
        for &v in &self.values {
            acc.add(v);
        }
        acc.value() * self.grid.cell_volume()
    }

    /// Arithmetic mean over the z-levels whose coordinate lies in
    /// `[z_center - half_width, z_center + half_width]`, per (i, j) column.
    pub fn slab_mean(&self, z_center: T, half_width: T) -> Result<SlabMean<T>> {
        let lo = z_center - half_width;
        let hi = z_center + half_width;
        let tol = T::of(1e-9) * self.grid.dz;
        let levels: Vec<usize> = (0..self.grid.nz)
            .filter(|&k| {
                let z = self.grid.z(k);
                z >= lo - tol && z <= hi + tol
            })
            .collect();
        if levels.is_empty() {
            return Err(Error::EmptySlab {
                lo: lo.widen(),
                hi: hi.widen(),
            });
        }
        let inv_count = T::of(levels.len() as f64).recip();
        let mut values = Vec::with_capacity(self.grid.nx * self.grid.ny);
        for i in 0..self.grid.nx {
            for j in 0..self.grid.ny {
                let mut acc = CompensatedSum::new();
                for &k in &levels {
                    acc.add(self.value(i, j, k));
                }
                values.push(acc.value() * inv_count);
            }
        }
        Ok(SlabMean {
            grid: self.grid,
            z_levels: levels,
            time: self.time,
            values,
        })
    }
}

/// A horizontal slab average: one value per (i, j) column.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabMean<T> {
    grid: GridSpec<T>,
    z_levels: Vec<usize>,
    time: T,
    /// Row-major over `(i, j)`: `index = i * ny + j`.
    values: Vec<T>,
}

impl<T: Scalar> SlabMean<T> {
    pub fn nx(&self) -> usize {
        self.grid.nx()
    }
    pub fn ny(&self) -> usize {
        self.grid.ny()
    }
    pub fn z_levels(&self) -> &[usize] {
        &self.z_levels
    }
    pub fn time(&self) -> T {
        self.time
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> T {
        self.values[i * self.grid.ny() + j]
    }

    /// Writes `x,y,mean_concentration` rows in (i, j) scan order.
    pub fn write_csv_path(&self, path: &std::path::Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(["x", "y", "mean_concentration"])?;
        for i in 0..self.grid.nx() {
            for j in 0..self.grid.ny() {
                writer.write_record([
                    format!("{}", self.grid.x(i)),
                    format!("{}", self.grid.y(j)),
                    format!("{:e}", self.value(i, j).widen()),
                ])?;
            }
        }
        writer.flush()?;
        Ok(())
    }
}
