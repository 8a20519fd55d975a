//! Explicit finite-difference transport.
//!
//! One forward-Euler step `C^{n+1} = C^n + dt (D lap(C) - v . grad(C) + S)`
//! over the double-buffered field: central differences for diffusion,
//! sign-adaptive first-order upwind differences for advection, integrated
//! source injection, an absorbing ground plane, and first-order advective
//! outflow on the lateral and top boundaries.
//!
//! Within a step the order is: interior update, source injection, boundary
//! enforcement. Wind is sampled once per (cell, step) at the start-of-step
//! time and shared by the whole stencil at that cell. Interior updates run
//! data-parallel over x-planes against the immutable previous buffer;
//! per-plane partial sums merge in plane order, so results are identical for
//! any worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{ConcentrationField, GridSpec};
use crate::kinetics::ReleaseModel;
use crate::numerics::CompensatedSum;
use crate::scalar::Scalar;
use crate::scenarios::Deployment;
use crate::wind::{WindField, WindSample};

/// Fraction of the field maximum that a negative excursion may reach before
/// it is treated as an instability instead of round-off.
const NEGATIVE_FLOOR_FRACTION: f64 = 1e-9;

/// Time-integration parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    /// Diffusion coefficient, m^2/s.
    pub diffusion_coefficient: T,
    /// Timestep, s.
    pub dt: T,
    pub total_steps: u64,
    /// Check the sampled wind against the advective limit every step and
    /// abort on violation; also escalates negative excursions beyond
    /// round-off into errors.
    pub cfl_runtime_check: bool,
    /// Noise clamp (in standard deviations) used for the a priori wind bound
    /// in the CFL pre-check.
    pub noise_clamp_sigmas: T,
    /// Scan for non-finite values every this many steps (0 disables).
    pub nan_check_interval: u64,
}

impl<T: Scalar> Default for SolverConfig<T> {
    /// Baseline scenario: D = 1e-5 m^2/s, dt = 2 s, 43200 steps (24 h).
    fn default() -> Self {
        Self {
            diffusion_coefficient: T::of(1e-5),
            dt: T::of(2.0),
            total_steps: 43_200,
            cfl_runtime_check: true,
            noise_clamp_sigmas: T::of(3.0),
            nan_check_interval: 100,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "solver dt must be > 0, got {}",
                self.dt
            )));
        }
        if !(self.diffusion_coefficient >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "diffusion coefficient must be >= 0, got {}",
                self.diffusion_coefficient
            )));
        }
        if self.total_steps < 1 {
            return Err(Error::InvalidParameter(
                "total_steps must be >= 1".to_string(),
            ));
        }
        if !(self.noise_clamp_sigmas > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "noise_clamp_sigmas must be > 0, got {}",
                self.noise_clamp_sigmas
            )));
        }
        Ok(())
    }
}

/// Where the released molecules are: still in the domain, absorbed at the
/// ground, or carried out through the lateral/top boundaries. All entries in
/// molecules, cumulative over the run except `in_domain` (current).
///
/// Ground and boundary entries combine the mass wiped by the boundary rules
/// with the diffusive exchange from boundary-adjacent interior cells into
/// the overwritten shell; under zero wind the four entries close exactly.
/// The non-conservative advection form does not admit an exact budget under
/// divergent winds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassBudget<T> {
    pub released: T,
    pub in_domain: T,
    pub absorbed_ground: T,
    pub boundary_outflow: T,
}

impl<T: Scalar> Default for MassBudget<T> {
    fn default() -> Self {
        Self {
            released: T::zero(),
            in_domain: T::zero(),
            absorbed_ground: T::zero(),
            boundary_outflow: T::zero(),
        }
    }
}

impl<T: Scalar> MassBudget<T> {
    /// `|released - in_domain - absorbed_ground - boundary_outflow|`.
    pub fn closure_error(&self) -> T {
        (self.released - self.in_domain - self.absorbed_ground - self.boundary_outflow).abs()
    }

    /// Closure error as a fraction of released mass (0 when nothing has
    /// been released).
    pub fn relative_closure_error(&self) -> T {
        if self.released > T::zero() {
            self.closure_error() / self.released
        } else {
            T::zero()
        }
    }
}

/// Outcome of the timestep stability check.
#[derive(Debug, Clone, Copy)]
pub struct CflReport<T> {
    pub dt: T,
    pub advective_limit: T,
    pub diffusive_limit: T,
    /// The componentwise velocity bound the advective limit was derived from.
    pub max_velocity: [T; 3],
    pub pass: bool,
}

impl<T: Scalar> std::fmt::Display for CflReport<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CFL report")?;
        writeln!(f, "  dt               : {} s", self.dt)?;
        writeln!(
            f,
            "  advective limit  : {:.6} s (bound |v| = ({:.6}, {:.6}, {:.6}) m/s)",
            self.advective_limit, self.max_velocity[0], self.max_velocity[1], self.max_velocity[2]
        )?;
        writeln!(f, "  diffusive limit  : {:.6} s", self.diffusive_limit)?;
        write!(
            f,
            "  status           : {}",
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Evaluates both stability limits for a grid, timestep, and velocity bound.
///
/// Advective: `dt <= min_axis(step / max|v_axis|)`, axes with zero bound
/// impose no limit. Diffusive: `dt <= min(dx^2, dy^2, dz^2) / (6 D)`.
pub fn check_cfl<T: Scalar>(
    grid: &GridSpec<T>,
    config: &SolverConfig<T>,
    vmax: [T; 3],
) -> CflReport<T> {
    let steps = [grid.dx(), grid.dy(), grid.dz()];
    let mut advective_limit = T::infinity();
    for axis in 0..3 {
        if vmax[axis] > T::zero() {
            advective_limit = advective_limit.min(steps[axis] / vmax[axis]);
        }
    }
    let d = config.diffusion_coefficient;
    let diffusive_limit = if d > T::zero() {
        let min_sq = steps.iter().map(|&s| s * s).fold(T::infinity(), T::min);
        min_sq / (T::of(6.0) * d)
    } else {
        T::infinity()
    };
    CflReport {
        dt: config.dt,
        advective_limit,
        diffusive_limit,
        max_velocity: vmax,
        pass: config.dt <= advective_limit && config.dt <= diffusive_limit,
    }
}

/// Central-difference Laplacian times the diffusion coefficient at an
/// interior cell, molecules/m^3/s.
///
/// Reference implementation sharing the integrator's exact arithmetic
/// (multiplication by precomputed reciprocal steps), so composing the terms
/// reproduces a fused step bit for bit.
pub fn diffusion_term<T: Scalar>(
    field: &ConcentrationField<T>,
    cell: (usize, usize, usize),
    diffusion_coefficient: T,
) -> T {
    let (i, j, k) = cell;
    let g = *field.grid();
    assert!(
        i >= 1 && i + 1 < g.nx() && j >= 1 && j + 1 < g.ny() && k >= 1 && k + 1 < g.nz(),
        "diffusion_term is defined on interior cells"
    );
    let (inv_dx, inv_dy, inv_dz) = (g.dx().recip(), g.dy().recip(), g.dz().recip());
    let two = T::of(2.0);
    let c = field.value(i, j, k);
    let lap = (field.value(i + 1, j, k) - two * c + field.value(i - 1, j, k)) * (inv_dx * inv_dx)
        + (field.value(i, j + 1, k) - two * c + field.value(i, j - 1, k)) * (inv_dy * inv_dy)
        + (field.value(i, j, k + 1) - two * c + field.value(i, j, k - 1)) * (inv_dz * inv_dz);
    diffusion_coefficient * lap
}

/// Upwind advection tendency `-(v . grad C)` at an interior cell,
/// molecules/m^3/s. Each component differences toward its upstream
/// neighbor: backward for non-negative velocity, forward otherwise.
pub fn advection_term<T: Scalar>(
    field: &ConcentrationField<T>,
    cell: (usize, usize, usize),
    wind: &WindSample<T>,
) -> T {
    let (i, j, k) = cell;
    let g = *field.grid();
    assert!(
        i >= 1 && i + 1 < g.nx() && j >= 1 && j + 1 < g.ny() && k >= 1 && k + 1 < g.nz(),
        "advection_term is defined on interior cells"
    );
    let (inv_dx, inv_dy, inv_dz) = (g.dx().recip(), g.dy().recip(), g.dz().recip());
    let c = field.value(i, j, k);
    let gx = if wind.vx >= T::zero() {
        (c - field.value(i - 1, j, k)) * inv_dx
    } else {
        (field.value(i + 1, j, k) - c) * inv_dx
    };
    let gy = if wind.vy >= T::zero() {
        (c - field.value(i, j - 1, k)) * inv_dy
    } else {
        (field.value(i, j + 1, k) - c) * inv_dy
    };
    let gz = if wind.vz >= T::zero() {
        (c - field.value(i, j, k - 1)) * inv_dz
    } else {
        (field.value(i, j, k + 1) - c) * inv_dz
    };
    -(wind.vx * gx + wind.vy * gy + wind.vz * gz)
}

/// A deployment snapped onto grid cells, with co-located sources merged.
#[derive(Debug, Clone)]
pub struct MappedDeployment<T> {
    /// `(linear cell index, sphere count)`, deduplicated.
    entries: Vec<(usize, T)>,
    cell_volume: T,
}

impl<T: Scalar> MappedDeployment<T> {
    /// Maps every source to its nearest cell and sums counts per cell.
    /// Sources must not land on the ground plane.
    pub fn new(deployment: &Deployment<T>, grid: &GridSpec<T>) -> Result<Self> {
        deployment.validate_in_domain(grid)?;
        let mut per_cell = std::collections::BTreeMap::<usize, u64>::new();
        for source in deployment.sources() {
            let (i, j, k) = grid.nearest_cell(source.position)?;
            if k == 0 {
                return Err(Error::Deployment(format!(
                    "source at ({}, {}, {}) maps onto the absorbing ground plane",
                    source.position[0], source.position[1], source.position[2]
                )));
            }
            *per_cell.entry(grid.linear_index(i, j, k)).or_default() += source.sphere_count;
        }
        Ok(Self {
            entries: per_cell
                .into_iter()
                .map(|(idx, count)| (idx, T::of(count as f64)))
                .collect(),
            cell_volume: grid.cell_volume(),
        })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(idx, _)| idx)
    }
}

/// Adds one timestep of release to the field: each mapped cell gains
/// `incremental_release(t, t + dt) * spheres / cell_volume`. Returns the
/// molecules injected; `budget.released` grows by the same amount.
pub fn inject_sources<T: Scalar>(
    field: &mut ConcentrationField<T>,
    sources: &MappedDeployment<T>,
    model: &ReleaseModel<T>,
    t_s: T,
    dt_s: T,
    budget: &mut MassBudget<T>,
) -> Result<T> {
    if sources.is_empty() {
        return Ok(T::zero());
    }
    let per_sphere = model.incremental_release_seconds(t_s, t_s + dt_s)?;
    if per_sphere == T::zero() {
        return Ok(T::zero());
    }
    let values = field.values_mut();
    let mut injected = CompensatedSum::new();
    for &(idx, spheres) in &sources.entries {
        let molecules = per_sphere * spheres;
        values[idx] = values[idx] + molecules / sources.cell_volume;
        injected.add(molecules);
    }
    let total = injected.value();
    budget.released = budget.released + total;
    Ok(total)
}

/// What one boundary sweep did, before scaling by cell volume.
struct BoundaryOutcome<T> {
    /// Sum of values wiped off the ground plane.
    ground_removed: T,
    /// Net sum of (previous - new) over lateral/top shell cells.
    shell_removed: T,
    /// Sum of new shell values (for the domain-mass tally).
    shell_total: T,
    max_abs_v: [T; 3],
    max_value: T,
}

/// Enforces the boundary rules on `next` from `prev` values.
///
/// Ground plane (k = 0) is forced to zero. Each lateral/top shell cell is
/// rebuilt from its previous value by applying, per boundary axis in the
/// fixed order x, y, z: the first-order advective outflow update when the
/// normal velocity points outward, or zero when it points inward or is
/// stagnant.
fn boundary_pass<T: Scalar, W: WindField<T>>(
    prev: &ConcentrationField<T>,
    next: &mut ConcentrationField<T>,
    wind: &W,
    state: &W::StepState,
    dt: T,
) -> BoundaryOutcome<T> {
    let g = *prev.grid();
    let (nx, ny, nz) = g.shape();
    let (sx, sy) = (ny * nz, nz);
    let inv = [g.dx().recip(), g.dy().recip(), g.dz().recip()];
    let p = prev.values();
    let out = next.values_mut();

    let mut ground_removed = CompensatedSum::new();
    let mut shell_removed = CompensatedSum::new();
    let mut shell_total = CompensatedSum::new();
    let mut max_abs_v = [T::zero(); 3];
    let mut max_value = T::zero();

    for i in 0..nx {
        for j in 0..ny {
            let row = (i * ny + j) * nz;
            // absorbing ground plane
            ground_removed.add(p[row]);
            out[row] = T::zero();

            let on_x = i == 0 || i == nx - 1;
            let on_y = j == 0 || j == ny - 1;
            for k in 1..nz {
                if !(on_x || on_y || k == nz - 1) {
                    continue;
                }
                let idx = row + k;
                let w = wind.sample(state, (i, j, k));
                max_abs_v[0] = max_abs_v[0].max(w.vx.abs());
                max_abs_v[1] = max_abs_v[1].max(w.vy.abs());
                max_abs_v[2] = max_abs_v[2].max(w.vz.abs());

                let mut val = p[idx];
                if i == 0 {
                    val = if w.vx < T::zero() {
                        val - dt * w.vx * ((p[idx + sx] - p[idx]) * inv[0])
                    } else {
                        T::zero()
                    };
                } else if i == nx - 1 {
                    val = if w.vx > T::zero() {
                        val - dt * w.vx * ((p[idx] - p[idx - sx]) * inv[0])
                    } else {
                        T::zero()
                    };
                }
                if j == 0 {
                    val = if w.vy < T::zero() {
                        val - dt * w.vy * ((p[idx + sy] - p[idx]) * inv[1])
                    } else {
                        T::zero()
                    };
                } else if j == ny - 1 {
                    val = if w.vy > T::zero() {
                        val - dt * w.vy * ((p[idx] - p[idx - sy]) * inv[1])
                    } else {
                        T::zero()
                    };
                }
                if k == nz - 1 {
                    val = if w.vz > T::zero() {
                        val - dt * w.vz * ((p[idx] - p[idx - 1]) * inv[2])
                    } else {
                        T::zero()
                    };
                }
                // corner cells under double outflow can overshoot first order
                val = val.max(T::zero());

                shell_removed.add(p[idx] - val);
                shell_total.add(val);
                max_value = max_value.max(val);
                out[idx] = val;
            }
        }
    }

    BoundaryOutcome {
        ground_removed: ground_removed.value(),
        shell_removed: shell_removed.value(),
        shell_total: shell_total.value(),
        max_abs_v,
        max_value,
    }
}

/// Standalone boundary enforcement; `budget` gains the wiped ground mass and
/// the net shell removal (scaled by cell volume).
pub fn apply_boundaries<T: Scalar, W: WindField<T>>(
    prev: &ConcentrationField<T>,
    next: &mut ConcentrationField<T>,
    wind: &W,
    step: u64,
    dt: T,
    budget: &mut MassBudget<T>,
) {
    let state = wind.begin_step(prev.time(), step);
    let outcome = boundary_pass(prev, next, wind, &state, dt);
    let volume = prev.grid().cell_volume();
    budget.absorbed_ground = budget.absorbed_ground + outcome.ground_removed * volume;
    budget.boundary_outflow = budget.boundary_outflow + outcome.shell_removed * volume;
}

/// Per-plane partial results of the interior sweep.
struct PlanePartial<T> {
    mass: CompensatedSum<T>,
    /// Raw diffusive exchange toward shell neighbors, per scaling group.
    ground_raw: CompensatedSum<T>,
    x_raw: CompensatedSum<T>,
    y_raw: CompensatedSum<T>,
    top_raw: CompensatedSum<T>,
    max_abs_v: [T; 3],
    max_value: T,
    worst_negative: T,
}

impl<T: Scalar> PlanePartial<T> {
    fn new() -> Self {
        Self {
            mass: CompensatedSum::new(),
            ground_raw: CompensatedSum::new(),
            x_raw: CompensatedSum::new(),
            y_raw: CompensatedSum::new(),
            top_raw: CompensatedSum::new(),
            max_abs_v: [T::zero(); 3],
            max_value: T::zero(),
            worst_negative: T::zero(),
        }
    }
}

/// Read-only view of the state after a completed step.
pub struct StepView<'a, T> {
    pub field: &'a ConcentrationField<T>,
    pub budget: &'a MassBudget<T>,
    /// 1-based count of completed steps.
    pub step: u64,
    pub time_s: T,
}

/// Double-buffered explicit integrator over one grid.
pub struct Simulation<T, W> {
    grid: GridSpec<T>,
    config: SolverConfig<T>,
    wind: W,
    release: ReleaseModel<T>,
    sources: MappedDeployment<T>,
    prev: ConcentrationField<T>,
    next: ConcentrationField<T>,
    budget: MassBudget<T>,
    step_index: u64,
    prev_max: T,
}

impl<T: Scalar, W: WindField<T>> Simulation<T, W> {
    /// Validates the configuration, maps the deployment, and runs the CFL
    /// pre-check against the wind model's clamped bound.
    pub fn new(
        grid: GridSpec<T>,
        config: SolverConfig<T>,
        wind: W,
        release: ReleaseModel<T>,
        deployment: &Deployment<T>,
    ) -> Result<Self> {
        config.validate()?;
        let sources = MappedDeployment::new(deployment, &grid)?;
        let report = check_cfl(
            &grid,
            &config,
            wind.component_bounds(config.noise_clamp_sigmas, grid.z_max()),
        );
        if !report.pass {
            return Err(Error::Config(format!("CFL pre-check failed\n{report}")));
        }
        Ok(Self {
            prev: ConcentrationField::zeros(grid),
            next: ConcentrationField::zeros(grid),
            budget: MassBudget::default(),
            step_index: 0,
            prev_max: T::zero(),
            grid,
            config,
            wind,
            release,
            sources,
        })
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn config(&self) -> &SolverConfig<T> {
        &self.config
    }

    pub fn wind(&self) -> &W {
        &self.wind
    }

    pub fn budget(&self) -> &MassBudget<T> {
        &self.budget
    }

    pub fn field(&self) -> &ConcentrationField<T> {
        &self.prev
    }

    pub fn steps_completed(&self) -> u64 {
        self.step_index
    }

    /// Mutable access to the current field, for initial conditions; the
    /// in-domain mass tally picks the change up on the next step.
    pub fn initial_field_mut(&mut self) -> &mut ConcentrationField<T> {
        &mut self.prev
    }

    /// Refreshes internal extrema after editing the initial field.
    pub fn commit_initial_field(&mut self) {
        self.prev_max = self.prev.max_value();
        self.budget.in_domain = self.prev.total_mass();
    }

    pub fn cfl_report(&self) -> CflReport<T> {
        check_cfl(
            &self.grid,
            &self.config,
            self.wind
                .component_bounds(self.config.noise_clamp_sigmas, self.grid.z_max()),
        )
    }

    /// Advances one step.
    ///
    /// On error the in-progress update is abandoned and the simulation must
    /// not be stepped further.
    pub fn step(&mut self) -> Result<()> {
        let t = self.prev.time();
        let dt = self.config.dt;
        let d = self.config.diffusion_coefficient;
        let (nx, ny, nz) = self.grid.shape();
        let (sx, sy) = (ny * nz, nz);
        let inv_dx = self.grid.dx().recip();
        let inv_dy = self.grid.dy().recip();
        let inv_dz = self.grid.dz().recip();
        let inv_dx2 = inv_dx * inv_dx;
        let inv_dy2 = inv_dy * inv_dy;
        let inv_dz2 = inv_dz * inv_dz;
        let two = T::of(2.0);
        let neg_floor = -T::of(NEGATIVE_FLOOR_FRACTION) * self.prev_max;
        let state = self.wind.begin_step(t, self.step_index);

        let prev_values = self.prev.values();
        let wind = &self.wind;

        // Interior sweep: one rayon task per x-plane, fixed chunking, so the
        // partial merge order (and therefore every budget bit) is identical
        // for any worker count.
        let partials: Vec<PlanePartial<T>> = self
            .next
            .values_mut()
            .par_chunks_mut(sx)
            .enumerate()
            .map(|(i, out_plane)| {
                let mut part = PlanePartial::<T>::new();
                if i == 0 || i == nx - 1 {
                    return part;
                }
                for j in 1..ny - 1 {
                    let row = (i * ny + j) * nz;
                    let c = &prev_values[row..row + nz];
                    let xm = &prev_values[row - sx..row - sx + nz];
                    let xp = &prev_values[row + sx..row + sx + nz];
                    let ym = &prev_values[row - sy..row - sy + nz];
                    let yp = &prev_values[row + sy..row + sy + nz];
                    let out = &mut out_plane[j * nz..j * nz + nz];
                    for k in 1..nz - 1 {
                        let w = wind.sample(&state, (i, j, k));
                        part.max_abs_v[0] = part.max_abs_v[0].max(w.vx.abs());
                        part.max_abs_v[1] = part.max_abs_v[1].max(w.vy.abs());
                        part.max_abs_v[2] = part.max_abs_v[2].max(w.vz.abs());

                        let center = c[k];
                        let lap = (xp[k] - two * center + xm[k]) * inv_dx2
                            + (yp[k] - two * center + ym[k]) * inv_dy2
                            + (c[k + 1] - two * center + c[k - 1]) * inv_dz2;
                        let gx = if w.vx >= T::zero() {
                            (center - xm[k]) * inv_dx
                        } else {
                            (xp[k] - center) * inv_dx
                        };
                        let gy = if w.vy >= T::zero() {
                            (center - ym[k]) * inv_dy
                        } else {
                            (yp[k] - center) * inv_dy
                        };
                        let gz = if w.vz >= T::zero() {
                            (center - c[k - 1]) * inv_dz
                        } else {
                            (c[k + 1] - center) * inv_dz
                        };
                        let mut val = center + dt * (d * lap - (w.vx * gx + w.vy * gy + w.vz * gz));
                        if val < T::zero() {
                            part.worst_negative = part.worst_negative.min(val);
                            val = T::zero();
                        }
                        out[k] = val;
                        part.mass.add(val);
                        part.max_value = part.max_value.max(val);

                        // diffusive exchange toward overwritten shell cells
                        if k == 1 {
                            part.ground_raw.add(center - c[k - 1]);
                        }
                        if k == nz - 2 {
                            part.top_raw.add(center - c[k + 1]);
                        }
                        if j == 1 {
                            part.y_raw.add(center - ym[k]);
                        }
                        if j == ny - 2 {
                            part.y_raw.add(center - yp[k]);
                        }
                        if i == 1 {
                            part.x_raw.add(center - xm[k]);
                        }
                        if i == nx - 2 {
                            part.x_raw.add(center - xp[k]);
                        }
                    }
                }
                part
            })
            .collect();

        let mut mass = CompensatedSum::new();
        let mut ground_raw = CompensatedSum::new();
        let mut x_raw = CompensatedSum::new();
        let mut y_raw = CompensatedSum::new();
        let mut top_raw = CompensatedSum::new();
        let mut max_abs_v = [T::zero(); 3];
        let mut max_value = T::zero();
        let mut worst_negative = T::zero();
        for part in &partials {
            mass.merge(&part.mass);
            ground_raw.merge(&part.ground_raw);
            x_raw.merge(&part.x_raw);
            y_raw.merge(&part.y_raw);
            top_raw.merge(&part.top_raw);
            for (held, &seen) in max_abs_v.iter_mut().zip(&part.max_abs_v) {
                *held = held.max(seen);
            }
            max_value = max_value.max(part.max_value);
            worst_negative = worst_negative.min(part.worst_negative);
        }

        let injected = inject_sources(
            &mut self.next,
            &self.sources,
            &self.release,
            t,
            dt,
            &mut self.budget,
        )?;
        if injected > T::zero() {
            for idx in self.sources.cells() {
                max_value = max_value.max(self.next.values()[idx]);
            }
        }

        let boundary = boundary_pass(&self.prev, &mut self.next, &self.wind, &state, dt);
        for (held, &seen) in max_abs_v.iter_mut().zip(&boundary.max_abs_v) {
            *held = held.max(seen);
        }
        max_value = max_value.max(boundary.max_value);

        if self.config.cfl_runtime_check {
            let steps = [self.grid.dx(), self.grid.dy(), self.grid.dz()];
            let mut limit = T::infinity();
            for axis in 0..3 {
                if max_abs_v[axis] > T::zero() {
                    limit = limit.min(steps[axis] / max_abs_v[axis]);
                }
            }
            if dt > limit {
                return Err(Error::CflViolation {
                    step: self.step_index,
                    dt: dt.widen(),
                    limit: limit.widen(),
                    vx: max_abs_v[0].widen(),
                    vy: max_abs_v[1].widen(),
                    vz: max_abs_v[2].widen(),
                });
            }
            if worst_negative < neg_floor {
                return Err(Error::NegativeConcentration {
                    step: self.step_index,
                    value: worst_negative.widen(),
                    floor: neg_floor.widen(),
                });
            }
        }

        if self.config.nan_check_interval > 0
            && self
                .step_index
                .is_multiple_of(self.config.nan_check_interval)
        {
            if let Some(flat) = self.next.values().iter().position(|v| !v.is_finite()) {
                let i = flat / sx;
                let j = (flat % sx) / nz;
                let k = flat % nz;
                return Err(Error::NonFinite {
                    step: self.step_index,
                    i,
                    j,
                    k,
                });
            }
        }

        // budget bookkeeping (cell volume scales concentration sums to mass)
        let volume = self.grid.cell_volume();
        let diff_scale = dt * d;
        let ground_flux = ground_raw.value() * diff_scale * inv_dz2;
        let shell_flux = x_raw.value() * diff_scale * inv_dx2
            + y_raw.value() * diff_scale * inv_dy2
            + top_raw.value() * diff_scale * inv_dz2;
        self.budget.absorbed_ground =
            self.budget.absorbed_ground + (ground_flux + boundary.ground_removed) * volume;
        self.budget.boundary_outflow =
            self.budget.boundary_outflow + (shell_flux + boundary.shell_removed) * volume;
        self.budget.in_domain = (mass.value() + boundary.shell_total) * volume + injected;

        std::mem::swap(&mut self.prev, &mut self.next);
        self.prev.set_time(t + dt);
        self.prev_max = max_value;
        self.step_index += 1;
        Ok(())
    }

    /// Runs `steps` steps, handing each completed state to `on_step`.
    pub fn run(
        &mut self,
        steps: u64,
        mut on_step: impl FnMut(StepView<'_, T>) -> Result<()>,
    ) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
            on_step(StepView {
                field: &self.prev,
                budget: &self.budget,
                step: self.step_index,
                time_s: self.prev.time(),
            })?;
        }
        Ok(())
    }
}
