//! Seeded, reproducible stochastic wind field.
//!
//! Horizontal speed carries a diurnal sine modulation and multiplicative
//! Gaussian noise; direction rotates through a full turn per day with
//! additive Gaussian jitter; the vertical component follows a logarithmic
//! shear profile that vanishes at the ground. Noise is drawn from a
//! counter-based generator keyed by `(seed, cell, step, component)`, so the
//! whole 4D field is a pure function of the key and identical under any
//! evaluation order or worker count.

use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::noise;
use crate::scalar::Scalar;

/// Parameters of the stochastic wind field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindModelParams<T> {
    /// Mean horizontal speed, m/s.
    pub mean_speed: T,
    /// Relative amplitude of the diurnal speed modulation.
    pub diurnal_amplitude: T,
    /// Period of the diurnal cycle, s.
    pub diurnal_period: T,
    /// Variance of the multiplicative speed noise.
    pub speed_noise_variance: T,
    /// Variance of the additive direction noise, rad^2.
    pub direction_noise_variance: T,
    /// Vertical component as a fraction of horizontal speed.
    pub vertical_scale: T,
    /// Reference height of the vertical shear profile, m.
    pub reference_height: T,
    /// Noise seed.
    pub seed: u64,
}

impl<T: Scalar> Default for WindModelParams<T> {
    /// Light-air baseline: 0.5 m/s mean, 50% diurnal swing over 24 h, speed
    /// noise variance 0.03, direction noise variance 1.5 rad^2, 10% vertical
    /// scale against a 5 m reference height.
    fn default() -> Self {
        Self {
            mean_speed: T::of(0.5),
            diurnal_amplitude: T::of(0.5),
            diurnal_period: T::of(86_400.0),
            speed_noise_variance: T::of(0.03),
            direction_noise_variance: T::of(1.5),
            vertical_scale: T::of(0.1),
            reference_height: T::of(5.0),
            seed: 0,
        }
    }
}

impl<T: Scalar> WindModelParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_speed >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "wind mean_speed must be >= 0, got {}",
                self.mean_speed
            )));
        }
        if !(self.speed_noise_variance >= T::zero())
            || !(self.direction_noise_variance >= T::zero())
        {
            return Err(Error::InvalidParameter(
                "wind noise variances must be >= 0".to_string(),
            ));
        }
        if !(self.reference_height > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "wind reference_height must be > 0, got {}",
                self.reference_height
            )));
        }
        if !(self.diurnal_period > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "wind diurnal_period must be > 0, got {}",
                self.diurnal_period
            )));
        }
        Ok(())
    }

    fn sigma_speed(&self) -> T {
        self.speed_noise_variance.sqrt()
    }

    fn sigma_direction(&self) -> T {
        self.direction_noise_variance.sqrt()
    }
}

/// One sampled velocity vector, m/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WindSample<T> {
    pub vx: T,
    pub vy: T,
    pub vz: T,
}

/// Diurnal modulation factor `sin(2 pi t / period)`.
pub fn diurnal_factor<T: Scalar>(t: T, period: T) -> T {
    (T::of(std::f64::consts::TAU) * t / period).sin()
}

#[inline]
fn base_speed<T: Scalar>(params: &WindModelParams<T>, t: T) -> T {
    params.mean_speed
        * (T::one() + params.diurnal_amplitude * diurnal_factor(t, params.diurnal_period))
}

#[inline]
fn mean_direction<T: Scalar>(params: &WindModelParams<T>, t: T) -> T {
    T::of(std::f64::consts::TAU) * t / params.diurnal_period
}

#[inline]
fn compose_sample<T: Scalar>(
    params: &WindModelParams<T>,
    base: T,
    theta_mean: T,
    eta_speed: T,
    eta_dir: T,
    vertical_profile: T,
) -> WindSample<T> {
    // The multiplicative speed factor is clamped at zero: the Gaussian tail
    // would otherwise produce negative speeds.
    let speed = base * (T::one() + eta_speed).max(T::zero());
    let theta = theta_mean + eta_dir;
    WindSample {
        vx: speed * theta.cos(),
        vy: speed * theta.sin(),
        vz: params.vertical_scale * speed * vertical_profile,
    }
}

#[inline]
fn noise_pair<T: Scalar>(
    seed: u64,
    sigma_speed: T,
    sigma_dir: T,
    cell_linear: u64,
    step: u64,
) -> (T, T) {
    let eta_speed = sigma_speed * T::of(noise::keyed_standard_normal(seed, cell_linear, step, 0));
    let eta_dir = sigma_dir * T::of(noise::keyed_standard_normal(seed, cell_linear, step, 1));
    (eta_speed, eta_dir)
}

/// Samples the wind at one grid cell and time.
///
/// `cell` indexes the grid point, `z` is its physical height; `step` keys the
/// per-timestep noise. Querying the same `(seed, cell, step)` twice returns
/// an identical sample.
pub fn wind_at<T: Scalar>(
    params: &WindModelParams<T>,
    cell: (usize, usize, usize),
    grid_shape: (usize, usize, usize),
    z: T,
    t: T,
    step: u64,
) -> WindSample<T> {
    let cell_linear = ((cell.0 * grid_shape.1 + cell.1) * grid_shape.2 + cell.2) as u64;
    let (eta_speed, eta_dir) =
        if params.speed_noise_variance > T::zero() || params.direction_noise_variance > T::zero() {
            noise_pair(
                params.seed,
                params.sigma_speed(),
                params.sigma_direction(),
                cell_linear,
                step,
            )
        } else {
            (T::zero(), T::zero())
        };
    compose_sample(
        params,
        base_speed(params, t),
        mean_direction(params, t),
        eta_speed,
        eta_dir,
        (T::one() + z / params.reference_height).ln(),
    )
}

/// Upper bound on the horizontal speed with noise clamped at
/// `clamp_sigmas` standard deviations, m/s.
pub fn speed_bound<T: Scalar>(params: &WindModelParams<T>, clamp_sigmas: T) -> T {
    params.mean_speed
        * (T::one() + params.diurnal_amplitude)
        * (T::one() + clamp_sigmas * params.sigma_speed())
}

/// Matching bound on the vertical component at height `z_max`.
pub fn vertical_speed_bound<T: Scalar>(
    params: &WindModelParams<T>,
    clamp_sigmas: T,
    z_max: T,
) -> T {
    params.vertical_scale
        * speed_bound(params, clamp_sigmas)
        * (T::one() + z_max / params.reference_height).ln()
}

/// A wind model the solver can sample per cell per step.
pub trait WindField<T: Scalar>: Sync {
    /// Values shared by every cell of one timestep.
    type StepState: Sync + Send;

    fn begin_step(&self, t: T, step: u64) -> Self::StepState;

    fn sample(&self, state: &Self::StepState, cell: (usize, usize, usize)) -> WindSample<T>;

    /// A priori componentwise bounds on |v| for stability pre-checks.
    fn component_bounds(&self, clamp_sigmas: T, z_max: T) -> [T; 3];
}

/// The stochastic field of [`WindModelParams`], with the per-level vertical
/// profile precomputed for a grid.
#[derive(Debug, Clone)]
pub struct StochasticWind<T> {
    params: WindModelParams<T>,
    shape: (usize, usize, usize),
    /// `ln(1 + z_k / z_ref)` per vertical level.
    vertical_profile: Vec<T>,
    sigma_speed: T,
    sigma_dir: T,
    noisy: bool,
}

impl<T: Scalar> StochasticWind<T> {
    pub fn new(params: WindModelParams<T>, grid: &GridSpec<T>) -> Result<Self> {
        params.validate()?;
        let vertical_profile = (0..grid.nz())
            .map(|k| (T::one() + grid.z(k) / params.reference_height).ln())
            .collect();
        Ok(Self {
            noisy: params.speed_noise_variance > T::zero()
                || params.direction_noise_variance > T::zero(),
            shape: grid.shape(),
            sigma_speed: params.sigma_speed(),
            sigma_dir: params.sigma_direction(),
            params,
            vertical_profile,
        })
    }

    pub fn params(&self) -> &WindModelParams<T> {
        &self.params
    }
}

/// Per-step cache for [`StochasticWind`].
pub struct StochasticStep<T> {
    step: u64,
    base: T,
    theta_mean: T,
}

impl<T: Scalar> WindField<T> for StochasticWind<T> {
    type StepState = StochasticStep<T>;

    fn begin_step(&self, t: T, step: u64) -> StochasticStep<T> {
        StochasticStep {
            step,
            base: base_speed(&self.params, t),
            theta_mean: mean_direction(&self.params, t),
        }
    }

    #[inline]
    fn sample(&self, state: &StochasticStep<T>, cell: (usize, usize, usize)) -> WindSample<T> {
        let cell_linear = ((cell.0 * self.shape.1 + cell.1) * self.shape.2 + cell.2) as u64;
        let (eta_speed, eta_dir) = if self.noisy {
            noise_pair(
                self.params.seed,
                self.sigma_speed,
                self.sigma_dir,
                cell_linear,
                state.step,
            )
        } else {
            (T::zero(), T::zero())
        };
        compose_sample(
            &self.params,
            state.base,
            state.theta_mean,
            eta_speed,
            eta_dir,
            self.vertical_profile[cell.2],
        )
    }

    fn component_bounds(&self, clamp_sigmas: T, z_max: T) -> [T; 3] {
        let horizontal = speed_bound(&self.params, clamp_sigmas);
        [
            horizontal,
            horizontal,
            vertical_speed_bound(&self.params, clamp_sigmas, z_max),
        ]
    }
}

/// Spatially and temporally constant wind; the degenerate case used by
/// transport oracles and as a stand-in for calm conditions.
#[derive(Debug, Clone, Copy)]
pub struct UniformWind<T> {
    pub velocity: WindSample<T>,
}

impl<T: Scalar> UniformWind<T> {
    pub fn new(vx: T, vy: T, vz: T) -> Self {
        Self {
            velocity: WindSample { vx, vy, vz },
        }
    }

    pub fn calm() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }
}

impl<T: Scalar> WindField<T> for UniformWind<T> {
    type StepState = ();

    fn begin_step(&self, _t: T, _step: u64) {}

    #[inline]
    fn sample(&self, _state: &(), _cell: (usize, usize, usize)) -> WindSample<T> {
        self.velocity
    }

    fn component_bounds(&self, _clamp_sigmas: T, _z_max: T) -> [T; 3] {
        [
            self.velocity.vx.abs(),
            self.velocity.vy.abs(),
            self.velocity.vz.abs(),
        ]
    }
}

/// One step's samples for the whole grid, in linear cell order.
type StepBuffer<T> = Arc<Vec<WindSample<T>>>;

/// A stochastic wind whose per-step sample buffer is shared between clones.
///
/// Scenario comparisons run several deployments against matched seeds; the
/// wind realization is then identical across simulations, so lockstepped
/// runs can pay the sampling cost once per step instead of once per run.
/// Clones share the cache. Samples are bit-identical to the wrapped
/// [`StochasticWind`]; out-of-step access stays correct (the buffer is
/// recomputed on a step miss), it just stops saving work.
#[derive(Clone)]
pub struct SharedWind<T> {
    inner: Arc<StochasticWind<T>>,
    cache: StepCache<T>,
}

type StepCache<T> = Arc<Mutex<Option<(u64, StepBuffer<T>)>>>;

impl<T: Scalar> SharedWind<T> {
    pub fn new(inner: StochasticWind<T>) -> Self {
        Self {
            inner: Arc::new(inner),
            cache: Arc::new(Mutex::new(None)),
        }
    }
}

impl<T: Scalar> WindField<T> for SharedWind<T> {
    type StepState = StepBuffer<T>;

    fn begin_step(&self, t: T, step: u64) -> Self::StepState {
        let mut guard = self.cache.lock().expect("wind cache lock");
        if let Some((cached_step, buffer)) = guard.as_ref() {
            if *cached_step == step {
                return Arc::clone(buffer);
            }
        }
        let state = self.inner.begin_step(t, step);
        let (nx, ny, nz) = self.inner.shape;
        let zero = WindSample {
            vx: T::zero(),
            vy: T::zero(),
            vz: T::zero(),
        };
        let mut buffer = vec![zero; nx * ny * nz];
        buffer
            .par_chunks_mut(ny * nz)
            .enumerate()
            .for_each(|(i, plane)| {
                for j in 0..ny {
                    for k in 0..nz {
                        plane[j * nz + k] = self.inner.sample(&state, (i, j, k));
                    }
                }
            });
        let buffer = Arc::new(buffer);
        *guard = Some((step, Arc::clone(&buffer)));
        buffer
    }

    #[inline]
    fn sample(&self, state: &Self::StepState, cell: (usize, usize, usize)) -> WindSample<T> {
        let (_, ny, nz) = self.inner.shape;
        state[(cell.0 * ny + cell.1) * nz + cell.2]
    }

    fn component_bounds(&self, clamp_sigmas: T, z_max: T) -> [T; 3] {
        self.inner.component_bounds(clamp_sigmas, z_max)
    }
}
