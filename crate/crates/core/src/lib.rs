//! Wind-driven dispersion of plant-signalling volatiles released from
//! controlled-release microsphere carriers in an open field.
//!
//! The crate models the full pipeline:
//!
//! * [`kinetics`] — power-law release kinetics of the encapsulated compound,
//!   curve fitting, and gas-phase diffusion-coefficient estimation,
//! * [`wind`] — a seeded, reproducible stochastic wind field with diurnal
//!   speed and direction cycles and a logarithmic vertical profile,
//! * [`grid`] / [`solver`] — explicit finite-difference transport
//!   (central-difference diffusion, sign-adaptive upwind advection, forward
//!   Euler) on a structured 3D grid with an absorbing ground plane and
//!   first-order outflow boundaries,
//! * [`scenarios`] — deployment presets for the source arrangements,
//! * [`metrics`] — streaming coverage metrics over concentration thresholds,
//! * [`config`] / [`output`] — TOML configuration, validation, and
//!   reproducible artifact emission (CSV, binary snapshots, run manifests).
//!
//! All field math is generic over the floating-point scalar via [`Scalar`]
//! (`f32` or `f64`); concrete `f64` aliases are exported at the crate root.

// Validation deliberately writes `!(v > 0)` rather than `v <= 0`: the
// negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod grid;
pub mod kinetics;
pub mod metrics;
pub mod noise;
pub mod numerics;
pub mod output;
pub mod scalar;
pub mod scenarios;
pub mod solver;
pub mod wind;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision aliases for the common instantiation.
pub type Grid64 = grid::GridSpec<f64>;
pub type Field64 = grid::ConcentrationField<f64>;
pub type ReleaseModel64 = kinetics::ReleaseModel<f64>;
pub type WindParams64 = wind::WindModelParams<f64>;
pub type Deployment64 = scenarios::Deployment<f64>;
pub type CeiAccumulator64 = metrics::CeiAccumulator<f64>;
pub type Simulation64 = solver::Simulation<f64, wind::StochasticWind<f64>>;
