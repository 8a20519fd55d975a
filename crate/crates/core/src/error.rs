//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error("point ({x}, {y}, {z}) lies outside the grid domain")]
    OutOfDomain { x: f64, y: f64, z: f64 },

    #[error("slab [{lo}, {hi}] m does not intersect any grid level")]
    EmptySlab { lo: f64, hi: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("deployment: {0}")]
    Deployment(String),

    #[error("metrics: {0}")]
    Metrics(String),

    #[error(
        "advective CFL violated at step {step}: dt = {dt} s exceeds limit {limit:.6} s \
         (sampled max |v| = ({vx:.6}, {vy:.6}, {vz:.6}) m/s)"
    )]
    CflViolation {
        step: u64,
        dt: f64,
        limit: f64,
        vx: f64,
        vy: f64,
        vz: f64,
    },

    #[error("non-finite concentration at step {step}, cell ({i}, {j}, {k})")]
    NonFinite {
        step: u64,
        i: usize,
        j: usize,
        k: usize,
    },

    #[error(
        "concentration {value:e} below the round-off floor {floor:e} at step {step}; \
         the scheme is positivity-preserving under the CFL limits, so this indicates \
         an unstable configuration"
    )]
    NegativeConcentration { step: u64, value: f64, floor: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("config parse: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
