//! Release kinetics, gas diffusion-coefficient estimation, and carrier
//! inventory arithmetic.
//!
//! Release from a matrix microsphere follows a semi-empirical power law for
//! the cumulative released fraction, `F(t) = k t^n`, clamped at 1 once the
//! cargo is exhausted. Solvers consume the *integrated* increment over a
//! timestep rather than the pointwise rate `dF/dt`, which diverges as
//! `t -> 0` for `n < 1`; increments are finite and telescope exactly to the
//! cumulative curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise;
use crate::numerics::compensated_sum;
use crate::scalar::Scalar;

mod fit;
pub use fit::{fit_korsmeyer_peppas, FitReport};

/// Avogadro's number used for molecule counts (rounded form; inventory
/// figures are quoted to four significant digits).
pub const AVOGADRO: f64 = 6.022e23;

const SECONDS_PER_HOUR: f64 = 3600.0;

/// Power-law release model plus the per-sphere cargo it drives.
///
/// `rate_constant` is expressed in `hours^-exponent` as published for this
/// model family; conversions from the solver's internal seconds happen at
/// this API boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReleaseModel<T> {
    rate_constant: T,
    exponent: T,
    molecules_per_sphere: T,
}

impl<T: Scalar> ReleaseModel<T> {
    pub fn new(rate_constant: T, exponent: T, molecules_per_sphere: T) -> Result<Self> {
        if !(rate_constant > T::zero()) || !rate_constant.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "release rate constant must be > 0, got {rate_constant}"
            )));
        }
        if !(exponent > T::zero()) || !exponent.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "release exponent must be > 0, got {exponent}"
            )));
        }
        if !(molecules_per_sphere >= T::zero()) || !molecules_per_sphere.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "molecules per sphere must be >= 0, got {molecules_per_sphere}"
            )));
        }
        Ok(Self {
            rate_constant,
            exponent,
            molecules_per_sphere,
        })
    }

    pub fn rate_constant(&self) -> T {
        self.rate_constant
    }

    pub fn exponent(&self) -> T {
        self.exponent
    }

    pub fn molecules_per_sphere(&self) -> T {
        self.molecules_per_sphere
    }

    /// Cumulative released fraction at `t` hours: `min(k t^n, 1)`.
    ///
    /// Returns 0 at `t = 0`. Panics if `t < 0`.
    pub fn cumulative_fraction(&self, t_hours: T) -> T {
        assert!(
            t_hours >= T::zero(),
            "cumulative_fraction requires t >= 0, got {t_hours}"
        );
        if t_hours == T::zero() {
            return T::zero();
        }
        (self.rate_constant * t_hours.powf(self.exponent)).min(T::one())
    }

    /// Time at which the unclamped power law reaches 1 and release
    /// saturates: `(1/k)^(1/n)` hours.
    pub fn saturation_time_hours(&self) -> T {
        self.rate_constant.recip().powf(self.exponent.recip())
    }

    /// Molecules released per microsphere over `[t_start, t_end]` hours.
    ///
    /// Consecutive intervals telescope exactly to
    /// `molecules_per_sphere * cumulative_fraction(t)`.
    pub fn incremental_release(&self, t_start_hours: T, t_end_hours: T) -> Result<T> {
        if !(t_start_hours >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "release interval start must be >= 0, got {t_start_hours}"
            )));
        }
        if !(t_end_hours > t_start_hours) {
            return Err(Error::InvalidParameter(format!(
                "release interval must satisfy t_end > t_start, got [{t_start_hours}, {t_end_hours}]"
            )));
        }
        Ok(self.molecules_per_sphere
            * (self.cumulative_fraction(t_end_hours) - self.cumulative_fraction(t_start_hours)))
    }

    /// [`Self::incremental_release`] with endpoints in seconds.
    pub fn incremental_release_seconds(&self, t_start_s: T, t_end_s: T) -> Result<T> {
        let per_hour = T::of(SECONDS_PER_HOUR);
        self.incremental_release(t_start_s / per_hour, t_end_s / per_hour)
    }
}

/// One measured release point: `(time in hours, released fraction)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReleaseSample<T> {
    pub time_hours: T,
    pub fraction: T,
}

/// A measured release curve; times strictly increasing, fractions in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ReleaseDataset<T> {
    samples: Vec<ReleaseSample<T>>,
}

impl<T: Scalar> ReleaseDataset<T> {
    pub fn new(samples: Vec<ReleaseSample<T>>) -> Result<Self> {
        for (idx, s) in samples.iter().enumerate() {
            if !(s.time_hours >= T::zero()) || !s.time_hours.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "sample {idx}: time must be finite and >= 0, got {}",
                    s.time_hours
                )));
            }
            if !(s.fraction >= T::zero() && s.fraction <= T::one()) {
                return Err(Error::InvalidParameter(format!(
                    "sample {idx}: fraction must lie in [0, 1], got {}",
                    s.fraction
                )));
            }
            if idx > 0 && !(s.time_hours > samples[idx - 1].time_hours) {
                return Err(Error::InvalidParameter(format!(
                    "sample times must be strictly increasing (sample {idx})"
                )));
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[ReleaseSample<T>] {
        &self.samples
    }

    /// Reads a two-column CSV with header `time_hours,fraction`.
    pub fn from_csv_path(path: &std::path::Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "time_hours" || &headers[1] != "fraction" {
            return Err(Error::InvalidParameter(format!(
                "release dataset must have header `time_hours,fraction`, got {headers:?}"
            )));
        }
        let mut samples = Vec::new();
        for record in reader.records() {
            let record = record?;
            let parse =
                |field: &str| -> Result<T> {
                    field.trim().parse::<f64>().map(T::of).map_err(|e| {
                        Error::InvalidParameter(format!("bad CSV number {field:?}: {e}"))
                    })
                };
            samples.push(ReleaseSample {
                time_hours: parse(&record[0])?,
                fraction: parse(&record[1])?,
            });
        }
        Self::new(samples)
    }

    pub fn write_csv_path(&self, path: &std::path::Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(["time_hours", "fraction"])?;
        for s in &self.samples {
            writer.write_record([format!("{}", s.time_hours), format!("{}", s.fraction)])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Synthetic dataset sampled from a model, optionally with additive Gaussian
/// noise on the fractions (seeded, reproducible). Noisy fractions are clamped
/// to [0, 1].
pub fn synthetic_release_dataset<T: Scalar>(
    model: &ReleaseModel<T>,
    times_hours: &[T],
    noise_sigma: T,
    seed: u64,
) -> Result<ReleaseDataset<T>> {
    let samples = times_hours
        .iter()
        .enumerate()
        .map(|(idx, &t)| {
            let mut fraction = model.cumulative_fraction(t);
            if noise_sigma > T::zero() {
                let eta = T::of(noise::keyed_standard_normal(seed, idx as u64, 0, 0));
                fraction = (fraction + noise_sigma * eta).max(T::zero()).min(T::one());
            }
            ReleaseSample {
                time_hours: t,
                fraction,
            }
        })
        .collect();
    ReleaseDataset::new(samples)
}

/// Geometry and composition of one carrier microsphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicrosphereSpec<T> {
    /// Median particle diameter by volume, m.
    pub diameter: T,
    /// Matrix material density, kg/m^3.
    pub matrix_density: T,
    /// Encapsulated cargo density, kg/m^3.
    pub cargo_density: T,
    /// Cargo mass fraction of the sphere, in (0, 1).
    pub cargo_mass_fraction: T,
    /// Cargo molar mass, g/mol.
    pub cargo_molar_mass: T,
}

impl<T: Scalar> MicrosphereSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let positive: [(&str, T); 4] = [
            ("diameter", self.diameter),
            ("matrix_density", self.matrix_density),
            ("cargo_density", self.cargo_density),
            ("cargo_molar_mass", self.cargo_molar_mass),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "microsphere {name} must be > 0, got {v}"
                )));
            }
        }
        if !(self.cargo_mass_fraction > T::zero() && self.cargo_mass_fraction < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "cargo_mass_fraction must lie in (0, 1), got {}",
                self.cargo_mass_fraction
            )));
        }
        Ok(())
    }
}

/// Per-sphere and whole-batch inventory figures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicrosphereInventory<T> {
    /// Volume of one sphere, m^3.
    pub sphere_volume: T,
    /// Mass-fraction-weighted density of cargo and matrix, kg/m^3.
    pub effective_density: T,
    /// Mass of one sphere, kg.
    pub sphere_mass: T,
    /// Spheres in the batch (fractional count; round for integer use).
    pub sphere_count: T,
    /// Cargo molecules in the batch.
    pub cargo_molecule_count: T,
    /// Mean cargo molecules per sphere.
    pub molecules_per_sphere: T,
}

/// Counts spheres and cargo molecules in a batch of given total masses.
pub fn microsphere_inventory<T: Scalar>(
    spec: &MicrosphereSpec<T>,
    total_microsphere_mass_kg: T,
    total_cargo_mass_kg: T,
) -> Result<MicrosphereInventory<T>> {
    spec.validate()?;
    if !(total_microsphere_mass_kg > T::zero()) || !(total_cargo_mass_kg > T::zero()) {
        return Err(Error::InvalidParameter(
            "batch masses must be > 0".to_string(),
        ));
    }
    let radius = spec.diameter / T::of(2.0);
    let sphere_volume = T::of(4.0 / 3.0) * T::of(std::f64::consts::PI) * radius.powi(3);
    let effective_density = spec.cargo_mass_fraction * spec.cargo_density
        + (T::one() - spec.cargo_mass_fraction) * spec.matrix_density;
    let sphere_mass = effective_density * sphere_volume;
    let sphere_count = total_microsphere_mass_kg / sphere_mass;
    // molar mass is in g/mol; convert the batch cargo mass to grams
    let moles = total_cargo_mass_kg * T::of(1000.0) / spec.cargo_molar_mass;
    let cargo_molecule_count = moles * T::of(AVOGADRO);
    Ok(MicrosphereInventory {
        sphere_volume,
        effective_density,
        sphere_mass,
        sphere_count,
        cargo_molecule_count,
        molecules_per_sphere: cargo_molecule_count / sphere_count,
    })
}

/// Binary gas pair for diffusion-coefficient estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasPairSpec<T> {
    /// Molar masses, g/mol.
    pub molar_mass_a: T,
    pub molar_mass_b: T,
    /// Collision diameters, angstrom.
    pub collision_diameter_a: T,
    pub collision_diameter_b: T,
    /// Temperature, K.
    pub temperature: T,
    /// Pressure, atm.
    pub pressure: T,
    /// Collision integral (dimensionless; ~1.0 for a hard-sphere estimate).
    pub collision_integral: T,
}

impl<T: Scalar> GasPairSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let fields: [(&str, T); 7] = [
            ("molar_mass_a", self.molar_mass_a),
            ("molar_mass_b", self.molar_mass_b),
            ("collision_diameter_a", self.collision_diameter_a),
            ("collision_diameter_b", self.collision_diameter_b),
            ("temperature", self.temperature),
            ("pressure", self.pressure),
            ("collision_integral", self.collision_integral),
        ];
        for (name, v) in fields {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "gas pair {name} must be > 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Kinetic-theory estimate of the binary diffusion coefficient, m^2/s.
///
/// Evaluates `D = 0.0018583 T^{3/2} sqrt(1/M_A + 1/M_B) / (P sigma_AB^2 O)`
/// with the average collision diameter `sigma_AB = (sigma_A + sigma_B) / 2`.
/// The correlation natively yields cm^2/s (T in K, P in atm, sigma in
/// angstrom); the result is converted to m^2/s (1 cm^2/s = 1e-4 m^2/s).
pub fn chapman_enskog_diffusion<T: Scalar>(pair: &GasPairSpec<T>) -> Result<T> {
    pair.validate()?;
    let sigma_ab = (pair.collision_diameter_a + pair.collision_diameter_b) / T::of(2.0);
    let d_cm2_s = T::of(0.0018583)
        * pair.temperature.powf(T::of(1.5))
        * (pair.molar_mass_a.recip() + pair.molar_mass_b.recip()).sqrt()
        / (pair.pressure * sigma_ab * sigma_ab * pair.collision_integral);
    Ok(d_cm2_s * T::of(1e-4))
}

/// Molar volume in cm^3/mol from molar mass (g/mol) and density (g/cm^3).
pub fn molar_volume_cm3_per_mol<T: Scalar>(molar_mass_g_mol: T, density_g_cm3: T) -> T {
    molar_mass_g_mol / density_g_cm3
}

/// Collision-diameter estimate in angstrom: the cube root of the molar
/// volume in cm^3/mol, read as a length in angstrom.
pub fn collision_diameter_from_molar_volume<T: Scalar>(molar_mass_g_mol: T, density_g_cm3: T) -> T {
    molar_volume_cm3_per_mol(molar_mass_g_mol, density_g_cm3).powf(T::of(1.0 / 3.0))
}

/// Sums incremental releases over a partition; with exact arithmetic this
/// telescopes to the cumulative curve. Shared by tests.
#[doc(hidden)]
pub fn telescoped_release<T: Scalar>(model: &ReleaseModel<T>, partition: &[T]) -> Result<T> {
    let increments: Result<Vec<T>> = partition
        .windows(2)
        .map(|w| model.incremental_release(w[0], w[1]))
        .collect();
    Ok(compensated_sum(increments?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn fitted_model() -> ReleaseModel<f64> {
        ReleaseModel::new(0.4429, 0.1789, 1.121e15).unwrap()
    }

    #[test]
    fn cumulative_fraction_reference_points() {
        let m = fitted_model();
        assert_eq!(m.cumulative_fraction(0.0), 0.0);
        // t = 1 h: fraction equals the rate constant exactly
        assert_eq!(m.cumulative_fraction(1.0), 0.4429);
        assert_relative_eq!(
            m.cumulative_fraction(24.0),
            0.7820337054214328,
            max_relative = 1e-12
        );
        // saturation clamp
        assert_eq!(m.cumulative_fraction(200.0), 1.0);
        assert_relative_eq!(
            m.saturation_time_hours(),
            94.85285724442808,
            max_relative = 1e-12
        );
    }

    #[test]
    fn incremental_release_reference_points() {
        let m = fitted_model();
        let first_hour = m.incremental_release(0.0, 1.0).unwrap();
        assert_relative_eq!(first_hour, 0.4429 * 1.121e15, max_relative = 1e-12);
        // both endpoints past saturation
        assert_eq!(m.incremental_release(100.0, 200.0).unwrap(), 0.0);
        // degenerate interval rejected
        assert!(m.incremental_release(5.0, 5.0).is_err());
        assert!(m.incremental_release(5.0, 4.0).is_err());
        assert!(m.incremental_release(-1.0, 4.0).is_err());
    }

    #[test]
    fn seconds_boundary_conversion() {
        let m = fitted_model();
        let via_seconds = m.incremental_release_seconds(0.0, 3600.0).unwrap();
        let via_hours = m.incremental_release(0.0, 1.0).unwrap();
        assert_eq!(via_seconds, via_hours);
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(ReleaseModel::new(0.0, 0.2, 1.0).is_err());
        assert!(ReleaseModel::new(-0.4, 0.2, 1.0).is_err());
        assert!(ReleaseModel::new(0.4, 0.0, 1.0).is_err());
        assert!(ReleaseModel::new(0.4, 0.2, -1.0).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let m = ReleaseModel::<f32>::new(0.4429, 0.1789, 1.121e15).unwrap();
        assert!((m.cumulative_fraction(24.0) - 0.782).abs() < 1e-3);
    }

    #[test]
    fn dataset_validation() {
        let ok = ReleaseDataset::new(vec![
            ReleaseSample {
                time_hours: 0.0,
                fraction: 0.0,
            },
            ReleaseSample {
                time_hours: 1.0,
                fraction: 0.4,
            },
        ]);
        assert!(ok.is_ok());
        let non_monotone = ReleaseDataset::new(vec![
            ReleaseSample {
                time_hours: 1.0,
                fraction: 0.4,
            },
            ReleaseSample {
                time_hours: 1.0,
                fraction: 0.5,
            },
        ]);
        assert!(non_monotone.is_err());
        let out_of_range = ReleaseDataset::new(vec![ReleaseSample {
            time_hours: 1.0,
            fraction: 1.2,
        }]);
        assert!(out_of_range.is_err());
    }

    #[test]
    fn inventory_reference_batch() {
        let spec = MicrosphereSpec {
            diameter: 180e-6,
            matrix_density: 900.0,
            cargo_density: 1174.0,
            cargo_mass_fraction: 0.1,
            cargo_molar_mass: 152.149,
        };
        let inv = microsphere_inventory(&spec, 2.0, 0.2).unwrap();
        assert_relative_eq!(
            inv.sphere_volume,
            3.0536280592892793e-12,
            max_relative = 1e-12
        );
        assert_relative_eq!(inv.effective_density, 927.4, max_relative = 1e-12);
        assert_relative_eq!(inv.sphere_mass, 2.8319346621848775e-9, max_relative = 1e-12);
        assert_relative_eq!(inv.sphere_count, 7.062309829058598e8, max_relative = 1e-12);
        assert_relative_eq!(
            inv.cargo_molecule_count,
            7.915924521357354e23,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            inv.molecules_per_sphere,
            1.1208690517635561e15,
            max_relative = 1e-12
        );
        // count * mass returns the batch mass
        assert_relative_eq!(
            inv.sphere_count * inv.sphere_mass,
            2.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn inventory_rejects_full_loading() {
        let spec = MicrosphereSpec {
            diameter: 180e-6,
            matrix_density: 900.0,
            cargo_density: 1174.0,
            cargo_mass_fraction: 1.0,
            cargo_molar_mass: 152.149,
        };
        assert!(microsphere_inventory(&spec, 2.0, 0.2).is_err());
    }

    #[test]
    fn inventory_scales_linearly_with_batch_mass() {
        let spec = MicrosphereSpec {
            diameter: 180e-6,
            matrix_density: 900.0,
            cargo_density: 1174.0,
            cargo_mass_fraction: 0.1,
            cargo_molar_mass: 152.149,
        };
        let a = microsphere_inventory(&spec, 2.0, 0.2).unwrap();
        let b = microsphere_inventory(&spec, 4.0, 0.4).unwrap();
        assert_relative_eq!(b.sphere_count, 2.0 * a.sphere_count, max_relative = 1e-14);
        assert_relative_eq!(
            b.cargo_molecule_count,
            2.0 * a.cargo_molecule_count,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            b.molecules_per_sphere,
            a.molecules_per_sphere,
            max_relative = 1e-14
        );
    }

    #[test]
    fn diffusion_coefficient_reference_pair() {
        let pair = GasPairSpec::<f64> {
            molar_mass_a: 152.149,
            molar_mass_b: 28.97,
            collision_diameter_a: 5.06,
            collision_diameter_b: 3.7,
            temperature: 298.0,
            pressure: 1.0,
            collision_integral: 1.0,
        };
        let d = chapman_enskog_diffusion(&pair).unwrap();
        assert_relative_eq!(d, 1.0101019490062212e-5, max_relative = 1e-12);
        // within 3% of the rounded 1.0e-5 reference
        assert!((d - 1.0e-5).abs() / 1.0e-5 < 0.03);

        // doubling pressure halves D
        let high_p = GasPairSpec {
            pressure: 2.0,
            ..pair
        };
        assert_relative_eq!(
            chapman_enskog_diffusion(&high_p).unwrap(),
            d / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn collision_diameter_estimate() {
        let vm = molar_volume_cm3_per_mol(152.149_f64, 1.174);
        assert_relative_eq!(vm, 129.59880749574106, max_relative = 1e-12);
        let sigma = collision_diameter_from_molar_volume(152.149_f64, 1.174);
        assert!((sigma - 5.06).abs() / 5.06 < 2e-3, "sigma = {sigma}");
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("release.csv");
        let model = fitted_model();
        let times: Vec<f64> = vec![0.5, 1.0, 2.0, 4.0, 8.0];
        let data = synthetic_release_dataset(&model, &times, 0.0, 1).unwrap();
        data.write_csv_path(&path).unwrap();
        let back = ReleaseDataset::<f64>::from_csv_path(&path).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn csv_rejects_wrong_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "hours,frac\n1.0,0.5\n").unwrap();
        assert!(ReleaseDataset::<f64>::from_csv_path(&path).is_err());
    }

    proptest! {
        #[test]
        fn fraction_monotone_and_bounded(
            k in 1e-3f64..5.0,
            n in 1e-2f64..3.0,
            t0 in 0.0f64..500.0,
            dt in 0.0f64..500.0,
        ) {
            let m = ReleaseModel::new(k, n, 1.0).unwrap();
            let f0 = m.cumulative_fraction(t0);
            let f1 = m.cumulative_fraction(t0 + dt);
            prop_assert!((0.0..=1.0).contains(&f0));
            prop_assert!((0.0..=1.0).contains(&f1));
            prop_assert!(f1 >= f0);
        }

        #[test]
        fn increments_telescope(
            k in 1e-2f64..2.0,
            n in 5e-2f64..2.0,
            cuts in proptest::collection::vec(1e-3f64..300.0, 1..20),
        ) {
            let m = ReleaseModel::new(k, n, 1.121e15).unwrap();
            let mut partition: Vec<f64> = cuts;
            partition.push(0.0);
            partition.sort_by(|a, b| a.partial_cmp(b).unwrap());
            partition.dedup();
            let total = telescoped_release(&m, &partition).unwrap();
            let direct = m.molecules_per_sphere()
                * m.cumulative_fraction(*partition.last().unwrap());
            let scale = direct.abs().max(m.molecules_per_sphere() * 1e-12);
            prop_assert!((total - direct).abs() <= 1e-12 * scale);
        }

        #[test]
        fn diffusion_temperature_homogeneity(scale in 0.2f64..5.0) {
            let base = GasPairSpec {
                molar_mass_a: 152.149,
                molar_mass_b: 28.97,
                collision_diameter_a: 5.06,
                collision_diameter_b: 3.7,
                temperature: 298.0,
                pressure: 1.0,
                collision_integral: 1.0,
            };
            let scaled = GasPairSpec { temperature: base.temperature * scale, ..base };
            let d0 = chapman_enskog_diffusion(&base).unwrap();
            let d1 = chapman_enskog_diffusion(&scaled).unwrap();
            prop_assert!((d1 / d0 - scale.powf(1.5)).abs() < 1e-9 * scale.powf(1.5));
        }
    }
}
