//! Streaming coverage metrics.
//!
//! The coverage index of a run is the time-averaged fraction of a reference
//! volume in which the concentration meets or exceeds a threshold:
//! `CEI(t, C_th) = (1/t) \int_0^t (1/V) \int_V 1(C >= C_th) dV dtau`,
//! discretized as a uniform-weight mean of the per-step covered fraction
//! (the timestep is constant, so no quadrature subtlety arises). The
//! indicator uses `>=`: cells sitting exactly at the threshold count as
//! covered. Values always land in [0, 1] and fall monotonically as the
//! threshold rises.
//!
//! Accumulation is streaming: storing every field of a long run just to
//! integrate an indicator would cost gigabytes. Thresholds are evaluated in
//! one pass per step by bucketing each cell against the sorted threshold
//! list.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ConcentrationField, GridSpec};
use crate::numerics::CompensatedSum;
use crate::scalar::Scalar;

/// The region coverage is assessed over.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum SubVolume {
    /// Every cell, including the always-zero ground plane.
    #[default]
    WholeDomain,
    /// Cells whose coordinates fall inside the closed box.
    Box {
        x: [f64; 2],
        y: [f64; 2],
        z: [f64; 2],
    },
}

/// Streaming accumulator of per-step covered fractions.
#[derive(Debug, Clone)]
pub struct CeiAccumulator<T> {
    grid: GridSpec<T>,
    thresholds: Vec<T>,
    /// Inclusive index ranges of the subvolume.
    ranges: [(usize, usize); 3],
    cell_count: usize,
    sums: Vec<CompensatedSum<T>>,
    steps_seen: u64,
    /// Per-step `(time, fraction per threshold)` when history is kept.
    history: Option<Vec<(T, Vec<T>)>>,
}

impl<T: Scalar> CeiAccumulator<T> {
    /// `thresholds` must be strictly increasing and positive.
    pub fn new(
        grid: GridSpec<T>,
        thresholds: Vec<T>,
        subvolume: SubVolume,
        record_history: bool,
    ) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::Metrics(
                "at least one threshold required".to_string(),
            ));
        }
        for (idx, &th) in thresholds.iter().enumerate() {
            if !(th > T::zero()) || !th.is_finite() {
                return Err(Error::Metrics(format!(
                    "thresholds must be positive and finite, got {th} at index {idx}"
                )));
            }
            if idx > 0 && !(th > thresholds[idx - 1]) {
                return Err(Error::Metrics(format!(
                    "thresholds must be strictly increasing (index {idx})"
                )));
            }
        }
        let ranges = resolve_subvolume(&grid, subvolume)?;
        let cell_count = (ranges[0].1 - ranges[0].0 + 1)
            * (ranges[1].1 - ranges[1].0 + 1)
            * (ranges[2].1 - ranges[2].0 + 1);
        Ok(Self {
            grid,
            sums: vec![CompensatedSum::new(); thresholds.len()],
            thresholds,
            ranges,
            cell_count,
            steps_seen: 0,
            history: record_history.then(Vec::new),
        })
    }

    pub fn thresholds(&self) -> &[T] {
        &self.thresholds
    }

    pub fn steps_seen(&self) -> u64 {
        self.steps_seen
    }

    pub fn subvolume_cell_count(&self) -> usize {
        self.cell_count
    }

    /// Folds one field into the running sums.
    pub fn accumulate(&mut self, field: &ConcentrationField<T>) -> Result<()> {
        if field.grid() != &self.grid {
            return Err(Error::GridMismatch(
                "field grid differs from the accumulator's grid".to_string(),
            ));
        }
        let m = self.thresholds.len();
        // bucket[b] counts cells whose value reaches thresholds[..b]
        let mut buckets = vec![0u64; m + 1];
        let values = field.values();
        let (x, y, z) = (self.ranges[0], self.ranges[1], self.ranges[2]);
        for i in x.0..=x.1 {
            for j in y.0..=y.1 {
                let row = self.grid.linear_index(i, j, 0);
                for &v in &values[row + z.0..=row + z.1] {
                    let reached = self.thresholds.partition_point(|&th| th <= v);
                    buckets[reached] += 1;
                }
            }
        }
        let count = T::of(self.cell_count as f64);
        let mut covered = 0u64;
        let mut fractions = vec![T::zero(); m];
        for level in (0..m).rev() {
            covered += buckets[level + 1];
            fractions[level] = T::of(covered as f64) / count;
        }
        for (sum, &fraction) in self.sums.iter_mut().zip(&fractions) {
            sum.add(fraction);
        }
        self.steps_seen += 1;
        if let Some(history) = &mut self.history {
            history.push((field.time(), fractions));
        }
        Ok(())
    }

    /// Time-averaged coverage per threshold.
    pub fn finalize(&self) -> Result<CeiResult<T>> {
        if self.steps_seen == 0 {
            return Err(Error::Metrics(
                "no steps accumulated; nothing to finalize".to_string(),
            ));
        }
        let steps = T::of(self.steps_seen as f64);
        Ok(CeiResult {
            thresholds: self.thresholds.clone(),
            cei: self.sums.iter().map(|s| s.value() / steps).collect(),
            steps: self.steps_seen,
        })
    }

    /// Running average over time for one threshold (exact match against the
    /// configured list). Requires history recording.
    pub fn timeseries(&self, threshold: T) -> Result<Vec<(T, T)>> {
        let idx = self
            .thresholds
            .iter()
            .position(|&th| th == threshold)
            .ok_or_else(|| {
                Error::Metrics(format!(
                    "threshold {threshold:e} is not among the accumulated thresholds"
                ))
            })?;
        let history = self.history.as_ref().ok_or_else(|| {
            Error::Metrics("accumulator was built without history recording".to_string())
        })?;
        let mut running = CompensatedSum::new();
        Ok(history
            .iter()
            .enumerate()
            .map(|(step, (time, fractions))| {
                running.add(fractions[idx]);
                (*time, running.value() / T::of((step + 1) as f64))
            })
            .collect())
    }
}

/// Final coverage per threshold; values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct CeiResult<T> {
    pub thresholds: Vec<T>,
    pub cei: Vec<T>,
    pub steps: u64,
}

impl<T: Scalar> CeiResult<T> {
    /// Coverage at one configured threshold (exact match).
    pub fn at_threshold(&self, threshold: T) -> Option<T> {
        self.thresholds
            .iter()
            .position(|&th| th == threshold)
            .map(|idx| self.cei[idx])
    }
}

fn resolve_subvolume<T: Scalar>(
    grid: &GridSpec<T>,
    subvolume: SubVolume,
) -> Result<[(usize, usize); 3]> {
    match subvolume {
        SubVolume::WholeDomain => Ok([(0, grid.nx() - 1), (0, grid.ny() - 1), (0, grid.nz() - 1)]),
        SubVolume::Box { x, y, z } => {
            let axis = |lo: f64,
                        hi: f64,
                        min: T,
                        step: T,
                        n: usize,
                        name: &str|
             -> Result<(usize, usize)> {
                if !(hi >= lo) {
                    return Err(Error::Metrics(format!(
                        "subvolume {name} range is inverted: [{lo}, {hi}]"
                    )));
                }
                let tol = 1e-9 * step.widen();
                let first = ((lo - min.widen()) / step.widen() - tol).ceil().max(0.0) as usize;
                let last = ((hi - min.widen()) / step.widen() + tol).floor() as usize;
                if first >= n || last < first {
                    return Err(Error::Metrics(format!(
                        "subvolume {name} range [{lo}, {hi}] contains no grid points"
                    )));
                }
                Ok((first, last.min(n - 1)))
            };
            Ok([
                axis(x[0], x[1], grid.x_min(), grid.dx(), grid.nx(), "x")?,
                axis(y[0], y[1], grid.y_min(), grid.dy(), grid.ny(), "y")?,
                axis(z[0], z[1], grid.z_min(), grid.dz(), grid.nz(), "z")?,
            ])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn small_grid() -> GridSpec<f64> {
        GridSpec::from_bounds([0.0, 0.0, 0.0], [8.0, 8.0, 8.0], [1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn trivial_fields() {
        let grid = small_grid();
        let mut acc =
            CeiAccumulator::new(grid, vec![1.0, 4.0], SubVolume::WholeDomain, false).unwrap();

        // all-zero field adds nothing
        let zero = ConcentrationField::zeros(grid);
        acc.accumulate(&zero).unwrap();
        let r = acc.finalize().unwrap();
        assert_eq!(r.cei, vec![0.0, 0.0]);

        // uniform field: covered below, uncovered above
        let mut acc =
            CeiAccumulator::new(grid, vec![1.0, 4.0], SubVolume::WholeDomain, false).unwrap();
        let mut uniform = ConcentrationField::zeros(grid);
        for v in uniform.values_mut() {
            *v = 2.0;
        }
        acc.accumulate(&uniform).unwrap();
        let r = acc.finalize().unwrap();
        assert_eq!(r.cei, vec![1.0, 0.0]);
        assert_eq!(r.at_threshold(1.0), Some(1.0));
        assert_eq!(r.at_threshold(7.0), None);
    }

    #[test]
    fn threshold_boundary_counts_as_covered() {
        let grid = small_grid();
        let mut acc = CeiAccumulator::new(grid, vec![2.0], SubVolume::WholeDomain, false).unwrap();
        let mut field = ConcentrationField::zeros(grid);
        for v in field.values_mut() {
            *v = 2.0;
        }
        acc.accumulate(&field).unwrap();
        assert_eq!(acc.finalize().unwrap().cei, vec![1.0]);
    }

    #[test]
    fn half_covered_field() {
        let grid = small_grid();
        let mut acc = CeiAccumulator::new(grid, vec![1.0], SubVolume::WholeDomain, false).unwrap();
        let mut field = ConcentrationField::zeros(grid);
        let half = grid.cell_count() / 2;
        for (idx, v) in field.values_mut().iter_mut().enumerate() {
            *v = if idx < half { 10.0 } else { 0.0 };
        }
        acc.accumulate(&field).unwrap();
        let r = acc.finalize().unwrap();
        // 9^3 is odd, half rounds down
        assert_relative_eq!(r.cei[0], half as f64 / 729.0, max_relative = 1e-12);
    }

    #[test]
    fn constant_coverage_and_step_average() {
        let grid = small_grid();
        let mut acc = CeiAccumulator::new(grid, vec![1.0], SubVolume::WholeDomain, true).unwrap();
        let mut on = ConcentrationField::zeros(grid);
        for v in on.values_mut() {
            *v = 5.0;
        }
        let off = ConcentrationField::zeros(grid);
        // covered for the first half of the steps, uncovered after
        for step in 0..10 {
            let field = if step < 5 { &on } else { &off };
            acc.accumulate(field).unwrap();
        }
        let r = acc.finalize().unwrap();
        assert_relative_eq!(r.cei[0], 0.5, max_relative = 1e-12);

        let series = acc.timeseries(1.0).unwrap();
        assert_eq!(series.len(), 10);
        assert_relative_eq!(series[4].1, 1.0, max_relative = 1e-12);
        assert_relative_eq!(series[9].1, 0.5, max_relative = 1e-12);
        assert!(acc.timeseries(3.0).is_err());
    }

    #[test]
    fn finalize_requires_steps() {
        let grid = small_grid();
        let acc = CeiAccumulator::new(grid, vec![1.0], SubVolume::WholeDomain, false).unwrap();
        assert!(acc.finalize().is_err());
    }

    #[test]
    fn grid_mismatch_rejected() {
        let grid = small_grid();
        let other =
            GridSpec::from_bounds([0.0, 0.0, 0.0], [4.0, 4.0, 4.0], [1.0, 1.0, 1.0]).unwrap();
        let mut acc = CeiAccumulator::new(grid, vec![1.0], SubVolume::WholeDomain, false).unwrap();
        let field = ConcentrationField::zeros(other);
        assert!(acc.accumulate(&field).is_err());
    }

    #[test]
    fn bad_thresholds_rejected() {
        let grid = small_grid();
        assert!(CeiAccumulator::<f64>::new(grid, vec![], SubVolume::WholeDomain, false).is_err());
        assert!(CeiAccumulator::new(grid, vec![1.0, 1.0], SubVolume::WholeDomain, false).is_err());
        assert!(CeiAccumulator::new(grid, vec![0.0, 1.0], SubVolume::WholeDomain, false).is_err());
    }

    #[test]
    fn subvolume_partition_recomposes_exactly() {
        let grid = small_grid();
        let thresholds = vec![0.5, 2.0, 8.0];
        let lower = SubVolume::Box {
            x: [0.0, 8.0],
            y: [0.0, 8.0],
            z: [0.0, 3.0],
        };
        let upper = SubVolume::Box {
            x: [0.0, 8.0],
            y: [0.0, 8.0],
            z: [4.0, 8.0],
        };
        let mut whole =
            CeiAccumulator::new(grid, thresholds.clone(), SubVolume::WholeDomain, false).unwrap();
        let mut lo = CeiAccumulator::new(grid, thresholds.clone(), lower, false).unwrap();
        let mut hi = CeiAccumulator::new(grid, thresholds.clone(), upper, false).unwrap();
        assert_eq!(
            lo.subvolume_cell_count() + hi.subvolume_cell_count(),
            whole.subvolume_cell_count()
        );

        let mut field = ConcentrationField::zeros(grid);
        for (idx, v) in field.values_mut().iter_mut().enumerate() {
            *v = ((idx * 37) % 11) as f64;
        }
        whole.accumulate(&field).unwrap();
        lo.accumulate(&field).unwrap();
        hi.accumulate(&field).unwrap();
        let (w, l, h) = (
            whole.finalize().unwrap(),
            lo.finalize().unwrap(),
            hi.finalize().unwrap(),
        );
        for t in 0..thresholds.len() {
            let weighted = (l.cei[t] * lo.subvolume_cell_count() as f64
                + h.cei[t] * hi.subvolume_cell_count() as f64)
                / whole.subvolume_cell_count() as f64;
            assert_relative_eq!(w.cei[t], weighted, max_relative = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn cei_bounded_and_monotone_in_threshold(
            values in proptest::collection::vec(0.0f64..1e6, 729),
            steps in 1usize..4,
        ) {
            let grid = small_grid();
            let thresholds = vec![1.0, 10.0, 100.0, 1000.0, 1e4, 1e5];
            let mut acc = CeiAccumulator::new(
                grid, thresholds.clone(), SubVolume::WholeDomain, false,
            ).unwrap();
            let field = ConcentrationField::from_values(grid, values, 0.0).unwrap();
            for _ in 0..steps {
                acc.accumulate(&field).unwrap();
            }
            let r = acc.finalize().unwrap();
            for idx in 0..r.cei.len() {
                prop_assert!((0.0..=1.0).contains(&r.cei[idx]));
                if idx > 0 {
                    prop_assert!(r.cei[idx] <= r.cei[idx - 1]);
                }
            }
        }

        #[test]
        fn streaming_equals_brute_force(
            seed_values in proptest::collection::vec(0.0f64..100.0, 729),
        ) {
            // oracle: recompute the covered fraction per step from stored
            // fields by direct counting, then average
            let grid = small_grid();
            let thresholds = vec![0.75, 7.5, 75.0];
            let mut acc = CeiAccumulator::new(
                grid, thresholds.clone(), SubVolume::WholeDomain, false,
            ).unwrap();
            let mut stored = Vec::new();
            for step in 0..5 {
                let values: Vec<f64> = seed_values
                    .iter()
                    .map(|v| v * (1.0 + step as f64 * 0.5))
                    .collect();
                let field = ConcentrationField::from_values(grid, values, step as f64).unwrap();
                acc.accumulate(&field).unwrap();
                stored.push(field);
            }
            let streamed = acc.finalize().unwrap();
            for (t_idx, &th) in thresholds.iter().enumerate() {
                let mut total = 0.0;
                for field in &stored {
                    let covered = field.values().iter().filter(|&&v| v >= th).count();
                    total += covered as f64 / field.grid().cell_count() as f64;
                }
                let brute = total / stored.len() as f64;
                prop_assert!((streamed.cei[t_idx] - brute).abs() < 1e-12);
            }
        }
    }
}
