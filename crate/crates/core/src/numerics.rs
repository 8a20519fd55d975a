//! Accumulation helpers.
//!
//! Mass budgets compare sums over ~2e4 cells accumulated across ~4e4 steps;
//! a plain left-fold would drift past the 1% budget tolerance long before the
//! physics does. All mass-bearing sums go through Neumaier compensation.

use crate::scalar::Scalar;

/// Neumaier (improved Kahan) compensated accumulator.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum<T> {
    sum: T,
    compensation: T,
}

impl<T: Scalar> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> CompensatedSum<T> {
    #[inline]
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            compensation: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, v: T) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation = self.compensation + ((self.sum - t) + v);
        } else {
            self.compensation = self.compensation + ((v - t) + self.sum);
        }
        self.sum = t;
    }

    /// Folds another accumulator in; used to merge per-chunk partial sums in
    /// a fixed order so results do not depend on the parallel schedule.
    #[inline]
    pub fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.compensation
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_beats_naive_fold() {
        // 1 + 1e-16 repeated: naive f64 fold loses every increment.
        let mut acc = CompensatedSum::<f64>::new();
        acc.add(1.0);
        for _ in 0..1_000_000 {
            acc.add(1e-16);
        }
        let exact = 1.0 + 1e-10;
        assert!((acc.value() - exact).abs() < 1e-15);
    }

    #[test]
    fn reordering_is_stable() {
        let values: Vec<f64> = (0..10_000)
            .map(|i| (i as f64 * 0.7134).sin() * 10f64.powi(i % 30 - 15))
            .collect();
        let forward = compensated_sum(values.iter().copied());
        let backward = compensated_sum(values.iter().rev().copied());
        assert!((forward - backward).abs() <= 1e-13 * forward.abs().max(1.0));
    }

    #[test]
    fn merge_matches_flat_sum() {
        let values: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let flat = compensated_sum(values.iter().copied());
        let mut left = CompensatedSum::new();
        let mut right = CompensatedSum::new();
        for v in &values[..500] {
            left.add(*v);
        }
        for v in &values[500..] {
            right.add(*v);
        }
        left.merge(&right);
        assert!((left.value() - flat).abs() < 1e-12);
    }
}
