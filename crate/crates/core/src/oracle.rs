//! Trained-model utility: `h(S, F)` is the test accuracy of a learner fitted
//! on the rows of `S` restricted to the columns of `F`.

use std::sync::atomic::{AtomicU64, Ordering};

use dashmap::DashMap;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::game::Utility;
use crate::grid::{BlockGrid, Coalition};
use crate::learner::{LearnerSpec, Matrix};

pub struct UtilityOracle {
    train: Dataset,
    test: Dataset,
    grid: BlockGrid,
    learner: LearnerSpec,
    cache: DashMap<Coalition, f64>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl UtilityOracle {
    pub fn new(train: Dataset, test: Dataset, grid: BlockGrid, learner: LearnerSpec) -> Result<Self> {
        learner.validate()?;
        grid.check_game_size()?;
        if train.n_features() != test.n_features() {
            return Err(Error::Dimension(format!(
                "train has {} features, test has {}",
                train.n_features(),
                test.n_features()
            )));
        }
        if grid.raw_samples() != train.n_samples() || grid.raw_features() != train.n_features() {
            return Err(Error::Dimension(format!(
                "partition covers {}×{} but training data is {}×{}",
                grid.raw_samples(),
                grid.raw_features(),
                train.n_samples(),
                train.n_features()
            )));
        }
        if test.n_samples() == 0 {
            return Err(Error::Dataset("empty test set".into()));
        }
        Ok(UtilityOracle {
            train,
            test,
            grid,
            learner,
            cache: DashMap::new(),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        })
    }

    pub fn grid(&self) -> &BlockGrid {
        &self.grid
    }

    pub fn train(&self) -> &Dataset {
        &self.train
    }

    pub fn test(&self) -> &Dataset {
        &self.test
    }

    pub fn learner(&self) -> &LearnerSpec {
        &self.learner
    }

    /// `(hits, misses)` of the memo cache.
    pub fn cache_stats(&self) -> (u64, u64) {
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }

    /// Number of models trained so far.
    pub fn evaluation_count(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    /// Trains and scores without touching the cache.
    pub fn compute(&self, c: Coalition) -> f64 {
        if c.is_degenerate() {
            return 0.0;
        }
        let rows = self.grid.rows_of(c.samples);
        let cols = self.grid.cols_of(c.features);
        let all_test: Vec<usize> = (0..self.test.n_samples()).collect();
        let train = Matrix::select(&self.train, &rows, &cols);
        let test = Matrix::select(&self.test, &all_test, &cols);
        self.learner.accuracy(&train, &test, self.train.class_count())
    }
}

impl Utility for UtilityOracle {
    fn n(&self) -> usize {
        self.grid.n()
    }

    fn m(&self) -> usize {
        self.grid.m()
    }

    fn score(&self, c: Coalition) -> f64 {
        debug_assert!(c.fits(self.grid.n(), self.grid.m()));
        if let Some(v) = self.cache.get(&c) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return *v;
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        // Concurrent misses on the same key may both train; results are identical.
        let v = self.compute(c);
        self.cache.insert(c, v);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{permutation_marginals, PermutationPair};

    fn toy() -> (Dataset, Dataset) {
        let rows: Vec<Vec<f64>> = (0..12).map(|k| vec![k as f64 - 5.5, ((k * 7) % 5) as f64]).collect();
        let labels: Vec<usize> = (0..12).map(|k| usize::from(k >= 6)).collect();
        let train = Dataset::from_rows(&rows, labels, 2).unwrap();
        let test = Dataset::from_rows(&[vec![-2.0, 1.0], vec![3.0, 0.0], vec![0.4, 4.0]], vec![0, 1, 1], 2).unwrap();
        (train, test)
    }

    fn oracle(n: usize, m: usize) -> UtilityOracle {
        let (train, test) = toy();
        let grid = BlockGrid::contiguous(12, 2, n, m).unwrap();
        UtilityOracle::new(train, test, grid, LearnerSpec::default()).unwrap()
    }

    #[test]
    fn empty_sides_score_zero_without_training() {
        let o = oracle(3, 2);
        assert_eq!(o.evaluate(Coalition::from_indices([], [0, 1])), 0.0);
        assert_eq!(o.evaluate(Coalition::from_indices([0, 1], [])), 0.0);
        assert_eq!(o.cache_stats(), (0, 0));
    }

    #[test]
    fn repeat_calls_hit_the_cache() {
        let o = oracle(3, 2);
        let c = Coalition::from_indices([0, 2], [1]);
        let a = o.evaluate(c);
        let b = o.evaluate(c);
        assert_eq!(a, b);
        assert_eq!(o.cache_stats(), (1, 1));
        assert_eq!(o.evaluation_count(), 1);
    }

    #[test]
    fn one_permutation_pair_trains_once_per_block() {
        let o = oracle(3, 2);
        let p = PermutationPair::generate(3, 2, 5, 0);
        permutation_marginals(&o, &p.rows, &p.cols);
        assert_eq!(o.cache_stats().1, 6);
    }

    #[test]
    fn relabelled_groups_score_the_same() {
        let o = oracle(3, 2);
        let (train, test) = toy();
        let (rp, cp) = ([2, 0, 1], [1, 0]);
        let moved = UtilityOracle::new(train, test, o.grid().permuted(&rp, &cp), LearnerSpec::default()).unwrap();
        for s in 1..8u128 {
            for f in 1..4u128 {
                let c = Coalition::new(crate::GroupSet::from_bits(s), crate::GroupSet::from_bits(f));
                let pc = Coalition::new(c.samples.permuted(&rp), c.features.permuted(&cp));
                assert_eq!(o.evaluate(c), moved.evaluate(pc));
            }
        }
    }

    #[test]
    fn scores_are_accuracies() {
        let o = oracle(4, 2);
        for s in 1..16u128 {
            let v = o.evaluate(Coalition::new(crate::GroupSet::from_bits(s), crate::GroupSet::full(2)));
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn dimension_mismatches_rejected() {
        let (train, test) = toy();
        let grid = BlockGrid::cells(11, 2).unwrap();
        assert!(UtilityOracle::new(train, test, grid, LearnerSpec::default()).is_err());
    }
}
