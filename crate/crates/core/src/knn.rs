//! Training-free block values under a K-nearest-neighbour surrogate.
//!
//! For a fixed feature set the Shapley value of every training sample under
//! the KNN utility
//! `U(S) = (1/T) Σ_t (1/K) Σ_{k ≤ min(K,|S|)} 1[y_{α_k(S,t)} = y_t]`
//! has a closed form computed by one sort per test point. Block values then
//! average, over feature-group permutations, the change in a sample group's
//! value when its feature group joins the prefix.

use std::sync::atomic::{AtomicU64, Ordering};

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::grid::BlockGrid;
use crate::learner::Matrix;
use crate::mc::{run_permutations, McConfig, RunningEstimate};
use crate::seed::{shuffled, stream_rng};
use crate::value::{Method, ValueGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    /// Maximum number of sampled feature permutations.
    pub feature_permutations: u64,
    pub epsilon: f64,
    pub window: usize,
    pub seed: u64,
    pub workers: usize,
    #[serde(skip)]
    pub progress: bool,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k: 5, feature_permutations: 500, epsilon: 1e-3, window: 20, seed: 0, workers: 0, progress: false }
    }
}

/// Per-sample KNN-Shapley values on the columns `cols` of `train`, averaged
/// over the rows of `test`. Both matrices must share a column layout.
///
/// Training rows are ordered by squared distance to each test point, ties by
/// row index. With `N` rows and the farthest row `α_N`:
/// `s(α_N) = 1[y_{α_N} = y]·min(K, N)/(K·N)` and
/// `s(α_i) = s(α_{i+1}) + (1[y_{α_i} = y] − 1[y_{α_{i+1}} = y])/K · min(K, i)/i`.
pub fn knn_shapley(train: &Matrix, test: &Matrix, cols: &[usize], k: usize) -> Vec<f64> {
    let n = train.rows;
    let mut out = vec![0.0; n];
    if cols.is_empty() || n == 0 || test.rows == 0 {
        return out;
    }
    let kf = k as f64;
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
    for t in 0..test.rows {
        let q = &test.data[t * test.cols..(t + 1) * test.cols];
        let y = test.labels[t];
        order.clear();
        order.extend((0..n).map(|r| {
            let row = &train.data[r * train.cols..(r + 1) * train.cols];
            let d: f64 = cols.iter().map(|&c| (row[c] - q[c]) * (row[c] - q[c])).sum();
            (d, r)
        }));
        order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let hit = |pos: usize| if train.labels[order[pos].1] == y { 1.0 } else { 0.0 };

        let mut s = hit(n - 1) * (k.min(n) as f64) / (kf * n as f64);
        out[order[n - 1].1] += s;
        // pos is 0-based; the 1-based rank is pos + 1
        for pos in (0..n - 1).rev() {
            let rank = (pos + 1) as f64;
            s += (hit(pos) - hit(pos + 1)) / kf * (k.min(pos + 1) as f64) / rank;
            out[order[pos].1] += s;
        }
    }
    let inv_t = 1.0 / test.rows as f64;
    out.iter_mut().for_each(|v| *v *= inv_t);
    out
}

/// Standardised train/test data and the partition being valued.
pub struct KnnEngine {
    train: Matrix,
    test: Matrix,
    grid: BlockGrid,
    k: usize,
    sweeps: AtomicU64,
}

impl KnnEngine {
    /// Columns are z-scored with statistics of the full training matrix.
    pub fn new(train: &Dataset, test: &Dataset, grid: BlockGrid, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
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
        if test.n_samples() == 0 || train.n_samples() == 0 {
            return Err(Error::Dataset("empty train or test set".into()));
        }
        let (mean, scale) = column_stats(train);
        let zscore = |d: &Dataset| {
            let mut m = Matrix::all(d);
            let cols = m.cols;
            for (k, v) in m.data.iter_mut().enumerate() {
                *v = (*v - mean[k % cols]) / scale[k % cols];
            }
            m
        };
        Ok(KnnEngine { train: zscore(train), test: zscore(test), grid, k, sweeps: AtomicU64::new(0) })
    }

    pub fn grid(&self) -> &BlockGrid {
        &self.grid
    }

    /// Number of per-feature-set value sweeps performed so far.
    pub fn sweeps(&self) -> u64 {
        self.sweeps.load(Ordering::Relaxed)
    }

    /// Per raw training sample values for the union of the given feature groups.
    pub fn sample_values(&self, feature_groups: &[usize]) -> Vec<f64> {
        let mut cols: Vec<usize> =
            feature_groups.iter().flat_map(|&j| self.grid.col_members(j).iter().copied()).collect();
        cols.sort_unstable();
        self.sweeps.fetch_add(1, Ordering::Relaxed);
        knn_shapley(&self.train, &self.test, &cols, self.k)
    }

    /// Block increments for one feature-group order: block `(i, j)` receives
    /// `Σ_{r∈i} φ(r, prefix ∪ j) − φ(r, prefix)`. One sweep per feature group;
    /// the previous prefix's values are carried forward.
    pub fn walk(&self, order: &[usize]) -> Vec<f64> {
        let (n, m) = (self.grid.n(), self.grid.m());
        let mut out = vec![0.0; n * m];
        let mut prev = vec![0.0; self.train.rows];
        let mut prefix = Vec::with_capacity(m);
        for &j in order {
            prefix.push(j);
            let cur = self.sample_values(&prefix);
            for i in 0..n {
                out[i * m + j] = self.grid.row_members(i).iter().map(|&r| cur[r] - prev[r]).sum();
            }
            prev = cur;
        }
        out
    }
}

fn column_stats(d: &Dataset) -> (Vec<f64>, Vec<f64>) {
    let mean = d.column_means();
    let n = d.n_samples() as f64;
    let scale = (0..d.n_features())
        .map(|c| {
            let var = (0..d.n_samples()).map(|r| (d.get(r, c) - mean[c]).powi(2)).sum::<f64>() / n;
            if var.sqrt() < 1e-12 {
                1.0
            } else {
                var.sqrt()
            }
        })
        .collect();
    (mean, scale)
}

/// Sampled-permutation estimate of the KNN-surrogate block values.
pub fn knn_2d_values(engine: &KnnEngine, cfg: &KnnConfig) -> Result<ValueGrid> {
    if cfg.k != engine.k {
        return Err(Error::Config(format!("engine built with k={} but config says k={}", engine.k, cfg.k)));
    }
    let (n, m) = (engine.grid.n(), engine.grid.m());
    let mc = McConfig {
        budget: cfg.feature_permutations,
        epsilon: cfg.epsilon,
        window: cfg.window,
        seed: cfg.seed,
        workers: cfg.workers,
        progress: cfg.progress,
    };
    let (est, converged) = run_permutations(&mc, n, m, "knn", |k| {
        let order = shuffled(m, &mut stream_rng(cfg.seed, k));
        engine.walk(&order)
    })?;
    Ok(est.into_value_grid(Method::Knn, cfg.seed, converged))
}

/// Averages the feature walk over all `m!` orders.
pub fn knn_2d_exhaustive(engine: &KnnEngine) -> ValueGrid {
    let (n, m) = (engine.grid.n(), engine.grid.m());
    let mut est = RunningEstimate::new(n, m, 1);
    for order in (0..m).permutations(m) {
        est.push(&engine.walk(&order));
    }
    est.into_value_grid(Method::Knn, 0, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `U(S)` for one or more test points, by direct neighbour search.
    fn knn_utility(train: &Matrix, test: &Matrix, subset: &[usize], k: usize) -> f64 {
        let mut total = 0.0;
        for t in 0..test.rows {
            let q = &test.data[t * test.cols..(t + 1) * test.cols];
            let mut d: Vec<(f64, usize)> = subset
                .iter()
                .map(|&r| {
                    let row = &train.data[r * train.cols..(r + 1) * train.cols];
                    (row.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(), r)
                })
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let hits = d.iter().take(k).filter(|(_, r)| train.labels[*r] == test.labels[t]).count();
            total += hits as f64 / k as f64;
        }
        total / test.rows as f64
    }

    /// Shapley values of `knn_utility` by subset enumeration.
    fn brute_force(train: &Matrix, test: &Matrix, k: usize) -> Vec<f64> {
        let n = train.rows;
        let fact = |x: usize| (1..=x).map(|v| v as f64).product::<f64>();
        (0..n)
            .map(|i| {
                let others: Vec<usize> = (0..n).filter(|&r| r != i).collect();
                let mut v = 0.0;
                for mask in 0..1u32 << others.len() {
                    let s: Vec<usize> =
                        others.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &r)| r).collect();
                    let mut with = s.clone();
                    with.push(i);
                    let w = fact(s.len()) * fact(n - s.len() - 1) / fact(n);
                    v += w * (knn_utility(train, test, &with, k) - knn_utility(train, test, &s, k));
                }
                v
            })
            .collect()
    }

    fn random_problem(rng: &mut ChaCha8Rng, n: usize, t: usize, d: usize) -> (Matrix, Matrix) {
        let mk = |rows: usize, rng: &mut ChaCha8Rng| Matrix {
            data: (0..rows * d).map(|_| rng.random_range(-1.0..1.0)).collect(),
            rows,
            cols: d,
            labels: (0..rows).map(|_| rng.random_range(0..2)).collect(),
        };
        let train = mk(n, rng);
        let test = mk(t, rng);
        (train, test)
    }

    #[test]
    fn all_matching_labels_give_one_over_n() {
        let train = Matrix { data: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0], rows: 6, cols: 1, labels: vec![1; 6] };
        let test = Matrix { data: vec![2.2], rows: 1, cols: 1, labels: vec![1] };
        for k in 1..=6 {
            let phi = knn_shapley(&train, &test, &[0], k);
            assert!(phi.iter().all(|v| (v - 1.0 / 6.0).abs() < 1e-15), "k={k}: {phi:?}");
        }
        // fewer samples than K: each sample is worth 1/K
        let phi = knn_shapley(&train, &test, &[0], 8);
        assert!(phi.iter().all(|v| (v - 1.0 / 8.0).abs() < 1e-15));
    }

    #[test]
    fn three_samples_one_nn() {
        // distance order: r0 (match), r1 (miss), r2 (miss)
        let train = Matrix { data: vec![0.1, 0.5, 0.9], rows: 3, cols: 1, labels: vec![0, 1, 1] };
        let test = Matrix { data: vec![0.0], rows: 1, cols: 1, labels: vec![0] };
        let phi = knn_shapley(&train, &test, &[0], 1);
        // s3 = 0, s2 = 0 + (0−0)·1/2 = 0, s1 = 0 + (1−0)·1/1 = 1
        assert_eq!(phi, vec![1.0, 0.0, 0.0]);
        let oracle = brute_force(&train, &test, 1);
        for (a, b) in phi.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn recursion_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..30 {
            let n = rng.random_range(1..=7);
            let (train, test) = random_problem(&mut rng, n, 3, 2);
            for k in [1, 2, 3, 5] {
                let phi = knn_shapley(&train, &test, &[0, 1], k);
                let oracle = brute_force(&train, &test, k);
                for (a, b) in phi.iter().zip(&oracle) {
                    assert!((a - b).abs() < 1e-10, "trial {trial} k {k}: {phi:?} vs {oracle:?}");
                }
                let total: f64 = phi.iter().sum();
                let all: Vec<usize> = (0..n).collect();
                assert!((total - knn_utility(&train, &test, &all, k)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn distance_ties_resolve_by_index() {
        let train = Matrix { data: vec![1.0, 1.0, 1.0], rows: 3, cols: 1, labels: vec![0, 1, 0] };
        let test = Matrix { data: vec![0.0], rows: 1, cols: 1, labels: vec![0] };
        let phi = knn_shapley(&train, &test, &[0], 1);
        assert_eq!(phi, knn_shapley(&train, &test, &[0], 1));
        let oracle = brute_force(&train, &test, 1);
        for (a, b) in phi.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let labels = rows.iter().map(|r| usize::from(r[0] + 0.3 * r[1] > 0.0)).collect();
        Dataset::from_rows(&rows, labels, 2).unwrap()
    }

    #[test]
    fn single_feature_group_is_the_sample_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (train, test) = (dataset(&mut rng, 12, 3), dataset(&mut rng, 5, 3));
        let grid = BlockGrid::new((0..12).map(|r| vec![r]).collect(), vec![vec![0, 1, 2]], 12, 3).unwrap();
        let engine = KnnEngine::new(&train, &test, grid, 3).unwrap();
        let v = knn_2d_values(&engine, &KnnConfig { k: 3, feature_permutations: 5, ..KnnConfig::default() }).unwrap();
        let phi = engine.sample_values(&[0]);
        for i in 0..12 {
            assert!((v.get(i, 0) - phi[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn row_sums_telescope_to_full_feature_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (train, test) = (dataset(&mut rng, 10, 3), dataset(&mut rng, 4, 3));
        let engine = KnnEngine::new(&train, &test, BlockGrid::cells(10, 3).unwrap(), 2).unwrap();
        let v = knn_2d_exhaustive(&engine);
        let full = engine.sample_values(&[0, 1, 2]);
        for (i, s) in v.sample_values().iter().enumerate() {
            assert!((s - full[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn one_walk_costs_one_sweep_per_feature_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (train, test) = (dataset(&mut rng, 8, 5), dataset(&mut rng, 3, 5));
        let engine = KnnEngine::new(&train, &test, BlockGrid::cells(8, 5).unwrap(), 3).unwrap();
        engine.walk(&[4, 2, 0, 1, 3]);
        assert_eq!(engine.sweeps(), 5);
    }

    #[test]
    fn grouped_rows_sum_member_increments() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (train, test) = (dataset(&mut rng, 9, 2), dataset(&mut rng, 3, 2));
        let cells = KnnEngine::new(&train, &test, BlockGrid::cells(9, 2).unwrap(), 3).unwrap();
        let grouped_grid =
            BlockGrid::new(vec![vec![0, 1, 2], vec![3, 4, 5, 6, 7, 8]], vec![vec![0], vec![1]], 9, 2).unwrap();
        let grouped = KnnEngine::new(&train, &test, grouped_grid, 3).unwrap();
        let a = knn_2d_exhaustive(&cells);
        let b = knn_2d_exhaustive(&grouped);
        for j in 0..2 {
            let first: f64 = (0..3).map(|i| a.get(i, j)).sum();
            assert!((b.get(0, j) - first).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_across_workers() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (train, test) = (dataset(&mut rng, 20, 4), dataset(&mut rng, 6, 4));
        let engine = KnnEngine::new(&train, &test, BlockGrid::cells(20, 4).unwrap(), 3).unwrap();
        let cfg = KnnConfig { k: 3, feature_permutations: 70, seed: 9, epsilon: 0.0, ..KnnConfig::default() };
        let a = knn_2d_values(&engine, &KnnConfig { workers: 1, ..cfg.clone() }).unwrap();
        let b = knn_2d_values(&engine, &KnnConfig { workers: 4, ..cfg }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.permutations_used, 70);
    }

    #[test]
    fn empty_feature_set_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (train, test) = (dataset(&mut rng, 5, 2), dataset(&mut rng, 2, 2));
        let engine = KnnEngine::new(&train, &test, BlockGrid::cells(5, 2).unwrap(), 1).unwrap();
        assert_eq!(engine.sample_values(&[]), vec![0.0; 5]);
    }
}
