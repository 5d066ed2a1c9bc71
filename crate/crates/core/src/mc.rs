//! Monte Carlo block values over sampled (row, column) permutation pairs.
//!
//! For a permutation pair the prefix-utility matrix
//! `u[a][b] = h(first a+1 rows, first b+1 columns)` costs one utility per
//! block; each block's four-term marginal is then read off `u` with implicit
//! zeros for the empty prefix.

use std::collections::VecDeque;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Utility;
use crate::grid::{Coalition, GroupSet};
use crate::seed::{shuffled, stream_rng};
use crate::value::{Method, ValueGrid};

/// Permutation pairs evaluated per parallel round. Fixed so that the set of
/// pairs consumed never depends on the worker count.
pub const BATCH: u64 = 32;

/// Largest `n!·m!` accepted by [`exhaustive_values`].
pub const MAX_EXHAUSTIVE_PAIRS: u64 = 5_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationPair {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub seed_index: u64,
}

impl PermutationPair {
    /// The `index`-th pair under `master_seed`.
    pub fn generate(n: usize, m: usize, master_seed: u64, index: u64) -> Self {
        let mut rng = stream_rng(master_seed, index);
        let rows = shuffled(n, &mut rng);
        let cols = shuffled(m, &mut rng);
        PermutationPair { rows, cols, seed_index: index }
    }
}

/// Per-block marginals for one permutation pair, row-major by block index.
/// Issues exactly one utility evaluation per block.
pub fn permutation_marginals<U: Utility + ?Sized>(h: &U, rows: &[usize], cols: &[usize]) -> Vec<f64> {
    let (n, m) = (rows.len(), cols.len());
    let row_prefix: Vec<GroupSet> = prefixes(rows);
    let col_prefix: Vec<GroupSet> = prefixes(cols);
    let mut u = vec![0.0; n * m];
    let mut out = vec![0.0; n * m];
    let at = |u: &[f64], a: Option<usize>, b: Option<usize>| match (a, b) {
        (Some(a), Some(b)) => u[a * m + b],
        _ => 0.0,
    };
    for a in 0..n {
        for b in 0..m {
            let value = h.evaluate(Coalition::new(row_prefix[a], col_prefix[b]));
            u[a * m + b] = value;
            let (pa, pb) = (a.checked_sub(1), b.checked_sub(1));
            out[rows[a] * m + cols[b]] = value + at(&u, pa, pb) - at(&u, Some(a), pb) - at(&u, pa, Some(b));
        }
    }
    out
}

fn prefixes(order: &[usize]) -> Vec<GroupSet> {
    order
        .iter()
        .scan(GroupSet::EMPTY, |acc, &k| {
            *acc = acc.with(k);
            Some(*acc)
        })
        .collect()
}

/// Running mean of per-permutation marginal matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningEstimate {
    pub n: usize,
    pub m: usize,
    pub mean: Vec<f64>,
    pub t: u64,
    history: VecDeque<f64>,
    history_cap: usize,
}

impl RunningEstimate {
    pub fn new(n: usize, m: usize, history_cap: usize) -> Self {
        RunningEstimate {
            n,
            m,
            mean: vec![0.0; n * m],
            t: 0,
            history: VecDeque::with_capacity(history_cap.max(1)),
            history_cap: history_cap.max(1),
        }
    }

    /// `ψ ← t/(t+1)·ψ + 1/(t+1)·ψ_new`, recording the L∞ step size.
    pub fn push(&mut self, sample: &[f64]) {
        assert_eq!(sample.len(), self.mean.len());
        let t = self.t as f64;
        let mut step = 0.0f64;
        for (mu, &x) in self.mean.iter_mut().zip(sample) {
            let next = t / (t + 1.0) * *mu + x / (t + 1.0);
            step = step.max((next - *mu).abs());
            *mu = next;
        }
        self.t += 1;
        if self.history.len() == self.history_cap {
            self.history.pop_front();
        }
        self.history.push_back(step);
    }

    /// Count-weighted average of two estimates over disjoint permutation sets.
    pub fn merge(&self, other: &RunningEstimate) -> RunningEstimate {
        assert_eq!((self.n, self.m), (other.n, other.m));
        let total = self.t + other.t;
        let mut merged = RunningEstimate::new(self.n, self.m, self.history_cap);
        merged.t = total;
        if total > 0 {
            let (wa, wb) = (self.t as f64 / total as f64, other.t as f64 / total as f64);
            merged.mean = self.mean.iter().zip(&other.mean).map(|(a, b)| wa * a + wb * b).collect();
        }
        merged
    }

    pub fn steps(&self) -> impl Iterator<Item = f64> + '_ {
        self.history.iter().copied()
    }

    pub fn last_step(&self) -> Option<f64> {
        self.history.back().copied()
    }

    pub fn into_value_grid(self, method: Method, seed: u64, converged: bool) -> ValueGrid {
        ValueGrid { n: self.n, m: self.m, values: self.mean, method, permutations_used: self.t, seed, converged }
    }
}

/// True iff the last `window` step sizes, each divided by the current mean's
/// L∞ norm (or by 1 when that norm is below 1e-12), are all below `epsilon`.
pub fn convergence_check(est: &RunningEstimate, epsilon: f64, window: usize) -> bool {
    let window = window.max(1);
    if est.history.len() < window {
        return false;
    }
    let scale = est.mean.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let scale = if scale < 1e-12 { 1.0 } else { scale };
    est.history.iter().rev().take(window).all(|s| s / scale < epsilon)
}

/// Sampling and stopping parameters shared by the permutation engines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub budget: u64,
    pub epsilon: f64,
    pub window: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
    /// Print progress lines to standard error.
    #[serde(skip)]
    pub progress: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { budget: 500, epsilon: 1e-3, window: 20, seed: 0, workers: 0, progress: false }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Drives a permutation-sampling estimator: draws work items `0, 1, ..` in
/// fixed-size parallel rounds, folds their marginal matrices into a running
/// mean in index order, and stops at convergence or when the budget runs out.
pub(crate) fn run_permutations<F>(
    cfg: &McConfig,
    n: usize,
    m: usize,
    label: &str,
    item: F,
) -> Result<(RunningEstimate, bool)>
where
    F: Fn(u64) -> Vec<f64> + Sync,
{
    cfg.validate()?;
    crate::with_workers(cfg.workers, || {
        let mut est = RunningEstimate::new(n, m, cfg.window);
        let mut next = 0u64;
        while next < cfg.budget {
            let end = (next + BATCH).min(cfg.budget);
            let round: Vec<Vec<f64>> = (next..end).into_par_iter().map(&item).collect();
            for sample in &round {
                est.push(sample);
                if convergence_check(&est, cfg.epsilon, cfg.window) {
                    return (est, true);
                }
            }
            next = end;
            if cfg.progress {
                eprintln!("[{label}] permutations={} step_linf={:.3e}", est.t, est.last_step().unwrap_or(f64::NAN));
            }
        }
        (est, false)
    })
}

/// Monte Carlo estimate of the block values of `h`.
pub fn mc_values<U: Utility>(h: &U, cfg: &McConfig) -> Result<ValueGrid> {
    let (n, m) = (h.n(), h.m());
    if n > crate::MAX_GROUPS || m > crate::MAX_GROUPS {
        return Err(Error::Partition(format!("{n}×{m} groups exceed the coalition limit of {}", crate::MAX_GROUPS)));
    }
    let (est, converged) = run_permutations(cfg, n, m, "mc", |k| {
        let pair = PermutationPair::generate(n, m, cfg.seed, k);
        permutation_marginals(h, &pair.rows, &pair.cols)
    })?;
    Ok(est.into_value_grid(Method::Mc, cfg.seed, converged))
}

/// Averages marginals over all `n!·m!` permutation pairs; equals the exact
/// value up to rounding.
pub fn exhaustive_values<U: Utility>(h: &U) -> Result<ValueGrid> {
    let (n, m) = (h.n(), h.m());
    let pairs = factorial(n).saturating_mul(factorial(m));
    if pairs > MAX_EXHAUSTIVE_PAIRS {
        return Err(Error::Config(format!("{n}!·{m}! permutation pairs is too many to enumerate")));
    }
    let mut est = RunningEstimate::new(n, m, 1);
    for rows in (0..n).permutations(n) {
        for cols in (0..m).permutations(m) {
            est.push(&permutation_marginals(h, &rows, &cols));
        }
    }
    Ok(est.into_value_grid(Method::Mc, 0, true))
}

fn factorial(k: usize) -> u64 {
    (1..=k as u64).fold(1u64, |acc, x| acc.saturating_mul(x))
}
