//! One-dimensional Shapley baselines: the flattened game over all `n·m`
//! blocks with mean imputation, and sample-wise / feature-wise Shapley of the
//! restricted games `S ↦ h(S, M)` and `F ↦ h(N, F)`.

use itertools::Itertools;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::game::Utility;
use crate::grid::{BlockGrid, Coalition, GroupSet};
use crate::learner::{LearnerSpec, Matrix};
use crate::mc::{run_permutations, McConfig, RunningEstimate};
use crate::seed::{shuffled, stream_rng};
use crate::value::{Method, ValueGrid};

/// A cooperative game over `players()` players.
pub trait PlayerGame: Sync {
    fn players(&self) -> usize;
    /// Utility of the players flagged in `present`.
    fn value(&self, present: &[bool]) -> f64;
}

/// How a one-dimensional Shapley value is computed.
#[derive(Clone, Debug)]
pub enum Sampling {
    /// Average over every player order (small games only).
    Exhaustive,
    Permutations(McConfig),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShapleyEstimate {
    pub values: Vec<f64>,
    pub permutations: u64,
    pub converged: bool,
}

/// Largest player count accepted by [`Sampling::Exhaustive`].
pub const MAX_EXHAUSTIVE_PLAYERS: usize = 9;

/// Marginal gain of every player along one order.
pub fn order_marginals<G: PlayerGame + ?Sized>(game: &G, order: &[usize]) -> Vec<f64> {
    let mut present = vec![false; game.players()];
    let mut out = vec![0.0; game.players()];
    let mut prev = game.value(&present);
    for &p in order {
        present[p] = true;
        let cur = game.value(&present);
        out[p] = cur - prev;
        prev = cur;
    }
    out
}

pub fn shapley_1d<G: PlayerGame + ?Sized>(game: &G, sampling: &Sampling) -> Result<ShapleyEstimate> {
    let p = game.players();
    if p == 0 {
        return Err(Error::Config("game has no players".into()));
    }
    match sampling {
        Sampling::Exhaustive => {
            if p > MAX_EXHAUSTIVE_PLAYERS {
                return Err(Error::Config(format!(
                    "{p} players is too many for exhaustive enumeration (max {MAX_EXHAUSTIVE_PLAYERS})"
                )));
            }
            let mut est = RunningEstimate::new(p, 1, 1);
            for order in (0..p).permutations(p) {
                est.push(&order_marginals(game, &order));
            }
            Ok(ShapleyEstimate { permutations: est.t, values: est.mean, converged: true })
        }
        Sampling::Permutations(cfg) => {
            let (est, converged) = run_permutations(cfg, p, 1, "1d", |k| {
                order_marginals(game, &shuffled(p, &mut stream_rng(cfg.seed, k)))
            })?;
            Ok(ShapleyEstimate { permutations: est.t, values: est.mean, converged })
        }
    }
}

/// Which side of the grid the restricted game keeps as players.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Players {
    /// `g(S) = h(S, M)`.
    Samples,
    /// `g(F) = h(N, F)`.
    Features,
}

struct Restricted<'a, U: ?Sized> {
    h: &'a U,
    axis: Players,
}

impl<U: Utility + ?Sized> PlayerGame for Restricted<'_, U> {
    fn players(&self) -> usize {
        match self.axis {
            Players::Samples => self.h.n(),
            Players::Features => self.h.m(),
        }
    }

    fn value(&self, present: &[bool]) -> f64 {
        let chosen: GroupSet = present.iter().positions(|&b| b).collect();
        let c = match self.axis {
            Players::Samples => Coalition::new(chosen, GroupSet::full(self.h.m())),
            Players::Features => Coalition::new(GroupSet::full(self.h.n()), chosen),
        };
        self.h.evaluate(c)
    }
}

/// Shapley values of the sample-restricted or feature-restricted game.
pub fn direct_1d_shapley<U: Utility>(h: &U, axis: Players, sampling: &Sampling) -> Result<ShapleyEstimate> {
    shapley_1d(&Restricted { h, axis }, sampling)
}

/// Blocks as players, row-major: block `(i, j)` is player `i·m + j`.
///
/// A block subset materialises the sample groups and feature groups it
/// touches; cells of absent blocks inside that rectangle are filled with the
/// full-training-set column mean. Sample groups with no present block are
/// dropped.
pub struct FlattenedGame {
    train: Dataset,
    test: Dataset,
    grid: BlockGrid,
    learner: LearnerSpec,
    means: Vec<f64>,
}

impl FlattenedGame {
    pub fn new(train: Dataset, test: Dataset, grid: BlockGrid, learner: LearnerSpec) -> Result<Self> {
        learner.validate()?;
        if train.n_features() != test.n_features()
            || grid.raw_samples() != train.n_samples()
            || grid.raw_features() != train.n_features()
        {
            return Err(Error::Dimension("partition, train and test shapes disagree".into()));
        }
        let means = train.column_means();
        Ok(FlattenedGame { train, test, grid, learner, means })
    }

    pub fn grid(&self) -> &BlockGrid {
        &self.grid
    }

    pub fn flatten(&self, i: usize, j: usize) -> usize {
        i * self.grid.m() + j
    }

    pub fn unflatten(&self, p: usize) -> (usize, usize) {
        (p / self.grid.m(), p % self.grid.m())
    }

    /// The imputed training matrix for a block subset, or `None` when empty.
    pub fn materialize(&self, present: &[bool]) -> Option<(Matrix, Vec<usize>)> {
        let (n, m) = (self.grid.n(), self.grid.m());
        let rows_on: Vec<usize> = (0..n).filter(|&i| (0..m).any(|j| present[i * m + j])).collect();
        let cols_on: Vec<usize> = (0..m).filter(|&j| (0..n).any(|i| present[i * m + j])).collect();
        if rows_on.is_empty() {
            return None;
        }
        // raw column -> owning group, in ascending raw order
        let mut raw_cols: Vec<(usize, usize)> =
            cols_on.iter().flat_map(|&j| self.grid.col_members(j).iter().map(move |&c| (c, j))).collect();
        raw_cols.sort_unstable();
        let mut raw_rows: Vec<(usize, usize)> =
            rows_on.iter().flat_map(|&i| self.grid.row_members(i).iter().map(move |&r| (r, i))).collect();
        raw_rows.sort_unstable();

        let mut data = Vec::with_capacity(raw_rows.len() * raw_cols.len());
        for &(r, i) in &raw_rows {
            for &(c, j) in &raw_cols {
                data.push(if present[i * m + j] { self.train.get(r, c) } else { self.means[c] });
            }
        }
        let matrix = Matrix {
            data,
            rows: raw_rows.len(),
            cols: raw_cols.len(),
            labels: raw_rows.iter().map(|&(r, _)| self.train.labels()[r]).collect(),
        };
        Some((matrix, raw_cols.iter().map(|&(c, _)| c).collect()))
    }
}

impl PlayerGame for FlattenedGame {
    fn players(&self) -> usize {
        self.grid.n() * self.grid.m()
    }

    fn value(&self, present: &[bool]) -> f64 {
        match self.materialize(present) {
            None => 0.0,
            Some((train, cols)) => {
                let all: Vec<usize> = (0..self.test.n_samples()).collect();
                let test = Matrix::select(&self.test, &all, &cols);
                self.learner.accuracy(&train, &test, self.train.class_count())
            }
        }
    }
}

/// Flattening of an abstract 2D game: a block subset is worth
/// `h(rows touched, columns touched)`.
pub struct BlockClosure<'a, U: ?Sized> {
    pub h: &'a U,
}

impl<U: Utility + ?Sized> PlayerGame for BlockClosure<'_, U> {
    fn players(&self) -> usize {
        self.h.n() * self.h.m()
    }

    fn value(&self, present: &[bool]) -> f64 {
        let m = self.h.m();
        let c =
            present.iter().positions(|&b| b).fold(Coalition::EMPTY, |c, p| c.with_sample(p / m).with_feature(p % m));
        self.h.evaluate(c)
    }
}

/// Values every block as a player of a flattened game and reshapes the result.
pub fn baseline_1d_values<G: PlayerGame>(game: &G, n: usize, m: usize, sampling: &Sampling) -> Result<ValueGrid> {
    if game.players() != n * m {
        return Err(Error::Dimension(format!("{} players for a {n}×{m} grid", game.players())));
    }
    let est = shapley_1d(game, sampling)?;
    let seed = match sampling {
        Sampling::Permutations(cfg) => cfg.seed,
        Sampling::Exhaustive => 0,
    };
    Ok(ValueGrid {
        n,
        m,
        values: est.values,
        method: Method::Baseline1d,
        permutations_used: est.permutations,
        seed,
        converged: est.converged,
    })
}
