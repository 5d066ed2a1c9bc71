//! Block-level data valuation for tabular training data.
//!
//! A training matrix is partitioned into `n` sample groups and `m` feature
//! groups. Every (sample group, feature group) pair is a *block*, and a
//! utility `h(S, F)` scores the model trained on the blocks selected by a
//! sample-group subset `S` and a feature-group subset `F`. This crate assigns
//! each block a two-dimensional Shapley value through one of several engines:
//!
//! * [`exact`] enumerates every coalition with closed-form weights;
//! * [`mc`] samples row/column permutation pairs with prefix-utility reuse;
//! * [`knn`] replaces training by the closed-form nearest-neighbor Shapley
//!   recursion and only samples feature permutations;
//! * [`baseline`] flattens the grid into a one-dimensional game with mean
//!   imputation, for comparison.
//!
//! All utilities follow the empty-coalition convention: `h(S, ∅) = h(∅, F) = 0`.

pub mod axioms;
pub mod baseline;
pub mod dataset;
pub mod enumerate;
pub mod error;
pub mod exact;
pub mod game;
pub mod grid;
pub mod knn;
pub mod learner;
pub mod mc;
pub mod oracle;
pub mod seed;
pub mod value;
pub mod weights;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use game::{marginal_contribution, SyntheticGame, Utility};
pub use grid::{BlockGrid, Coalition, GroupSet, MAX_GROUPS};
pub use learner::{LearnerKind, LearnerSpec};
pub use oracle::UtilityOracle;
pub use value::{Axis, Method, ValueGrid};
pub use weights::WeightTable;

/// Runs `f` on a dedicated rayon pool with `workers` threads, or on the global
/// pool when `workers` is zero.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Runtime(format!("failed to build worker pool: {e}")))?;
    Ok(pool.install(f))
}
