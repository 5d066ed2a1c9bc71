//! Exhaustive enumeration of the coalitions `(S, F)` with `S ⊆ N∖i`, `F ⊆ M∖j`.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::grid::{Coalition, GroupSet};

/// Default limit on `(n−1) + (m−1)`, the number of free bits enumerated.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// Every `(S, F)` with `S ⊆ {0..n}∖{i}` and `F ⊆ {0..m}∖{j}`, exactly once,
/// grouped by `(|S|, |F|)` in lexicographic order of the sizes.
pub fn enumerate_coalitions(
    n: usize,
    m: usize,
    exclude_i: usize,
    exclude_j: usize,
    cap: usize,
) -> Result<impl Iterator<Item = Coalition>> {
    if exclude_i >= n {
        return Err(Error::GroupIndex { index: exclude_i, len: n });
    }
    if exclude_j >= m {
        return Err(Error::GroupIndex { index: exclude_j, len: m });
    }
    check_cap(n, m, cap)?;
    let rows = subsets_by_size(n, exclude_i);
    let cols = subsets_by_size(m, exclude_j);
    Ok(strata(n, m).flat_map(move |(s, f)| {
        let rows = rows[s].clone();
        let cols = cols[f].clone();
        rows.into_iter().cartesian_product(cols).map(|(samples, features)| Coalition::new(samples, features))
    }))
}

/// Refuses grids whose `(n−1) + (m−1)` free bits exceed `cap`.
pub fn check_cap(n: usize, m: usize, cap: usize) -> Result<()> {
    let bits = n.saturating_sub(1) + m.saturating_sub(1);
    if bits > cap {
        return Err(Error::EnumerationCap { bits, cap });
    }
    Ok(())
}

/// The `(|S|, |F|)` strata, `0 ≤ |S| ≤ n−1`, `0 ≤ |F| ≤ m−1`.
pub fn strata(n: usize, m: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).cartesian_product(0..m)
}

/// Subsets of `{0..len}∖{skip}`, bucketed by cardinality.
pub(crate) fn subsets_by_size(len: usize, skip: usize) -> Vec<Vec<GroupSet>> {
    let pool: Vec<usize> = (0..len).filter(|&k| k != skip).collect();
    (0..=pool.len())
        .map(|size| pool.iter().copied().combinations(size).map(|members| members.into_iter().collect()).collect())
        .collect()
}
