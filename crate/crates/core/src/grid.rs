//! Partition of a data matrix into sample groups × feature groups, and the
//! coalitions `(S, F)` of the resulting two-dimensional game.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on sample groups and on feature groups in one game.
pub const MAX_GROUPS: usize = 128;

/// A subset of group indices `0..128`, stored as a bit set.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupSet(u128);

impl GroupSet {
    pub const EMPTY: GroupSet = GroupSet(0);

    pub fn from_bits(bits: u128) -> Self {
        GroupSet(bits)
    }

    /// The set `{0, .., len-1}`.
    pub fn full(len: usize) -> Self {
        debug_assert!(len <= MAX_GROUPS);
        if len == MAX_GROUPS {
            GroupSet(u128::MAX)
        } else {
            GroupSet((1u128 << len) - 1)
        }
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    pub fn contains(self, index: usize) -> bool {
        index < MAX_GROUPS && self.0 >> index & 1 == 1
    }

    #[must_use]
    pub fn with(self, index: usize) -> Self {
        GroupSet(self.0 | 1 << index)
    }

    #[must_use]
    pub fn without(self, index: usize) -> Self {
        GroupSet(self.0 & !(1 << index))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Members in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let next = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(next)
            }
        })
    }

    /// Image of the set under `perm` (index `k` maps to `perm[k]`).
    pub fn permuted(self, perm: &[usize]) -> Self {
        self.iter().fold(GroupSet::EMPTY, |acc, k| acc.with(perm[k]))
    }
}

impl FromIterator<usize> for GroupSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().fold(GroupSet::EMPTY, GroupSet::with)
    }
}

impl fmt::Debug for GroupSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A pair `(S, F)` of sample-group and feature-group subsets.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition {
    pub samples: GroupSet,
    pub features: GroupSet,
}

impl Coalition {
    pub const EMPTY: Coalition = Coalition { samples: GroupSet::EMPTY, features: GroupSet::EMPTY };

    pub fn new(samples: GroupSet, features: GroupSet) -> Self {
        Coalition { samples, features }
    }

    pub fn from_indices(samples: impl IntoIterator<Item = usize>, features: impl IntoIterator<Item = usize>) -> Self {
        Coalition { samples: samples.into_iter().collect(), features: features.into_iter().collect() }
    }

    /// The grand coalition `(N, M)` of an `n × m` game.
    pub fn full(n: usize, m: usize) -> Self {
        Coalition::new(GroupSet::full(n), GroupSet::full(m))
    }

    /// True when either side is empty, so the utility is zero by convention.
    pub fn is_degenerate(&self) -> bool {
        self.samples.is_empty() || self.features.is_empty()
    }

    #[must_use]
    pub fn with_sample(self, i: usize) -> Self {
        Coalition::new(self.samples.with(i), self.features)
    }

    #[must_use]
    pub fn with_feature(self, j: usize) -> Self {
        Coalition::new(self.samples, self.features.with(j))
    }

    pub fn fits(&self, n: usize, m: usize) -> bool {
        (self.samples.bits() & !GroupSet::full(n).bits()) == 0
            && (self.features.bits() & !GroupSet::full(m).bits()) == 0
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.samples, self.features)
    }
}

/// Partition of raw samples into `n` row groups and raw features into `m`
/// column groups. Group numbering follows the order groups are listed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockGrid {
    row_members: Vec<Vec<usize>>,
    col_members: Vec<Vec<usize>>,
}

/// On-disk partition specification.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartitionSpec {
    Groups {
        row_groups: Vec<Vec<usize>>,
        col_groups: Vec<Vec<usize>>,
    },
    /// `"cells"`: every sample and every feature is its own group.
    Shorthand(String),
}

impl BlockGrid {
    /// Validates that groups are non-empty, disjoint, and together cover
    /// `0..raw_samples` and `0..raw_features`.
    pub fn new(
        row_members: Vec<Vec<usize>>,
        col_members: Vec<Vec<usize>>,
        raw_samples: usize,
        raw_features: usize,
    ) -> Result<Self> {
        check_partition("row", &row_members, raw_samples)?;
        check_partition("column", &col_members, raw_features)?;
        Ok(BlockGrid { row_members, col_members })
    }

    /// Singleton partition: one block per cell.
    pub fn cells(raw_samples: usize, raw_features: usize) -> Result<Self> {
        BlockGrid::new(
            (0..raw_samples).map(|i| vec![i]).collect(),
            (0..raw_features).map(|j| vec![j]).collect(),
            raw_samples,
            raw_features,
        )
    }

    /// Splits samples into `n` and features into `m` contiguous, nearly equal groups.
    pub fn contiguous(raw_samples: usize, raw_features: usize, n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 || n > raw_samples || m > raw_features {
            return Err(Error::Partition(format!(
                "cannot split {raw_samples}×{raw_features} into {n}×{m} non-empty groups"
            )));
        }
        BlockGrid::new(split_even(raw_samples, n), split_even(raw_features, m), raw_samples, raw_features)
    }

    /// Abstract `n × m` game with one raw sample/feature per group. Useful for
    /// synthetic games that never touch data.
    pub fn abstract_game(n: usize, m: usize) -> Result<Self> {
        BlockGrid::cells(n, m)
    }

    pub fn from_spec(spec: &PartitionSpec, raw_samples: usize, raw_features: usize) -> Result<Self> {
        match spec {
            PartitionSpec::Groups { row_groups, col_groups } => {
                BlockGrid::new(row_groups.clone(), col_groups.clone(), raw_samples, raw_features)
            }
            PartitionSpec::Shorthand(s) if s == "cells" => BlockGrid::cells(raw_samples, raw_features),
            PartitionSpec::Shorthand(s) => Err(Error::Partition(format!("unknown shorthand {s:?}"))),
        }
    }

    /// Reads a JSON partition file, or accepts the literal `cells`.
    pub fn load(path_or_cells: &str, raw_samples: usize, raw_features: usize) -> Result<Self> {
        if path_or_cells == "cells" {
            return BlockGrid::cells(raw_samples, raw_features);
        }
        let text = std::fs::read_to_string(Path::new(path_or_cells))
            .map_err(|e| Error::Partition(format!("{path_or_cells}: {e}")))?;
        let spec: PartitionSpec = serde_json::from_str(&text)?;
        BlockGrid::from_spec(&spec, raw_samples, raw_features)
    }

    pub fn to_spec(&self) -> PartitionSpec {
        PartitionSpec::Groups { row_groups: self.row_members.clone(), col_groups: self.col_members.clone() }
    }

    pub fn n(&self) -> usize {
        self.row_members.len()
    }

    pub fn m(&self) -> usize {
        self.col_members.len()
    }

    /// Coalitions over this grid fit in a [`GroupSet`].
    pub fn check_game_size(&self) -> Result<()> {
        if self.n() > MAX_GROUPS || self.m() > MAX_GROUPS {
            return Err(Error::Partition(format!(
                "{}×{} groups exceed the coalition limit of {MAX_GROUPS} per axis",
                self.n(),
                self.m()
            )));
        }
        Ok(())
    }

    pub fn row_members(&self, i: usize) -> &[usize] {
        &self.row_members[i]
    }

    pub fn col_members(&self, j: usize) -> &[usize] {
        &self.col_members[j]
    }

    pub fn raw_samples(&self) -> usize {
        self.row_members.iter().map(Vec::len).sum()
    }

    pub fn raw_features(&self) -> usize {
        self.col_members.iter().map(Vec::len).sum()
    }

    /// Raw sample indices selected by `samples`, ascending.
    pub fn rows_of(&self, samples: GroupSet) -> Vec<usize> {
        let mut rows: Vec<usize> = samples.iter().flat_map(|i| self.row_members[i].iter().copied()).collect();
        rows.sort_unstable();
        rows
    }

    /// Raw feature indices selected by `features`, ascending.
    pub fn cols_of(&self, features: GroupSet) -> Vec<usize> {
        let mut cols: Vec<usize> = features.iter().flat_map(|j| self.col_members[j].iter().copied()).collect();
        cols.sort_unstable();
        cols
    }

    /// The same partition with groups relabelled: group `i` becomes row group
    /// `row_perm[i]`, group `j` becomes column group `col_perm[j]`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        BlockGrid {
            row_members: relabel(&self.row_members, row_perm),
            col_members: relabel(&self.col_members, col_perm),
        }
    }

    /// The coalition of groups that contain any of the given raw indices.
    pub fn coalition_covering(&self, raw_rows: &[usize], raw_cols: &[usize]) -> Coalition {
        let samples = (0..self.n()).filter(|&i| self.row_members[i].iter().any(|r| raw_rows.contains(r)));
        let features = (0..self.m()).filter(|&j| self.col_members[j].iter().any(|c| raw_cols.contains(c)));
        Coalition::from_indices(samples, features)
    }
}

fn relabel(groups: &[Vec<usize>], perm: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); groups.len()];
    for (k, members) in groups.iter().enumerate() {
        out[perm[k]] = members.clone();
    }
    out
}

fn split_even(total: usize, parts: usize) -> Vec<Vec<usize>> {
    (0..parts).map(|p| (p * total / parts..(p + 1) * total / parts).collect()).collect()
}

fn check_partition(axis: &str, groups: &[Vec<usize>], raw: usize) -> Result<()> {
    if groups.is_empty() {
        return Err(Error::Partition(format!("no {axis} groups")));
    }
    let mut seen = vec![false; raw];
    for (g, members) in groups.iter().enumerate() {
        if members.is_empty() {
            return Err(Error::Partition(format!("{axis} group {g} is empty")));
        }
        for &idx in members {
            if idx >= raw {
                return Err(Error::Partition(format!("{axis} group {g} references index {idx} outside 0..{raw}")));
            }
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::Partition(format!("{axis} index {idx} appears in more than one group")));
            }
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Partition(format!("{axis} index {missing} is not covered by any group")));
    }
    Ok(())
}
