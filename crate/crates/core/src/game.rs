//! Utility evaluators for the two-dimensional game and the four-term block
//! marginal contribution.

use crate::error::{Error, Result};
use crate::grid::{Coalition, GroupSet};

/// A utility `h(S, F)` over an `n × m` grid of blocks.
///
/// Implementors provide [`Utility::score`] for non-degenerate coalitions;
/// callers go through [`Utility::evaluate`], which pins every coalition with
/// an empty side to zero.
pub trait Utility: Sync {
    fn n(&self) -> usize;
    fn m(&self) -> usize;

    /// Raw score; only called with non-empty `samples` and `features`.
    fn score(&self, c: Coalition) -> f64;

    fn evaluate(&self, c: Coalition) -> f64 {
        if c.is_degenerate() {
            0.0
        } else {
            self.score(c)
        }
    }

    fn grand(&self) -> f64 {
        self.evaluate(Coalition::full(self.n(), self.m()))
    }
}

impl<U: Utility + ?Sized> Utility for &U {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn m(&self) -> usize {
        (**self).m()
    }
    fn score(&self, c: Coalition) -> f64 {
        (**self).score(c)
    }
    fn evaluate(&self, c: Coalition) -> f64 {
        (**self).evaluate(c)
    }
}

/// `h(S∪i, F∪j) + h(S, F) − h(S∪i, F) − h(S, F∪j)` for a block outside the coalition.
pub fn marginal_contribution<U: Utility + ?Sized>(h: &U, i: usize, j: usize, c: Coalition) -> Result<f64> {
    if i >= h.n() {
        return Err(Error::GroupIndex { index: i, len: h.n() });
    }
    if j >= h.m() {
        return Err(Error::GroupIndex { index: j, len: h.m() });
    }
    if c.samples.contains(i) || c.features.contains(j) {
        return Err(Error::BlockInCoalition { i, j });
    }
    Ok(marginal_unchecked(h, i, j, c))
}

#[inline]
pub(crate) fn marginal_unchecked<U: Utility + ?Sized>(h: &U, i: usize, j: usize, c: Coalition) -> f64 {
    h.evaluate(c.with_sample(i).with_feature(j)) + h.evaluate(c)
        - h.evaluate(c.with_sample(i))
        - h.evaluate(c.with_feature(j))
}

/// Closure-backed utility.
pub struct FnUtility<F> {
    n: usize,
    m: usize,
    f: F,
}

impl<F: Fn(Coalition) -> f64 + Sync> FnUtility<F> {
    pub fn new(n: usize, m: usize, f: F) -> Self {
        FnUtility { n, m, f }
    }
}

impl<F: Fn(Coalition) -> f64 + Sync> Utility for FnUtility<F> {
    fn n(&self) -> usize {
        self.n
    }
    fn m(&self) -> usize {
        self.m
    }
    fn score(&self, c: Coalition) -> f64 {
        (self.f)(c)
    }
}

/// A game given by an explicit table over all `2^n · 2^m` coalitions, zero on
/// every coalition with an empty side.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticGame {
    n: usize,
    m: usize,
    table: Vec<f64>,
}

/// Table size limit; 2^24 entries is 128 MiB of f64.
const MAX_TABLE_BITS: usize = 24;

impl SyntheticGame {
    /// Tabulates `f` over every coalition; degenerate coalitions are stored as 0.
    pub fn from_fn(n: usize, m: usize, f: impl Fn(Coalition) -> f64) -> Self {
        assert!(n >= 1 && m >= 1, "game needs at least one row and one column");
        assert!(n + m <= MAX_TABLE_BITS, "synthetic table too large: {n}+{m} bits");
        let mut table = vec![0.0; 1 << (n + m)];
        for s in 0..1u128 << n {
            for fb in 0..1u128 << m {
                let c = Coalition::new(GroupSet::from_bits(s), GroupSet::from_bits(fb));
                if !c.is_degenerate() {
                    table[Self::slot(m, c)] = f(c);
                }
            }
        }
        SyntheticGame { n, m, table }
    }

    /// Entries uniform on `[0, 1)`.
    pub fn random<R: rand::Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Self {
        let mut game = SyntheticGame::from_fn(n, m, |_| 0.0);
        for (k, v) in game.table.iter_mut().enumerate() {
            let c = Self::unslot(m, k);
            if !c.is_degenerate() {
                *v = rng.random::<f64>();
            }
        }
        game
    }

    /// `h ≡ c` on non-degenerate coalitions.
    pub fn constant(n: usize, m: usize, c: f64) -> Self {
        SyntheticGame::from_fn(n, m, |_| c)
    }

    /// `h(S, F) = |S| · |F|`.
    pub fn product(n: usize, m: usize) -> Self {
        SyntheticGame::from_fn(n, m, |c| (c.samples.len() * c.features.len()) as f64)
    }

    /// `h(S, F) = Σ_{i∈S, j∈F} a[i][j]`.
    pub fn additive(a: &[Vec<f64>]) -> Self {
        let n = a.len();
        let m = a.first().map_or(0, Vec::len);
        SyntheticGame::from_fn(n, m, |c| {
            c.samples.iter().map(|i| c.features.iter().map(|j| a[i][j]).sum::<f64>()).sum()
        })
    }

    /// Rebuilds `base` so block `(i, j)` has marginal contribution exactly `c`
    /// in every context: `h(S∪i, F∪j) = h(S, F∪j) + h(S∪i, F) − h(S, F) + c`.
    pub fn with_planted_dummy(base: &SyntheticGame, i: usize, j: usize, c: f64) -> Self {
        let mut game = base.clone();
        // Every coalition containing both i and j is rewritten from three
        // coalitions that lack i or j, which are left untouched.
        for k in 0..game.table.len() {
            let co = Self::unslot(game.m, k);
            if co.samples.contains(i) && co.features.contains(j) {
                let rest = Coalition::new(co.samples.without(i), co.features.without(j));
                game.table[k] =
                    game.value(rest.with_feature(j)) + game.value(rest.with_sample(i)) - game.value(rest) + c;
            }
        }
        game
    }

    /// `a·h1 + b·h2`, pointwise.
    pub fn linear_combination(a: f64, h1: &SyntheticGame, b: f64, h2: &SyntheticGame) -> Self {
        assert_eq!((h1.n, h1.m), (h2.n, h2.m), "games must share dimensions");
        SyntheticGame { n: h1.n, m: h1.m, table: h1.table.iter().zip(&h2.table).map(|(x, y)| a * x + b * y).collect() }
    }

    /// The relabelled game `g(S, F) = h(row_perm(S), col_perm(F))`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        SyntheticGame::from_fn(self.n, self.m, |c| {
            self.value(Coalition::new(c.samples.permuted(row_perm), c.features.permuted(col_perm)))
        })
    }

    /// `hᵀ(F, S) = h(S, F)`, an `m × n` game.
    pub fn transposed(&self) -> Self {
        SyntheticGame::from_fn(self.m, self.n, |c| self.value(Coalition::new(c.features, c.samples)))
    }

    pub fn value(&self, c: Coalition) -> f64 {
        self.table[Self::slot(self.m, c)]
    }

    /// Iterates `(coalition, utility)` over the whole table.
    pub fn entries(&self) -> impl Iterator<Item = (Coalition, f64)> + '_ {
        self.table.iter().enumerate().map(|(k, &v)| (Self::unslot(self.m, k), v))
    }

    fn slot(m: usize, c: Coalition) -> usize {
        ((c.samples.bits() << m) | c.features.bits()) as usize
    }

    fn unslot(m: usize, k: usize) -> Coalition {
        let k = k as u128;
        Coalition::new(GroupSet::from_bits(k >> m), GroupSet::from_bits(k & ((1 << m) - 1)))
    }
}

impl Utility for SyntheticGame {
    fn n(&self) -> usize {
        self.n
    }
    fn m(&self) -> usize {
        self.m
    }
    fn score(&self, c: Coalition) -> f64 {
        self.value(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng as _, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_game_marginal_is_zero_off_the_empty_boundary() {
        let h = FnUtility::new(3, 3, |_| 5.0);
        // With S and F both non-empty, all four terms equal 5.
        let c = Coalition::from_indices([0], [0]);
        assert_eq!(marginal_contribution(&h, 1, 2, c).unwrap(), 0.0);
    }

    #[test]
    fn product_game_marginal_is_one() {
        let h = SyntheticGame::product(4, 3);
        for (c, _) in h.entries() {
            for i in (0..4).filter(|&i| !c.samples.contains(i)) {
                for j in (0..3).filter(|&j| !c.features.contains(j)) {
                    assert_eq!(marginal_contribution(&h, i, j, c).unwrap(), 1.0);
                }
            }
        }
    }

    #[test]
    fn two_by_two_marginal_matches_table_lookup() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = SyntheticGame::random(2, 2, &mut rng);
        // Block (0,0) against the empty coalition: h({0},{0}) + 0 − 0 − 0.
        let want = h.value(Coalition::from_indices([0], [0]));
        assert_eq!(marginal_contribution(&h, 0, 0, Coalition::EMPTY).unwrap(), want);
        // Against ({1},{1}): four distinct table cells.
        let c = Coalition::from_indices([1], [1]);
        let want = h.value(Coalition::from_indices([0, 1], [0, 1])) + h.value(c)
            - h.value(Coalition::from_indices([0, 1], [1]))
            - h.value(Coalition::from_indices([1], [0, 1]));
        assert_eq!(marginal_contribution(&h, 0, 0, c).unwrap(), want);
    }

    #[test]
    fn block_inside_coalition_is_rejected() {
        let h = SyntheticGame::product(2, 2);
        let c = Coalition::from_indices([0], []);
        assert!(matches!(marginal_contribution(&h, 0, 1, c), Err(Error::BlockInCoalition { i: 0, j: 1 })));
        assert!(marginal_contribution(&h, 2, 0, Coalition::EMPTY).is_err());
    }

    #[test]
    fn empty_convention_holds_in_every_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = SyntheticGame::random(3, 2, &mut rng);
        for (c, v) in h.entries() {
            if c.is_degenerate() {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn planted_dummy_has_constant_marginal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = SyntheticGame::random(3, 3, &mut rng);
        let h = SyntheticGame::with_planted_dummy(&base, 1, 2, 0.7);
        for (c, _) in h.entries() {
            if !c.samples.contains(1) && !c.features.contains(2) {
                let mc = marginal_contribution(&h, 1, 2, c).unwrap();
                assert!((mc - 0.7).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn marginal_is_bilinear_in_the_utility(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h1 = SyntheticGame::random(3, 2, &mut rng);
            let h2 = SyntheticGame::random(3, 2, &mut rng);
            let h = SyntheticGame::linear_combination(a, &h1, b, &h2);
            for (c, _) in h.entries() {
                for i in (0..3).filter(|&i| !c.samples.contains(i)) {
                    for j in (0..2).filter(|&j| !c.features.contains(j)) {
                        let lhs = marginal_contribution(&h, i, j, c).unwrap();
                        let rhs = a * marginal_contribution(&h1, i, j, c).unwrap()
                            + b * marginal_contribution(&h2, i, j, c).unwrap();
                        prop_assert!((lhs - rhs).abs() < 1e-12);
                    }
                }
            }
        }

        #[test]
        fn additive_game_marginal_is_the_block_weight(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let h = SyntheticGame::additive(&a);
            for (c, _) in h.entries() {
                for i in (0..3).filter(|&i| !c.samples.contains(i)) {
                    for j in (0..3).filter(|&j| !c.features.contains(j)) {
                        prop_assert!((marginal_contribution(&h, i, j, c).unwrap() - a[i][j]).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
