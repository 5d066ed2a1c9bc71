//! Ground-truth block values by full coalition enumeration.

use rayon::prelude::*;

use crate::enumerate::{check_cap, enumerate_coalitions, DEFAULT_ENUMERATION_CAP};
use crate::error::Result;
use crate::game::{marginal_unchecked, Utility};
use crate::value::ValueGrid;
use crate::weights::{ln_factorials, WeightTable};

/// `ψ_ij = Σ_{S⊆N∖i, F⊆M∖j} p[|S|][|F|] · M_h^{ij}(S, F)` for every block.
pub fn exact_values<U: Utility>(h: &U) -> Result<ValueGrid> {
    exact_values_with_cap(h, DEFAULT_ENUMERATION_CAP)
}

pub fn exact_values_with_cap<U: Utility>(h: &U, cap: usize) -> Result<ValueGrid> {
    let (n, m) = (h.n(), h.m());
    let weights = WeightTable::new(n, m);
    per_block(n, m, cap, |i, j| {
        let mut acc = 0.0;
        for c in enumerate_coalitions(n, m, i, j, cap)? {
            acc += weights.get(c.samples.len(), c.features.len()) * marginal_unchecked(h, i, j, c);
        }
        Ok(acc)
    })
}

/// Stratified form: `ψ_ij = (1/nm) Σ_{s,f} Δ_sf` where `Δ_sf` is the mean
/// marginal over coalitions with `|S| = s−1`, `|F| = f−1`.
pub fn stratified_values<U: Utility>(h: &U) -> Result<ValueGrid> {
    let (n, m) = (h.n(), h.m());
    per_block(n, m, DEFAULT_ENUMERATION_CAP, |i, j| {
        let deltas = stratum_deltas(h, i, j)?;
        Ok(deltas.iter().flatten().sum::<f64>() / (n * m) as f64)
    })
}

/// `Δ[s][f]` for `0 ≤ s < n`, `0 ≤ f < m` (stratum sizes `|S| = s`, `|F| = f`):
/// the average 2D marginal of block `(i, j)` within the stratum.
pub fn stratum_deltas<U: Utility>(h: &U, i: usize, j: usize) -> Result<Vec<Vec<f64>>> {
    let (n, m) = (h.n(), h.m());
    let lf = ln_factorials(n.max(m));
    let binom = |a: usize, b: usize| (lf[a] - lf[b] - lf[a - b]).exp().round();
    let mut sums = vec![vec![0.0; m]; n];
    for c in enumerate_coalitions(n, m, i, j, DEFAULT_ENUMERATION_CAP)? {
        sums[c.samples.len()][c.features.len()] += marginal_unchecked(h, i, j, c);
    }
    for (s, row) in sums.iter_mut().enumerate() {
        for (f, v) in row.iter_mut().enumerate() {
            *v /= binom(n - 1, s) * binom(m - 1, f);
        }
    }
    Ok(sums)
}

fn per_block(n: usize, m: usize, cap: usize, block: impl Fn(usize, usize) -> Result<f64> + Sync) -> Result<ValueGrid> {
    check_cap(n, m, cap)?;
    let values = (0..n * m).into_par_iter().map(|k| block(k / m, k % m)).collect::<Result<Vec<f64>>>()?;
    Ok(ValueGrid::exact(n, m, values))
}
