//! Closed-form coalition weights `p[s][f]` of the two-dimensional Shapley
//! value and a checker for the linear system they solve.

use crate::axioms::Check;
use crate::error::{Error, Result};
use crate::grid::MAX_GROUPS;

/// Tolerance used by [`verify_weight_recursion`].
pub const WEIGHT_TOL: f64 = 1e-12;

/// `p[s][f] = s!(n−s−1)!/n! · f!(m−f−1)!/m!` for `s < n`, `f < m`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightTable {
    n: usize,
    m: usize,
    p: Vec<f64>,
}

impl WeightTable {
    pub fn new(n: usize, m: usize) -> Self {
        assert!(n >= 1 && m >= 1, "weights need n, m >= 1");
        let lf = ln_factorials(n.max(m));
        let row = |len: usize, k: usize| lf[k] + lf[len - k - 1] - lf[len];
        let mut p = Vec::with_capacity(n * m);
        for s in 0..n {
            for f in 0..m {
                p.push((row(n, s) + row(m, f)).exp());
            }
        }
        WeightTable { n, m, p }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Weight of a coalition with `|S| = s`, `|F| = f`.
    #[inline]
    pub fn get(&self, s: usize, f: usize) -> f64 {
        self.p[s * self.m + f]
    }

    /// `Σ_{s,f} C(n−1,s)·C(m−1,f)·p[s][f]`, which is 1 for the closed form.
    pub fn total_mass(&self) -> f64 {
        let lf = ln_factorials(self.n.max(self.m));
        let ln_binom = |a: usize, b: usize| lf[a] - lf[b] - lf[a - b];
        let mut total = 0.0;
        for s in 0..self.n {
            for f in 0..self.m {
                total += (ln_binom(self.n - 1, s) + ln_binom(self.m - 1, f)).exp() * self.get(s, f);
            }
        }
        total
    }
}

/// `ln(k!)` for `k = 0..=max`.
pub(crate) fn ln_factorials(max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=max {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Substitutes the closed form into each family of the weight system and
/// reports the largest absolute residual per family:
///
/// * interior: `sf·p[s−1][f−1] + (n−s)(m−f)·p[s][f] = (n−s)f·p[s][f−1] + s(m−f)·p[s−1][f]`
/// * first row: `(m−f)·p[0][f] = f·p[0][f−1]`
/// * first column: `(n−s)·p[s][0] = s·p[s−1][0]`
/// * terminal: `nm·p[n−1][m−1] = 1`
pub fn verify_weight_recursion(n: usize, m: usize) -> Result<Vec<Check>> {
    if !(1..=MAX_GROUPS).contains(&n) || !(1..=MAX_GROUPS).contains(&m) {
        return Err(Error::Config(format!("weight system needs 1 <= n, m <= {MAX_GROUPS}, got {n}×{m}")));
    }
    let w = WeightTable::new(n, m);
    let p = |s: usize, f: usize| w.get(s, f);
    let (nf, mf) = (n as f64, m as f64);

    let mut interior = 0.0f64;
    for s in 1..n {
        for f in 1..m {
            let (sf, ff) = (s as f64, f as f64);
            let lhs = sf * ff * p(s - 1, f - 1) + (nf - sf) * (mf - ff) * p(s, f);
            let rhs = (nf - sf) * ff * p(s, f - 1) + sf * (mf - ff) * p(s - 1, f);
            interior = interior.max((lhs - rhs).abs());
        }
    }
    let first_row = (1..m).map(|f| ((mf - f as f64) * p(0, f) - f as f64 * p(0, f - 1)).abs()).fold(0.0, f64::max);
    let first_col = (1..n).map(|s| ((nf - s as f64) * p(s, 0) - s as f64 * p(s - 1, 0)).abs()).fold(0.0, f64::max);
    let terminal = (nf * mf * p(n - 1, m - 1) - 1.0).abs();
    let mass = (w.total_mass() - 1.0).abs();

    Ok(vec![
        Check::new("interior_recursion", interior, WEIGHT_TOL),
        Check::new("first_row_boundary", first_row, WEIGHT_TOL),
        Check::new("first_column_boundary", first_col, WEIGHT_TOL),
        Check::new("terminal", terminal, WEIGHT_TOL),
        Check::new("total_mass", mass, WEIGHT_TOL),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(k: usize) -> f64 {
        (1..=k).map(|x| x as f64).product()
    }

    #[test]
    fn single_block_weight_is_one() {
        let w = WeightTable::new(1, 1);
        assert_eq!(w.get(0, 0), 1.0);
        let report = verify_weight_recursion(1, 1).unwrap();
        assert!(report.iter().all(|c| c.pass));
        assert_eq!(report.iter().find(|c| c.check == "terminal").unwrap().max_residual, 0.0);
    }

    #[test]
    fn three_by_three_corner() {
        let w = WeightTable::new(3, 3);
        assert!((w.get(2, 2) - 1.0 / 9.0).abs() < 1e-15);
        // p[0][0] = (0!·2!/3!)² = 1/9 as well; p[1][1] = (1!·1!/3!)² = 1/36
        assert!((w.get(0, 0) - 1.0 / 9.0).abs() < 1e-15);
        assert!((w.get(1, 1) - 1.0 / 36.0).abs() < 1e-15);
        assert!(verify_weight_recursion(3, 3).unwrap().iter().all(|c| c.pass));
    }

    #[test]
    fn matches_direct_factorials() {
        let (n, m) = (8, 5);
        let w = WeightTable::new(n, m);
        for s in 0..n {
            for f in 0..m {
                let direct = factorial(s) * factorial(n - s - 1) / factorial(n) * factorial(f) * factorial(m - f - 1)
                    / factorial(m);
                assert!((w.get(s, f) - direct).abs() <= 1e-15 * direct.max(1e-300) * 10.0);
                assert!(w.get(s, f) > 0.0);
            }
        }
        let report = verify_weight_recursion(n, m).unwrap();
        assert!(report.iter().all(|c| c.max_residual < 1e-12), "{report:?}");
    }

    #[test]
    fn large_grids_stay_finite_and_positive() {
        let w = WeightTable::new(128, 128);
        assert!(w.get(64, 64) > 0.0 && w.get(64, 64).is_finite());
        assert!((128.0 * 128.0 * w.get(127, 127) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_dimensions_rejected() {
        assert!(verify_weight_recursion(0, 3).is_err());
        assert!(verify_weight_recursion(3, MAX_GROUPS + 1).is_err());
    }
}
