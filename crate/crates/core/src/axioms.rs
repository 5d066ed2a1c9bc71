//! Executable checks of linearity, dummy, symmetry and efficiency for any
//! value computation over synthetic games.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::{SyntheticGame, Utility};
use crate::value::ValueGrid;

/// One line of a verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub check: String,
    pub max_residual: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(check: impl Into<String>, max_residual: f64, tol: f64) -> Self {
        Check { check: check.into(), max_residual, pass: max_residual.is_finite() && max_residual <= tol }
    }
}

/// `count` games with uniform `[0,1)` tables, dimensions drawn from
/// `1..=max_n × 1..=max_m`.
pub fn random_games(count: usize, max_n: usize, max_m: usize, seed: u64) -> Vec<SyntheticGame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=max_n);
            let m = rng.random_range(1..=max_m);
            SyntheticGame::random(n, m, &mut rng)
        })
        .collect()
}

/// Runs the four axiom checks of `psi` over `games`.
///
/// * linearity: each game is paired with an independent random game of the
///   same shape and combined with random scalars;
/// * dummy: a block with constant marginal `c` is planted into each game
///   (once with random `c`, once with `c = 0`);
/// * symmetry: rows and columns are relabelled by random permutations `π1`,
///   `π2`; values must follow, `ψ_ij(g) = ψ_{π1(i)π2(j)}(h)` where
///   `g(S, F) = h(π1(S), π2(F))`;
/// * efficiency: `Σψ = h(N, M)`.
pub fn verify_axioms<P>(psi: P, games: &[SyntheticGame], tol: f64, seed: u64) -> Result<Vec<Check>>
where
    P: Fn(&SyntheticGame) -> Result<ValueGrid>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut linearity, mut dummy, mut symmetry, mut efficiency) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);

    for h in games {
        let (n, m) = (h.n(), h.m());
        let base = psi(h)?;

        efficiency = efficiency.max((base.total() - h.grand()).abs());

        let other = SyntheticGame::random(n, m, &mut rng);
        let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let combined = psi(&SyntheticGame::linear_combination(a, h, b, &other))?;
        let other_psi = psi(&other)?;
        for k in 0..n * m {
            let want = a * base.values[k] + b * other_psi.values[k];
            linearity = linearity.max((combined.values[k] - want).abs());
        }

        let (i, j) = (rng.random_range(0..n), rng.random_range(0..m));
        for c in [rng.random_range(-1.0..1.0), 0.0] {
            let planted = psi(&SyntheticGame::with_planted_dummy(h, i, j, c))?;
            dummy = dummy.max((planted.get(i, j) - c).abs());
        }

        let mut rows: Vec<usize> = (0..n).collect();
        let mut cols: Vec<usize> = (0..m).collect();
        rows.shuffle(&mut rng);
        cols.shuffle(&mut rng);
        let moved = psi(&h.permuted(&rows, &cols))?;
        for i in 0..n {
            for j in 0..m {
                symmetry = symmetry.max((moved.get(i, j) - base.get(rows[i], cols[j])).abs());
            }
        }
    }

    Ok(vec![
        Check::new("linearity", linearity, tol),
        Check::new("dummy", dummy, tol),
        Check::new("symmetry", symmetry, tol),
        Check::new("efficiency", efficiency, tol),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_values;
    use crate::grid::Coalition;

    #[test]
    fn exact_engine_passes_on_two_by_two() {
        let games = random_games(10, 2, 2, 17);
        let report = verify_axioms(|h| exact_values(h), &games, 1e-10, 1).unwrap();
        assert_eq!(report.len(), 4);
        assert!(report.iter().all(|c| c.pass), "{report:?}");
    }

    #[test]
    fn planted_zero_dummy_gets_zero() {
        let base = random_games(1, 3, 3, 2).remove(0);
        let h = SyntheticGame::with_planted_dummy(&base, 0, 0, 0.0);
        let psi = exact_values(&h).unwrap();
        assert!(psi.get(0, 0).abs() < 1e-12);
    }

    #[test]
    fn product_game_efficiency() {
        let h = SyntheticGame::product(2, 2);
        let psi = exact_values(&h).unwrap();
        assert_eq!(psi.total(), 4.0);
        assert_eq!(h.value(Coalition::full(2, 2)), 4.0);
    }

    #[test]
    fn a_broken_value_function_is_caught() {
        // Row-uniform split of h(N, M): efficient but not dummy-respecting.
        let games = random_games(5, 3, 3, 8);
        let naive = |h: &SyntheticGame| {
            let share = h.grand() / (h.n() * h.m()) as f64;
            Ok(ValueGrid::exact(h.n(), h.m(), vec![share; h.n() * h.m()]))
        };
        let report = verify_axioms(naive, &games, 1e-10, 3).unwrap();
        let get = |name: &str| report.iter().find(|c| c.check == name).unwrap().pass;
        assert!(get("efficiency"));
        assert!(!get("dummy"));
    }

    #[test]
    fn check_marks_nan_as_failure() {
        assert!(!Check::new("x", f64::NAN, 1.0).pass);
    }
}
