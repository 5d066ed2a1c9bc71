//! Value-ordered cell removal with column-mean refill.

use fragshap::learner::Matrix;
use fragshap::{BlockGrid, Dataset, Error, LearnerSpec, Result, ValueGrid};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    Ascending,
    Descending,
    Random,
}

impl std::str::FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ascending" => Ok(Order::Ascending),
            "descending" => Ok(Order::Descending),
            "random" => Ok(Order::Random),
            other => Err(Error::Config(format!("unknown removal order {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemovalCurve {
    pub order: Order,
    pub batch: usize,
    /// Cumulative cells removed at each point, starting at 0.
    pub removed: Vec<usize>,
    pub accuracies: Vec<f64>,
}

impl RemovalCurve {
    /// Accuracy at the first point with at least `fraction` of the ranked
    /// cells removed.
    pub fn accuracy_at(&self, fraction: f64) -> f64 {
        let total = *self.removed.last().unwrap_or(&0) as f64;
        let k =
            self.removed.iter().position(|&r| r as f64 >= fraction * total - 1e-9).unwrap_or(self.removed.len() - 1);
        self.accuracies[k]
    }
}

/// Raw `(sample, feature)` cells of block `(i, j)`, sorted.
pub fn block_cells(grid: &BlockGrid, i: usize, j: usize) -> Vec<(usize, usize)> {
    let mut rows = grid.row_members(i).to_vec();
    let mut cols = grid.col_members(j).to_vec();
    rows.sort_unstable();
    cols.sort_unstable();
    rows.iter().flat_map(|&r| cols.iter().map(move |&c| (r, c))).collect()
}

/// Raw cells ordered by their block's value. Cells of one block stay
/// together; value ties break by block index. `Random` ignores the values.
pub fn rank_cells(values: &ValueGrid, grid: &BlockGrid, order: Order, seed: u64) -> Result<Vec<(usize, usize)>> {
    if (values.n, values.m) != (grid.n(), grid.m()) {
        return Err(Error::Dimension(format!(
            "{}×{} values for a {}×{} partition",
            values.n,
            values.m,
            grid.n(),
            grid.m()
        )));
    }
    let mut blocks = values.ascending_cells();
    match order {
        Order::Ascending => {}
        Order::Descending => {
            blocks.sort_by(|&(a, b), &(c, d)| values.get(c, d).total_cmp(&values.get(a, b)).then((a, b).cmp(&(c, d))))
        }
        Order::Random => {
            blocks.sort_unstable();
            blocks.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
    }
    Ok(blocks.into_iter().flat_map(|(i, j)| block_cells(grid, i, j)).collect())
}

pub fn accuracy(learner: &LearnerSpec, train: &Dataset, test: &Dataset) -> f64 {
    learner.accuracy(&Matrix::all(train), &Matrix::all(test), train.class_count())
}

/// Removes `ranked` cells `batch` at a time. A removed cell is overwritten by
/// the mean of its column's not-yet-removed cells, or by the original column
/// mean once the whole column is gone. Test accuracy is recorded before the
/// first batch and after each one.
pub fn remove_cells(
    train: &Dataset,
    test: &Dataset,
    ranked: &[(usize, usize)],
    batch: usize,
    order: Order,
    learner: &LearnerSpec,
) -> Result<RemovalCurve> {
    if batch == 0 {
        return Err(Error::Config("removal batch must be at least 1".into()));
    }
    let (rows, cols) = (train.n_samples(), train.n_features());
    let mut seen = vec![false; rows * cols];
    for &(r, c) in ranked {
        if r >= rows || c >= cols {
            return Err(Error::Dimension(format!("cell ({r}, {c}) outside a {rows}×{cols} matrix")));
        }
        if std::mem::replace(&mut seen[r * cols + c], true) {
            return Err(Error::Config(format!("cell ({r}, {c}) ranked twice")));
        }
    }

    let mut remover = Remover::new(train);
    let mut curve = RemovalCurve { order, batch, removed: vec![0], accuracies: vec![accuracy(learner, train, test)] };
    for chunk in ranked.chunks(batch) {
        remover.remove(chunk);
        curve.removed.push(curve.removed.last().unwrap() + chunk.len());
        curve.accuracies.push(accuracy(learner, remover.data(), test));
    }
    Ok(curve)
}

/// Incremental column-mean refill over an untouched copy of the original.
pub struct Remover<'a> {
    original: &'a Dataset,
    work: Dataset,
    gone: Vec<bool>,
    full_means: Vec<f64>,
}

impl<'a> Remover<'a> {
    pub fn new(original: &'a Dataset) -> Self {
        Remover {
            original,
            work: original.clone(),
            gone: vec![false; original.n_samples() * original.n_features()],
            full_means: original.column_means(),
        }
    }

    pub fn data(&self) -> &Dataset {
        &self.work
    }

    pub fn remove(&mut self, chunk: &[(usize, usize)]) {
        let (rows, cols) = (self.original.n_samples(), self.original.n_features());
        for &(r, c) in chunk {
            self.gone[r * cols + c] = true;
        }
        let mut touched: Vec<usize> = chunk.iter().map(|&(_, c)| c).collect();
        touched.sort_unstable();
        touched.dedup();
        for c in touched {
            let kept: Vec<f64> =
                (0..rows).filter(|&r| !self.gone[r * cols + c]).map(|r| self.original.get(r, c)).collect();
            let fill = if kept.is_empty() { self.full_means[c] } else { kept.iter().sum::<f64>() / kept.len() as f64 };
            for &(r, cc) in chunk {
                if cc == c {
                    self.work.set(r, c, fill);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fragshap::LearnerKind;
    use proptest::prelude::*;

    fn one_nn() -> LearnerSpec {
        LearnerSpec { kind: LearnerKind::KnnClassifier, k: 1, standardize: false, ..LearnerSpec::default() }
    }

    #[test]
    fn refill_uses_remaining_column_mean() {
        let train = Dataset::from_rows(&[vec![1.0], vec![2.0], vec![3.0]], vec![0, 1, 1], 2).unwrap();
        let mut remover = Remover::new(&train);
        remover.remove(&[(0, 0)]);
        assert_eq!(remover.data().column(0), vec![2.5, 2.0, 3.0]);
        remover.remove(&[(2, 0)]);
        assert_eq!(remover.data().column(0), vec![2.5, 2.0, 2.0]);
        remover.remove(&[(1, 0)]);
        assert_eq!(remover.data().column(0), vec![2.5, 2.0, 2.0]);
    }

    #[test]
    fn removing_nothing_keeps_baseline_accuracy() {
        let train = Dataset::from_rows(&[vec![1.0], vec![2.0], vec![3.0]], vec![0, 1, 1], 2).unwrap();
        let test = Dataset::from_rows(&[vec![2.9]], vec![1], 2).unwrap();
        let curve = remove_cells(&train, &test, &[], 1, Order::Ascending, &one_nn()).unwrap();
        assert_eq!(curve.accuracies, vec![accuracy(&one_nn(), &train, &test)]);
    }

    #[test]
    fn fully_removed_column_falls_back_to_original_mean() {
        let train = Dataset::from_rows(&[vec![1.0, 0.0], vec![3.0, 5.0]], vec![0, 1], 2).unwrap();
        let test = Dataset::from_rows(&[vec![3.0, 5.0]], vec![1], 2).unwrap();
        let curve = remove_cells(&train, &test, &[(0, 0), (1, 0)], 2, Order::Descending, &one_nn()).unwrap();
        // both rows now share x0 = 2, so x1 decides and row 1 still wins
        assert_eq!(curve.accuracies, vec![1.0, 1.0]);
    }

    #[test]
    fn corrupted_cell_removed_first_restores_prediction() {
        // Row 0 (class 0) had x0 = 0 but a bad x0 = 10 puts it on top of the
        // class-1 test point; refilling that cell lets row 1 win again.
        let train = Dataset::from_rows(
            &[vec![10.0, 0.1], vec![10.2, 0.5], vec![0.0, 0.0], vec![0.1, 0.2]],
            vec![0, 1, 0, 0],
            2,
        )
        .unwrap();
        let test = Dataset::from_rows(&[vec![10.0, 0.0]], vec![1], 2).unwrap();
        let ranked: Vec<(usize, usize)> = vec![(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1), (3, 0), (3, 1)];
        let curve = remove_cells(&train, &test, &ranked, 1, Order::Ascending, &one_nn()).unwrap();
        assert_eq!(curve.accuracies[0], 0.0);
        assert_eq!(curve.accuracies[1], 1.0);
    }

    #[test]
    fn rejects_duplicates_and_zero_batch() {
        let train = Dataset::from_rows(&[vec![1.0], vec![2.0]], vec![0, 1], 2).unwrap();
        assert!(remove_cells(&train, &train, &[(0, 0), (0, 0)], 1, Order::Random, &one_nn()).is_err());
        assert!(remove_cells(&train, &train, &[(0, 0)], 0, Order::Random, &one_nn()).is_err());
    }

    #[test]
    fn ranking_expands_blocks_and_orders_by_value() {
        let grid = BlockGrid::contiguous(4, 2, 2, 1).unwrap();
        let values = ValueGrid::exact(2, 1, vec![0.5, -0.5]);
        let asc = rank_cells(&values, &grid, Order::Ascending, 0).unwrap();
        assert_eq!(asc, vec![(2, 0), (2, 1), (3, 0), (3, 1), (0, 0), (0, 1), (1, 0), (1, 1)]);
        let desc = rank_cells(&values, &grid, Order::Descending, 0).unwrap();
        assert_eq!(&desc[..4], &[(0, 0), (0, 1), (1, 0), (1, 1)]);
        let mut rnd = rank_cells(&values, &grid, Order::Random, 3).unwrap();
        rnd.sort_unstable();
        let mut all = asc.clone();
        all.sort_unstable();
        assert_eq!(rnd, all);
    }

    proptest! {
        #[test]
        fn curve_length_matches_batches(rows in 1usize..8, cols in 1usize..4, batch in 1usize..6, seed in 0u64..50) {
            let data: Vec<Vec<f64>> = (0..rows).map(|r| (0..cols).map(|c| (r * 7 + c * 3) as f64 % 5.0).collect()).collect();
            let labels = (0..rows).map(|r| r % 2).collect();
            let train = Dataset::from_rows(&data, labels, 2).unwrap();
            let grid = BlockGrid::cells(rows, cols).unwrap();
            let values = ValueGrid::exact(rows, cols, (0..rows * cols).map(|k| (k as f64 * 0.37).sin()).collect());
            for order in [Order::Ascending, Order::Descending, Order::Random] {
                let ranked = rank_cells(&values, &grid, order, seed).unwrap();
                let curve = remove_cells(&train, &train, &ranked, batch, order, &one_nn()).unwrap();
                let total = rows * cols;
                prop_assert_eq!(curve.accuracies.len(), total.div_ceil(batch) + 1);
                prop_assert_eq!(*curve.removed.last().unwrap(), total);
                prop_assert!(curve.removed.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }
}
