//! Block value against the standalone accuracy of each block.

use fragshap::learner::Matrix;
use fragshap::{BlockGrid, Dataset, Error, LearnerSpec, Result, ValueGrid};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockPerformance {
    pub i: usize,
    pub j: usize,
    pub value: f64,
    /// Test accuracy of a model trained on this block alone.
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockTable {
    pub blocks: Vec<BlockPerformance>,
    /// `None` when either column is constant.
    pub spearman: Option<f64>,
}

pub fn block_value_vs_performance(
    train: &Dataset,
    test: &Dataset,
    grid: &BlockGrid,
    values: &ValueGrid,
    learner: &LearnerSpec,
) -> Result<BlockTable> {
    if (values.n, values.m) != (grid.n(), grid.m()) {
        return Err(Error::Dimension(format!(
            "{}×{} values for a {}×{} partition",
            values.n,
            values.m,
            grid.n(),
            grid.m()
        )));
    }
    let all_test: Vec<usize> = (0..test.n_samples()).collect();
    let mut blocks = Vec::with_capacity(grid.n() * grid.m());
    for i in 0..grid.n() {
        let mut rows = grid.row_members(i).to_vec();
        rows.sort_unstable();
        for j in 0..grid.m() {
            let mut cols = grid.col_members(j).to_vec();
            cols.sort_unstable();
            let accuracy = learner.accuracy(
                &Matrix::select(train, &rows, &cols),
                &Matrix::select(test, &all_test, &cols),
                train.class_count(),
            );
            blocks.push(BlockPerformance { i, j, value: values.get(i, j), accuracy });
        }
    }
    let xs: Vec<f64> = blocks.iter().map(|b| b.value).collect();
    let ys: Vec<f64> = blocks.iter().map(|b| b.accuracy).collect();
    Ok(BlockTable { spearman: spearman(&xs, &ys), blocks })
}

/// Ranks starting at 1; ties share their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && xs[idx[end]] == xs[idx[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &idx[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        None
    } else {
        Some(cov / (vx * vy).sqrt())
    }
}
