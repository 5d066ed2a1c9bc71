//! Small deterministic classifiers used inside utility evaluations.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    KnnClassifier,
    LogisticRegression,
    MajorityClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    pub k: usize,
    pub lr_steps: usize,
    pub lr_rate: f64,
    pub standardize: bool,
}

impl Default for LearnerSpec {
    fn default() -> Self {
        LearnerSpec { kind: LearnerKind::KnnClassifier, k: 5, lr_steps: 200, lr_rate: 0.1, standardize: true }
    }
}

/// A dense row-major design matrix with labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub data: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub labels: Vec<usize>,
}

impl Matrix {
    /// Copies `rows × cols` of `source`.
    pub fn select(source: &Dataset, rows: &[usize], cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &r in rows {
            let row = source.row(r);
            data.extend(cols.iter().map(|&c| row[c]));
        }
        Matrix { data, rows: rows.len(), cols: cols.len(), labels: rows.iter().map(|&r| source.labels()[r]).collect() }
    }

    pub fn all(source: &Dataset) -> Self {
        Matrix {
            data: source.values().to_vec(),
            rows: source.n_samples(),
            cols: source.n_features(),
            labels: source.labels().to_vec(),
        }
    }

    #[inline]
    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

impl LearnerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.lr_steps == 0 {
            return Err(Error::Config("lr_steps must be at least 1".into()));
        }
        Ok(())
    }

    /// Trains on `train` and returns plain accuracy on `test`. An empty
    /// training set or zero columns scores 0; a training set holding one
    /// class predicts that class everywhere.
    pub fn accuracy(&self, train: &Matrix, test: &Matrix, class_count: usize) -> f64 {
        if train.rows == 0 || train.cols == 0 || test.rows == 0 {
            return 0.0;
        }
        debug_assert_eq!(train.cols, test.cols);
        let first = train.labels[0];
        let predictions: Vec<usize> = if train.labels.iter().all(|&y| y == first) {
            vec![first; test.rows]
        } else {
            let (train_s, test_s) =
                if self.standardize { standardized(train, test) } else { (train.clone(), test.clone()) };
            match self.kind {
                LearnerKind::MajorityClass => vec![majority(&train.labels, class_count); test.rows],
                LearnerKind::KnnClassifier => knn_predict(&train_s, &test_s, self.k, class_count),
                LearnerKind::LogisticRegression => {
                    logistic_predict(&train_s, &test_s, class_count, self.lr_steps, self.lr_rate)
                }
            }
        };
        let hits = predictions.iter().zip(&test.labels).filter(|(p, y)| p == y).count();
        hits as f64 / test.rows as f64
    }
}

/// Z-scores every column with the training subset's mean and standard
/// deviation; constant columns are only centred.
fn standardized(train: &Matrix, test: &Matrix) -> (Matrix, Matrix) {
    let d = train.cols;
    let mut mean = vec![0.0; d];
    for r in 0..train.rows {
        for (m, v) in mean.iter_mut().zip(train.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= train.rows as f64);
    let mut var = vec![0.0; d];
    for r in 0..train.rows {
        for ((s, v), m) in var.iter_mut().zip(train.row(r)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let scale: Vec<f64> = var
        .iter()
        .map(|s| {
            let sd = (s / train.rows as f64).sqrt();
            if sd < 1e-12 {
                1.0
            } else {
                sd
            }
        })
        .collect();
    let apply = |x: &Matrix| Matrix {
        data: x.data.iter().enumerate().map(|(k, v)| (v - mean[k % d]) / scale[k % d]).collect(),
        ..x.clone()
    };
    (apply(train), apply(test))
}

/// Most frequent label; ties go to the lowest class index.
fn majority(labels: &[usize], class_count: usize) -> usize {
    let mut counts = vec![0usize; class_count.max(1)];
    for &y in labels {
        counts[y] += 1;
    }
    argmax_lowest(&counts)
}

fn argmax_lowest(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &v) in counts.iter().enumerate() {
        if v > counts[best] {
            best = c;
        }
    }
    best
}

/// Majority vote among the `k` nearest training rows (squared Euclidean;
/// distance ties go to the lower row index, vote ties to the lower class).
pub fn knn_predict(train: &Matrix, test: &Matrix, k: usize, class_count: usize) -> Vec<usize> {
    let k = k.min(train.rows);
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(train.rows);
    (0..test.rows)
        .map(|t| {
            let q = test.row(t);
            dist.clear();
            dist.extend((0..train.rows).map(|r| (sq_dist(train.row(r), q), r)));
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < dist.len() {
                dist.select_nth_unstable_by(k - 1, cmp);
            }
            let mut votes = vec![0usize; class_count.max(1)];
            for &(_, r) in &dist[..k] {
                votes[train.labels[r]] += 1;
            }
            argmax_lowest(&votes)
        })
        .collect()
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Multinomial logistic regression by full-batch gradient descent from a
/// zero initialisation.
fn logistic_predict(train: &Matrix, test: &Matrix, class_count: usize, steps: usize, rate: f64) -> Vec<usize> {
    let (d, k) = (train.cols, class_count.max(2));
    // weights[c] = (bias, w_1..w_d)
    let mut w = vec![vec![0.0; d + 1]; k];
    let mut grad = vec![vec![0.0; d + 1]; k];
    let mut probs = vec![0.0; k];
    let inv_n = 1.0 / train.rows as f64;
    for _ in 0..steps {
        grad.iter_mut().for_each(|g| g.iter_mut().for_each(|v| *v = 0.0));
        for r in 0..train.rows {
            let x = train.row(r);
            softmax_into(&w, x, &mut probs);
            for c in 0..k {
                let err = probs[c] - if train.labels[r] == c { 1.0 } else { 0.0 };
                grad[c][0] += err;
                for (g, xv) in grad[c][1..].iter_mut().zip(x) {
                    *g += err * xv;
                }
            }
        }
        for (wc, gc) in w.iter_mut().zip(&grad) {
            for (wv, gv) in wc.iter_mut().zip(gc) {
                *wv -= rate * gv * inv_n;
            }
        }
    }
    (0..test.rows)
        .map(|t| {
            let x = test.row(t);
            let scores: Vec<f64> = w.iter().map(|wc| linear(wc, x)).collect();
            let mut best = 0;
            for c in 1..scores.len().min(class_count.max(1)) {
                if scores[c] > scores[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn linear(wc: &[f64], x: &[f64]) -> f64 {
    wc[0] + wc[1..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
}

fn softmax_into(w: &[Vec<f64>], x: &[f64], out: &mut [f64]) {
    for (o, wc) in out.iter_mut().zip(w) {
        *o = linear(wc, x);
    }
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for o in out.iter_mut() {
        *o = (*o - max).exp();
        z += *o;
    }
    out.iter_mut().for_each(|o| *o /= z);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sign_split() -> (Dataset, Dataset) {
        // class = sign of feature 0; feature 1 is a distractor
        let xs: Vec<f64> = (0..20).map(|k| (k as f64 - 9.5) / 2.0).collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x, (x * 7.3).sin()]).collect();
        let labels = xs.iter().map(|&x| usize::from(x > 0.0)).collect();
        let train = Dataset::from_rows(&rows, labels, 2).unwrap();
        let test_rows = vec![vec![-3.1, 0.2], vec![-0.4, -0.9], vec![0.3, 0.5], vec![4.4, 0.0]];
        let test = Dataset::from_rows(&test_rows, vec![0, 0, 1, 1], 2).unwrap();
        (train, test)
    }

    #[test]
    fn one_nn_separates_sign_split() {
        let (train, test) = sign_split();
        let spec = LearnerSpec { k: 1, standardize: false, ..LearnerSpec::default() };
        // 1-NN on the first column alone: each test point's nearest neighbour
        // shares its sign (nearest training values are ±0.25 away from ±0.3).
        let acc = spec.accuracy(
            &Matrix::select(&train, &(0..20).collect::<Vec<_>>(), &[0]),
            &Matrix::select(&test, &[0, 1, 2, 3], &[0]),
            2,
        );
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn logistic_regression_learns_sign_split() {
        let (train, test) = sign_split();
        let spec = LearnerSpec { kind: LearnerKind::LogisticRegression, ..LearnerSpec::default() };
        assert_eq!(spec.accuracy(&Matrix::all(&train), &Matrix::all(&test), 2), 1.0);
    }

    #[test]
    fn single_class_training_predicts_that_class() {
        let (train, test) = sign_split();
        let only_positive: Vec<usize> = (10..20).collect();
        let spec = LearnerSpec::default();
        let acc = spec.accuracy(&Matrix::select(&train, &only_positive, &[0, 1]), &Matrix::all(&test), 2);
        assert_eq!(acc, 0.5);
    }

    #[test]
    fn majority_ties_go_to_lowest_class() {
        assert_eq!(majority(&[1, 0, 1, 0], 2), 0);
        assert_eq!(majority(&[2, 2, 1], 3), 2);
    }

    #[test]
    fn knn_vote_tie_goes_to_lowest_class() {
        let train = Matrix { data: vec![0.0, 1.0], rows: 2, cols: 1, labels: vec![1, 0] };
        let test = Matrix { data: vec![0.5], rows: 1, cols: 1, labels: vec![0] };
        assert_eq!(knn_predict(&train, &test, 2, 2), vec![0]);
        // distance tie with k=1: lower row index wins
        assert_eq!(knn_predict(&train, &test, 1, 2), vec![1]);
    }

    #[test]
    fn empty_inputs_score_zero() {
        let (train, test) = sign_split();
        let spec = LearnerSpec::default();
        assert_eq!(spec.accuracy(&Matrix::select(&train, &[], &[0]), &Matrix::select(&test, &[0], &[0]), 2), 0.0);
        assert!(LearnerSpec { k: 0, ..spec.clone() }.validate().is_err());
        assert!(LearnerSpec { lr_steps: 0, ..spec }.validate().is_err());
    }
}
