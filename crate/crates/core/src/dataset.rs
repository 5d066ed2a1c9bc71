//! In-memory labelled feature matrices and CSV ingestion.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Row-major feature matrix with one class label per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_samples: usize,
    n_features: usize,
    labels: Vec<usize>,
    pub feature_names: Option<Vec<String>>,
    class_count: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, n_features: usize, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::Dataset("dataset has no feature columns".into()));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::Dataset(format!(
                "{} values do not form {} rows of {} features",
                features.len(),
                labels.len(),
                n_features
            )));
        }
        if let Some(bad) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Dataset(format!(
                "non-finite value at row {}, column {}",
                bad / n_features,
                bad % n_features
            )));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= class_count) {
            return Err(Error::Dataset(format!("label {y} outside 0..{class_count}")));
        }
        Ok(Dataset { n_samples: labels.len(), features, n_features, labels, feature_names: None, class_count })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>, class_count: usize) -> Result<Self> {
        let n_features = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_features) {
            return Err(Error::Dataset("ragged rows".into()));
        }
        Dataset::new(rows.concat(), n_features, labels, class_count)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features {
            return Err(Error::Dataset(format!("{} names for {} features", names.len(), self.n_features)));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.features
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.features[row * self.n_features + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.features[row * self.n_features + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.features[row * self.n_features..(row + 1) * self.n_features]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_samples).map(|r| self.get(r, col)).collect()
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_features];
        for r in 0..self.n_samples {
            for (s, v) in sums.iter_mut().zip(self.row(r)) {
                *s += v;
            }
        }
        sums.iter().map(|s| s / self.n_samples.max(1) as f64).collect()
    }

    pub fn feature_label(&self, col: usize) -> String {
        match &self.feature_names {
            Some(names) => names[col].clone(),
            None => format!("f{col}"),
        }
    }

    /// Deterministic shuffled split into `(train, test)`.
    pub fn split(&self, test_frac: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&test_frac) {
            return Err(Error::Config(format!("test fraction must lie in [0, 1), got {test_frac}")));
        }
        let mut order: Vec<usize> = (0..self.n_samples).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_test = ((self.n_samples as f64) * test_frac).round() as usize;
        if n_test == 0 || n_test == self.n_samples {
            return Err(Error::Config(format!(
                "test fraction {test_frac} leaves an empty side of {} samples",
                self.n_samples
            )));
        }
        let (test_idx, train_idx) = order.split_at(n_test);
        let mut train_idx = train_idx.to_vec();
        let mut test_idx = test_idx.to_vec();
        train_idx.sort_unstable();
        test_idx.sort_unstable();
        Ok((self.take_rows(&train_idx), self.take_rows(&test_idx)))
    }

    pub fn take_rows(&self, rows: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(rows.len() * self.n_features);
        for &r in rows {
            features.extend_from_slice(self.row(r));
        }
        Dataset {
            features,
            n_samples: rows.len(),
            n_features: self.n_features,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            feature_names: self.feature_names.clone(),
            class_count: self.class_count,
        }
    }

    /// Writes the dataset as CSV with a trailing `label` column.
    pub fn to_csv(&self) -> String {
        let mut out = (0..self.n_features).map(|c| self.feature_label(c)).collect::<Vec<_>>().join(",");
        out.push_str(",label\n");
        for r in 0..self.n_samples {
            for v in self.row(r) {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{}\n", self.labels[r]));
        }
        out
    }
}

/// CSV ingestion options.
#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub label_col: String,
    /// Fill non-numeric or empty feature cells with the column mean instead of failing.
    pub impute_mean: bool,
}

struct RawTable {
    names: Vec<String>,
    cells: Vec<Vec<Option<f64>>>,
    labels: Vec<String>,
}

fn read_raw(path: &Path, opts: &CsvOptions) -> Result<RawTable> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
    let headers = reader.headers()?.clone();
    let label_at = headers
        .iter()
        .position(|h| h.trim() == opts.label_col)
        .ok_or_else(|| Error::Dataset(format!("{}: no column named {:?}", path.display(), opts.label_col)))?;
    let names: Vec<String> =
        headers.iter().enumerate().filter(|&(k, _)| k != label_at).map(|(_, h)| h.trim().to_string()).collect();
    let mut cells = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(names.len());
        for (k, field) in record.iter().enumerate() {
            if k == label_at {
                labels.push(field.trim().to_string());
                continue;
            }
            match field.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(Some(v)),
                _ if opts.impute_mean => row.push(None),
                _ => {
                    return Err(Error::Dataset(format!(
                        "{}: row {}, column {:?}: non-numeric value {:?} (pass --impute-mean to fill)",
                        path.display(),
                        line + 1,
                        names[row.len()],
                        field
                    )))
                }
            }
        }
        cells.push(row);
    }
    if cells.is_empty() {
        return Err(Error::Dataset(format!("{}: no data rows", path.display())));
    }
    Ok(RawTable { names, cells, labels })
}

/// Label vocabulary: numeric labels sort numerically, otherwise lexically.
fn vocabulary<'a>(labels: impl Iterator<Item = &'a String>) -> Vec<String> {
    let set: BTreeSet<&String> = labels.collect();
    let mut vocab: Vec<String> = set.into_iter().cloned().collect();
    if vocab.iter().all(|l| l.parse::<f64>().is_ok()) {
        vocab.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    }
    vocab
}

fn finish(table: RawTable, vocab: &[String], fill: &[f64]) -> Result<Dataset> {
    let n_features = table.names.len();
    let features: Vec<f64> =
        table.cells.iter().flat_map(|row| row.iter().enumerate().map(|(c, v)| v.unwrap_or(fill[c]))).collect();
    let labels = table.labels.iter().map(|l| vocab.iter().position(|v| v == l).expect("label in vocabulary")).collect();
    Dataset::new(features, n_features, labels, vocab.len())?.with_feature_names(table.names)
}

fn column_fill(tables: &[&RawTable]) -> Vec<f64> {
    let width = tables[0].names.len();
    (0..width)
        .map(|c| {
            let present: Vec<f64> = tables.iter().flat_map(|t| t.cells.iter().filter_map(move |r| r[c])).collect();
            if present.is_empty() {
                0.0
            } else {
                present.iter().sum::<f64>() / present.len() as f64
            }
        })
        .collect()
}

pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let table = read_raw(path.as_ref(), opts)?;
    let vocab = vocabulary(table.labels.iter());
    let fill = column_fill(&[&table]);
    finish(table, &vocab, &fill)
}

/// Loads separate train and test files with a shared label vocabulary.
/// Imputation means come from the training file.
pub fn load_csv_pair(train: impl AsRef<Path>, test: impl AsRef<Path>, opts: &CsvOptions) -> Result<(Dataset, Dataset)> {
    let train = read_raw(train.as_ref(), opts)?;
    let test = read_raw(test.as_ref(), opts)?;
    if train.names != test.names {
        return Err(Error::Dimension("train and test files have different feature columns".into()));
    }
    let vocab = vocabulary(train.labels.iter().chain(&test.labels));
    let fill = column_fill(&[&train]);
    Ok((finish(train, &vocab, &fill)?, finish(test, &vocab, &fill)?))
}
