use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Mc,
    Knn,
    Baseline1d,
}

/// Axis summed out by [`ValueGrid::reduce_to_1d`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    /// Sum over sample groups: one value per feature group.
    Rows,
    /// Sum over feature groups: one value per sample group.
    Cols,
}

/// Block values `ψ` of an `n × m` game, row-major, with estimator metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueGrid {
    pub n: usize,
    pub m: usize,
    pub values: Vec<f64>,
    pub method: Method,
    pub permutations_used: u64,
    pub seed: u64,
    pub converged: bool,
}

/// The JSON sidecar written next to a values CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueMeta {
    pub n: usize,
    pub m: usize,
    pub method: Method,
    pub permutations_used: u64,
    pub seed: u64,
    pub converged: bool,
    pub total: f64,
}

impl ValueGrid {
    pub fn exact(n: usize, m: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n * m);
        ValueGrid { n, m, values, method: Method::Exact, permutations_used: 0, seed: 0, converged: true }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn reduce_to_1d(&self, axis: Axis) -> Vec<f64> {
        match axis {
            Axis::Cols => (0..self.n).map(|i| self.row(i).iter().sum()).collect(),
            Axis::Rows => (0..self.m).map(|j| (0..self.n).map(|i| self.get(i, j)).sum()).collect(),
        }
    }

    /// Per-sample-group values `ψ_i· = Σ_j ψ_ij`.
    pub fn sample_values(&self) -> Vec<f64> {
        self.reduce_to_1d(Axis::Cols)
    }

    /// Per-feature-group values `ψ_·j = Σ_i ψ_ij`.
    pub fn feature_values(&self) -> Vec<f64> {
        self.reduce_to_1d(Axis::Rows)
    }

    pub fn max_abs_diff(&self, other: &ValueGrid) -> f64 {
        assert_eq!((self.n, self.m), (other.n, other.m));
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Cells `(i, j)` sorted by ascending value; ties by `(i, j)`.
    pub fn ascending_cells(&self) -> Vec<(usize, usize)> {
        let mut cells: Vec<(usize, usize)> = (0..self.n).flat_map(|i| (0..self.m).map(move |j| (i, j))).collect();
        cells.sort_by(|&(a, b), &(c, d)| self.get(a, b).total_cmp(&self.get(c, d)).then((a, b).cmp(&(c, d))));
        cells
    }

    pub fn meta(&self) -> ValueMeta {
        ValueMeta {
            n: self.n,
            m: self.m,
            method: self.method,
            permutations_used: self.permutations_used,
            seed: self.seed,
            converged: self.converged,
            total: self.total(),
        }
    }

    /// CSV matrix: header of feature-group labels, first column of
    /// sample-group labels.
    pub fn to_csv(&self, row_labels: &[String], col_labels: &[String]) -> Result<String> {
        if row_labels.len() != self.n || col_labels.len() != self.m {
            return Err(Error::Dimension(format!(
                "{} row / {} column labels for a {}×{} value grid",
                row_labels.len(),
                col_labels.len(),
                self.n,
                self.m
            )));
        }
        let mut out = String::from("group");
        for label in col_labels {
            write!(out, ",{label}").unwrap();
        }
        out.push('\n');
        for (i, label) in row_labels.iter().enumerate() {
            out.push_str(label);
            for v in self.row(i) {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses the matrix part of [`ValueGrid::to_csv`] output.
    pub fn matrix_from_csv(text: &str) -> Result<Vec<Vec<f64>>> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let row = record
                .iter()
                .skip(1)
                .map(|s| s.parse::<f64>().map_err(|e| Error::Dataset(format!("bad value {s:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> ValueGrid {
        ValueGrid::exact(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    }

    #[test]
    fn reductions() {
        let g = grid();
        assert_eq!(g.reduce_to_1d(Axis::Cols), vec![6.0, 15.0]);
        assert_eq!(g.reduce_to_1d(Axis::Rows), vec![5.0, 7.0, 9.0]);
        assert_eq!(g.total(), 21.0);
    }

    #[test]
    fn csv_layout_and_parse() {
        let g = grid();
        let rows = vec!["s0".to_string(), "s1".to_string()];
        let cols = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let text = g.to_csv(&rows, &cols).unwrap();
        assert_eq!(text, "group,a,b,c\ns0,1,2,3\ns1,4,5,6\n");
        assert_eq!(ValueGrid::matrix_from_csv(&text).unwrap()[1], vec![4.0, 5.0, 6.0]);
        assert!(g.to_csv(&rows[..1], &cols).is_err());
    }

    #[test]
    fn ascending_cells_break_ties_by_index() {
        let g = ValueGrid::exact(2, 2, vec![0.5, 0.1, 0.1, -1.0]);
        assert_eq!(g.ascending_cells(), vec![(1, 1), (0, 1), (1, 0), (0, 0)]);
    }
}
