//! Low-density outlier injection and detection curves.

use std::collections::HashSet;

use fragshap::{BlockGrid, Dataset, Error, Result, ValueGrid};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Gaussian kernel density estimate with bandwidth `σ̂ · n^(-1/5)`.
#[derive(Clone, Debug)]
pub struct Kde {
    points: Vec<f64>,
    bandwidth: f64,
}

impl Kde {
    /// `None` for fewer than two points or a constant column.
    pub fn fit(points: &[f64]) -> Option<Kde> {
        let n = points.len();
        if n < 2 {
            return None;
        }
        let sd = std_dev(points);
        if sd < 1e-12 {
            return None;
        }
        Some(Kde { points: points.to_vec(), bandwidth: sd * (n as f64).powf(-0.2) })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let norm = 1.0 / (self.points.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
        norm * self.points.iter().map(|p| (-0.5 * ((x - p) / h).powi(2)).exp()).sum::<f64>()
    }

    /// The `q`-quantile of the density evaluated at the fitted points.
    pub fn density_threshold(&self, q: f64) -> f64 {
        let mut d: Vec<f64> = self.points.iter().map(|&p| self.density(p)).collect();
        d.sort_by(f64::total_cmp);
        quantile_sorted(&d, q)
    }
}

/// Sample standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Replace values of one feature by paired look-alikes, e.g. `17 ↔ 71`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapDigits {
    pub feature: String,
    pub pairs: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlierParams {
    pub budget_fraction: f64,
    pub density_quantile: f64,
    /// Exact number of cells, overriding `budget_fraction`.
    pub cells: Option<usize>,
    pub seed: u64,
    pub swap_digits: Option<SwapDigits>,
}

impl Default for OutlierParams {
    fn default() -> Self {
        OutlierParams { budget_fraction: 0.02, density_quantile: 0.05, cells: None, seed: 0, swap_digits: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub sample: usize,
    pub feature: usize,
    pub injected: f64,
    pub original: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlierPlan {
    pub budget_fraction: f64,
    pub density_quantile: f64,
    /// Sorted by `(sample, feature)`.
    pub placements: Vec<Placement>,
    pub seed: u64,
    pub skipped_columns: Vec<usize>,
}

impl OutlierPlan {
    pub fn cells(&self) -> HashSet<(usize, usize)> {
        self.placements.iter().map(|p| (p.sample, p.feature)).collect()
    }
}

const MAX_DRAWS: usize = 100_000;

/// Corrupts a sample of training cells. Each chosen cell receives a value
/// drawn uniformly from `[min − 3σ̂, max + 3σ̂]` of its column, redrawn until
/// the column's density estimate at that value falls below the
/// `density_quantile` of the densities at the observed points.
pub fn inject_outliers(train: &Dataset, params: &OutlierParams) -> Result<(Dataset, OutlierPlan)> {
    if !(0.0..=1.0).contains(&params.budget_fraction) {
        return Err(Error::Config(format!("budget fraction {} outside [0, 1]", params.budget_fraction)));
    }
    if !(params.density_quantile > 0.0 && params.density_quantile < 1.0) {
        return Err(Error::Config(format!("density quantile {} outside (0, 1)", params.density_quantile)));
    }
    let (rows, cols) = (train.n_samples(), train.n_features());
    let count = params.cells.unwrap_or_else(|| (params.budget_fraction * (rows * cols) as f64).round() as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut out = train.clone();
    let mut plan = OutlierPlan {
        budget_fraction: count as f64 / (rows * cols) as f64,
        density_quantile: params.density_quantile,
        placements: Vec::with_capacity(count),
        seed: params.seed,
        skipped_columns: Vec::new(),
    };
    if count == 0 {
        return Ok((out, plan));
    }

    if let Some(swap) = &params.swap_digits {
        let c = (0..cols)
            .find(|&c| train.feature_label(c) == swap.feature)
            .ok_or_else(|| Error::Config(format!("no feature named {:?}", swap.feature)))?;
        let partner = |v: f64| {
            swap.pairs.iter().find_map(|&(a, b)| {
                if v == a {
                    Some(b)
                } else if v == b {
                    Some(a)
                } else {
                    None
                }
            })
        };
        let mut candidates: Vec<usize> = (0..rows).filter(|&r| partner(train.get(r, c)).is_some()).collect();
        if candidates.len() < count {
            return Err(Error::Config(format!(
                "only {} cells of {:?} match a swap pair, {count} requested",
                candidates.len(),
                swap.feature
            )));
        }
        candidates.shuffle(&mut rng);
        candidates.truncate(count);
        candidates.sort_unstable();
        for r in candidates {
            let original = train.get(r, c);
            let injected = partner(original).unwrap();
            out.set(r, c, injected);
            plan.placements.push(Placement { sample: r, feature: c, injected, original });
        }
        return Ok((out, plan));
    }

    let kdes: Vec<Option<Kde>> = (0..cols).map(|c| Kde::fit(&train.column(c))).collect();
    for (c, kde) in kdes.iter().enumerate() {
        if kde.is_none() {
            eprintln!("warning: feature {} is constant; no outliers placed in it", train.feature_label(c));
            plan.skipped_columns.push(c);
        }
    }
    let mut candidates: Vec<(usize, usize)> =
        (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).filter(|&(_, c)| kdes[c].is_some()).collect();
    if candidates.len() < count {
        return Err(Error::Config(format!(
            "{count} outlier cells requested but only {} cells are eligible",
            candidates.len()
        )));
    }
    candidates.shuffle(&mut rng);
    candidates.truncate(count);
    candidates.sort_unstable();

    let thresholds: Vec<f64> =
        kdes.iter().map(|k| k.as_ref().map_or(f64::NAN, |k| k.density_threshold(params.density_quantile))).collect();
    for (r, c) in candidates {
        let kde = kdes[c].as_ref().unwrap();
        let column = train.column(c);
        let sd = std_dev(&column);
        let lo = column.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * sd;
        let hi = column.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * sd;
        let injected = (0..MAX_DRAWS)
            .map(|_| rng.random_range(lo..hi))
            .find(|&v| kde.density(v) < thresholds[c])
            .ok_or_else(|| Error::Runtime(format!("no low-density value found for feature {c}")))?;
        plan.placements.push(Placement { sample: r, feature: c, injected, original: train.get(r, c) });
        out.set(r, c, injected);
    }
    Ok((out, plan))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionCurve {
    /// 0, 1, .., total cells.
    pub inspected: Vec<usize>,
    pub detected_fraction: Vec<f64>,
}

impl DetectionCurve {
    /// Recall after inspecting `round(fraction · total)` cells.
    pub fn recall_at(&self, fraction: f64) -> f64 {
        let total = *self.inspected.last().unwrap();
        let k = (fraction * total as f64).round() as usize;
        self.detected_fraction[k.min(total)]
    }
}

/// Cumulative recall of planted cells when inspecting cells in ascending
/// block-value order; blocks expand to their cells in `(sample, feature)`
/// order. An empty plan gives recall 1 everywhere.
pub fn detection_curve(values: &ValueGrid, grid: &BlockGrid, plan: &OutlierPlan) -> Result<DetectionCurve> {
    let ranked = crate::removal::rank_cells(values, grid, crate::removal::Order::Ascending, 0)?;
    let planted = plan.cells();
    let total = ranked.len();
    let mut inspected = Vec::with_capacity(total + 1);
    let mut detected_fraction = Vec::with_capacity(total + 1);
    let mut hits = 0usize;
    inspected.push(0);
    detected_fraction.push(if planted.is_empty() { 1.0 } else { 0.0 });
    for (k, cell) in ranked.iter().enumerate() {
        hits += usize::from(planted.contains(cell));
        inspected.push(k + 1);
        detected_fraction.push(if planted.is_empty() { 1.0 } else { hits as f64 / planted.len() as f64 });
    }
    if !planted.is_empty() && hits != planted.len() {
        return Err(Error::Dimension("plan contains cells outside the partition".into()));
    }
    Ok(DetectionCurve { inspected, detected_fraction })
}
