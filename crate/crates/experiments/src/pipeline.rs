//! End-to-end experiment drivers: outlier detection, budget ablation and
//! runtime benchmarking.

use std::time::Instant;

use fragshap::baseline::{baseline_1d_values, FlattenedGame, Sampling};
use fragshap::knn::{knn_2d_values, KnnConfig, KnnEngine};
use fragshap::mc::{mc_values, permutation_marginals, McConfig, PermutationPair};
use fragshap::{BlockGrid, Dataset, Error, LearnerKind, LearnerSpec, Result, UtilityOracle, ValueGrid};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::outliers::{detection_curve, inject_outliers, DetectionCurve, OutlierParams, OutlierPlan};
use crate::synth::SynthSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlierExperiment {
    pub params: OutlierParams,
    pub knn: KnnConfig,
    /// Flattened 1D baseline settings; skipped when `None`.
    pub baseline: Option<McConfig>,
    pub learner: LearnerSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub plan: OutlierPlan,
    pub knn_values: ValueGrid,
    pub knn_curve: DetectionCurve,
    pub baseline_values: Option<ValueGrid>,
    pub baseline_curve: Option<DetectionCurve>,
}

/// Injects outliers into `train`, values every cell of the corrupted matrix,
/// and scores how early the planted cells surface.
pub fn outlier_experiment(train: &Dataset, test: &Dataset, exp: &OutlierExperiment) -> Result<OutlierReport> {
    let (dirty, plan) = inject_outliers(train, &exp.params)?;
    let grid = BlockGrid::cells(dirty.n_samples(), dirty.n_features())?;
    let engine = KnnEngine::new(&dirty, test, grid.clone(), exp.knn.k)?;
    let knn_values = knn_2d_values(&engine, &exp.knn)?;
    let knn_curve = detection_curve(&knn_values, &grid, &plan)?;
    let (baseline_values, baseline_curve) = match &exp.baseline {
        None => (None, None),
        Some(mc) => {
            let game = FlattenedGame::new(dirty.clone(), test.clone(), grid.clone(), exp.learner.clone())?;
            let values = baseline_1d_values(&game, grid.n(), grid.m(), &Sampling::Permutations(mc.clone()))?;
            let curve = detection_curve(&values, &grid, &plan)?;
            (Some(values), Some(curve))
        }
    };
    Ok(OutlierReport { plan, knn_values, knn_curve, baseline_values, baseline_curve })
}

pub const ABLATION_BUDGETS: [f64; 5] = [0.01, 0.02, 0.05, 0.10, 0.15];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationEntry {
    pub budget: f64,
    pub seed: u64,
    pub curve: DetectionCurve,
}

/// KNN-engine detection curves for every `(budget, seed)` pair, in that
/// nesting order. Pairs run in parallel on the current pool.
pub fn ablation_outlier_budget(
    train: &Dataset,
    test: &Dataset,
    budgets: &[f64],
    seeds: &[u64],
    knn: &KnnConfig,
) -> Result<Vec<AblationEntry>> {
    let jobs: Vec<(f64, u64)> = budgets.iter().flat_map(|&b| seeds.iter().map(move |&s| (b, s))).collect();
    jobs.par_iter()
        .map(|&(budget, seed)| {
            let exp = OutlierExperiment {
                params: OutlierParams { budget_fraction: budget, seed, ..OutlierParams::default() },
                knn: KnnConfig { seed, ..knn.clone() },
                baseline: None,
                learner: LearnerSpec::default(),
            };
            let report = outlier_experiment(train, test, &exp)?;
            Ok(AblationEntry { budget, seed, curve: report.knn_curve })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Exact,
    Mc,
    Knn,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Engine::Exact),
            "mc" => Ok(Engine::Mc),
            "knn" => Ok(Engine::Knn),
            other => Err(Error::Config(format!("unknown engine {other:?} (expected exact, mc or knn)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub cells: usize,
    pub features: usize,
    pub engines: Vec<Engine>,
    /// Budget, tolerance and window shared by the MC and KNN engines.
    pub sampling: McConfig,
    pub k: usize,
    pub data_seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            cells: 1000,
            features: 10,
            engines: vec![Engine::Mc, Engine::Knn],
            sampling: McConfig::default(),
            k: 5,
            data_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub engine: Engine,
    pub cells: usize,
    pub permutations: u64,
    pub converged: bool,
    pub seconds: f64,
    /// Projected seconds for `exact`, which is timed on one permutation pair
    /// and scaled by `n!·m!`.
    pub log10_seconds: f64,
    pub extrapolated: bool,
}

/// Values a synthetic `cells / features × features` grid of single cells with
/// each engine and records wall time.
pub fn bench_runtime(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.features == 0 || cfg.cells < cfg.features {
        return Err(Error::Config(format!("cannot lay out {} cells over {} features", cfg.cells, cfg.features)));
    }
    let samples = cfg.cells / cfg.features;
    let (train, test) = SynthSpec {
        samples,
        features: cfg.features,
        informative: cfg.features.div_ceil(2),
        seed: cfg.data_seed,
        ..SynthSpec::default()
    }
    .generate()?;
    let grid = BlockGrid::cells(samples, cfg.features)?;
    let learner = LearnerSpec { kind: LearnerKind::KnnClassifier, k: cfg.k, ..LearnerSpec::default() };
    let cells = samples * cfg.features;
    let mut rows = Vec::new();
    for &engine in &cfg.engines {
        let row = match engine {
            Engine::Mc => {
                let oracle = UtilityOracle::new(train.clone(), test.clone(), grid.clone(), learner.clone())?;
                let start = Instant::now();
                let v = mc_values(&oracle, &cfg.sampling)?;
                timed(engine, cells, v.permutations_used, v.converged, start.elapsed().as_secs_f64(), false)
            }
            Engine::Knn => {
                let start = Instant::now();
                let knn = KnnEngine::new(&train, &test, grid.clone(), cfg.k)?;
                let v = knn_2d_values(
                    &knn,
                    &KnnConfig {
                        k: cfg.k,
                        feature_permutations: cfg.sampling.budget,
                        epsilon: cfg.sampling.epsilon,
                        window: cfg.sampling.window,
                        seed: cfg.sampling.seed,
                        workers: cfg.sampling.workers,
                        progress: cfg.sampling.progress,
                    },
                )?;
                timed(engine, cells, v.permutations_used, v.converged, start.elapsed().as_secs_f64(), false)
            }
            Engine::Exact => {
                let oracle = UtilityOracle::new(train.clone(), test.clone(), grid.clone(), learner.clone())?;
                let pair = PermutationPair::generate(grid.n(), grid.m(), cfg.sampling.seed, 0);
                let start = Instant::now();
                permutation_marginals(&oracle, &pair.rows, &pair.cols);
                let one = start.elapsed().as_secs_f64();
                let log10 = one.max(1e-12).log10() + log10_factorial(grid.n()) + log10_factorial(grid.m());
                BenchRow {
                    engine,
                    cells,
                    permutations: 1,
                    converged: false,
                    seconds: 10f64.powf(log10),
                    log10_seconds: log10,
                    extrapolated: true,
                }
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

fn timed(
    engine: Engine,
    cells: usize,
    permutations: u64,
    converged: bool,
    seconds: f64,
    extrapolated: bool,
) -> BenchRow {
    BenchRow {
        engine,
        cells,
        permutations,
        converged,
        seconds,
        log10_seconds: seconds.max(1e-12).log10(),
        extrapolated,
    }
}

pub fn log10_factorial(k: usize) -> f64 {
    (2..=k).map(|x| (x as f64).log10()).sum()
}
