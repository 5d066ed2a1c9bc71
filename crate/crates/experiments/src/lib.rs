//! Experiments on block values: cell removal curves, outlier localisation,
//! outlier-budget ablation, sub-matrix value against standalone accuracy, and
//! engine runtime comparison.

pub mod blocks;
pub mod outliers;
pub mod pipeline;
pub mod removal;
pub mod report;
pub mod synth;

pub use blocks::{block_value_vs_performance, spearman, BlockTable};
pub use outliers::{detection_curve, inject_outliers, DetectionCurve, OutlierParams, OutlierPlan};
pub use pipeline::{
    ablation_outlier_budget, bench_runtime, outlier_experiment, BenchConfig, Engine, OutlierExperiment,
};
pub use removal::{rank_cells, remove_cells, Order, RemovalCurve};
pub use synth::SynthSpec;
