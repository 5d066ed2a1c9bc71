//! The `fragshap` command line: dataset and partition loading, valuation
//! engines, verifiers and experiments, each writing results plus the resolved
//! configuration and timing into an output directory.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fragshap::axioms::{random_games, verify_axioms, Check};
use fragshap::baseline::{baseline_1d_values, FlattenedGame, Sampling};
use fragshap::dataset::{load_csv, load_csv_pair, CsvOptions};
use fragshap::exact::{exact_values_with_cap, stratified_values};
use fragshap::knn::{knn_2d_values, KnnConfig, KnnEngine};
use fragshap::mc::{exhaustive_values, mc_values, McConfig};
use fragshap::weights::verify_weight_recursion;
use fragshap::{BlockGrid, Dataset, Error, LearnerKind, LearnerSpec, Result, SyntheticGame, UtilityOracle, ValueGrid};
use fragshap_experiments::outliers::SwapDigits;
use fragshap_experiments::pipeline::{OutlierReport, ABLATION_BUDGETS};
use fragshap_experiments::report::{detection_csv, removal_csv, to_json};
use fragshap_experiments::{
    ablation_outlier_budget, bench_runtime, block_value_vs_performance, outlier_experiment, rank_cells, remove_cells,
    BenchConfig, Engine, Order, OutlierExperiment, OutlierParams, SynthSpec,
};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "fragshap", version, about = "Block-level Shapley values for tabular training data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Exact values by coalition enumeration (small grids only).
    ValueExact(ValueExactArgs),
    /// Monte Carlo values from sampled row/column permutation pairs.
    ValueMc(ValueMcArgs),
    /// Nearest-neighbour surrogate values from sampled feature permutations.
    ValueKnn(ValueKnnArgs),
    /// Flattened one-dimensional baseline over all blocks.
    #[command(name = "value-1d")]
    Value1d(ValueMcArgs),
    /// Check linearity, dummy, symmetry and efficiency on random games.
    VerifyAxioms(VerifyAxiomsArgs),
    /// Check the closed-form weights against their recursive system.
    VerifyWeights(VerifyWeightsArgs),
    /// Accuracy as cells are removed in value order.
    ExpRemove(ExpRemoveArgs),
    /// Inject low-density outliers and measure how early they are found.
    ExpOutliers(ExpOutliersArgs),
    /// Outlier detection across injection budgets and seeds.
    ExpAblation(ExpAblationArgs),
    /// Block value against the accuracy of a model trained on that block.
    ExpBlocks(ExpBlocksArgs),
    /// Wall time of each engine on a synthetic grid of single cells.
    BenchRuntime(BenchArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::ValueExact(_) => "value-exact",
            Command::ValueMc(_) => "value-mc",
            Command::ValueKnn(_) => "value-knn",
            Command::Value1d(_) => "value-1d",
            Command::VerifyAxioms(_) => "verify-axioms",
            Command::VerifyWeights(_) => "verify-weights",
            Command::ExpRemove(_) => "exp-remove",
            Command::ExpOutliers(_) => "exp-outliers",
            Command::ExpAblation(_) => "exp-ablation",
            Command::ExpBlocks(_) => "exp-blocks",
            Command::BenchRuntime(_) => "bench-runtime",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::ValueExact(a) => &a.common,
            Command::ValueMc(a) | Command::Value1d(a) => &a.common,
            Command::ValueKnn(a) => &a.common,
            Command::VerifyAxioms(a) => &a.common,
            Command::VerifyWeights(a) => &a.common,
            Command::ExpRemove(a) => &a.common,
            Command::ExpOutliers(a) => &a.common,
            Command::ExpAblation(a) => &a.common,
            Command::ExpBlocks(a) => &a.common,
            Command::BenchRuntime(a) => &a.common,
        }
    }
}

/// Options every subcommand takes. Only `seed` can change results, so the
/// others are left out of the written config.
#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Directory for results, config.json and timing.json.
    #[arg(long, default_value = "out")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Master seed.
    #[arg(long, env = "FRAGSHAP_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses all available cores. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    #[serde(skip)]
    pub workers: usize,
    /// No progress lines on standard error and no summary on standard output.
    #[arg(long)]
    #[serde(skip)]
    pub quiet: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DataArgs {
    /// Training CSV (requires --test).
    #[arg(long, requires = "test", conflicts_with_all = ["data", "synthetic"])]
    pub train: Option<PathBuf>,
    /// Test CSV.
    #[arg(long, requires = "train")]
    pub test: Option<PathBuf>,
    /// Single CSV split into train and test by --test-frac.
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 0.3)]
    pub test_frac: f64,
    /// Name of the label column.
    #[arg(long, default_value = "label")]
    pub label_col: String,
    /// Fill empty or non-numeric cells with the training column mean.
    #[arg(long)]
    pub impute_mean: bool,
    /// Use the built-in two-class Gaussian data instead of files.
    #[arg(long)]
    pub synthetic: bool,
    #[arg(long, default_value_t = 200)]
    pub synth_samples: usize,
    #[arg(long, default_value_t = 10)]
    pub synth_features: usize,
    #[arg(long, default_value_t = 100)]
    pub synth_test: usize,
    #[arg(long, default_value_t = 2.5)]
    pub synth_separation: f64,
    /// Seed of the synthetic data; defaults to --seed.
    #[arg(long)]
    pub synth_seed: Option<u64>,
}

impl DataArgs {
    pub fn load(&self, seed: u64) -> Result<(Dataset, Dataset)> {
        let opts = CsvOptions { label_col: self.label_col.clone(), impute_mean: self.impute_mean };
        match (&self.train, &self.test, &self.data) {
            (Some(train), Some(test), None) => load_csv_pair(train, test, &opts),
            (None, None, Some(data)) => load_csv(data, &opts)?.split(self.test_frac, seed),
            (None, None, None) if self.synthetic => SynthSpec {
                samples: self.synth_samples,
                features: self.synth_features,
                informative: self.synth_features,
                test: self.synth_test,
                separation: self.synth_separation,
                seed: self.synth_seed.unwrap_or(seed),
            }
            .generate(),
            _ => Err(Error::Config("no dataset: pass --train and --test, --data, or --synthetic".into())),
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PartitionArgs {
    /// `cells`, `NxM` for contiguous even groups, or a JSON partition file.
    #[arg(long, default_value = "cells")]
    pub partition: String,
}

impl PartitionArgs {
    pub fn grid(&self, train: &Dataset) -> Result<BlockGrid> {
        let (rows, cols) = (train.n_samples(), train.n_features());
        if let Some((n, m)) = self.partition.split_once('x') {
            if let (Ok(n), Ok(m)) = (n.parse(), m.parse()) {
                return BlockGrid::contiguous(rows, cols, n, m);
            }
        }
        BlockGrid::load(&self.partition, rows, cols)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerChoice {
    Knn,
    Logreg,
    Majority,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LearnerArgs {
    /// Model retrained on every coalition.
    #[arg(long, value_enum, default_value_t = LearnerChoice::Knn)]
    pub learner: LearnerChoice,
    /// Neighbours for the knn learner.
    #[arg(long, default_value_t = 5)]
    pub learner_k: usize,
    #[arg(long, default_value_t = 200)]
    pub lr_steps: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr_rate: f64,
}

impl LearnerArgs {
    pub fn spec(&self) -> LearnerSpec {
        LearnerSpec {
            kind: match self.learner {
                LearnerChoice::Knn => LearnerKind::KnnClassifier,
                LearnerChoice::Logreg => LearnerKind::LogisticRegression,
                LearnerChoice::Majority => LearnerKind::MajorityClass,
            },
            k: self.learner_k,
            lr_steps: self.lr_steps,
            lr_rate: self.lr_rate,
            standardize: true,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SamplingArgs {
    /// Maximum permutations.
    #[arg(long, default_value_t = 500)]
    pub budget: u64,
    /// Relative step size below which the estimate counts as converged.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    /// Consecutive small steps required for convergence.
    #[arg(long, default_value_t = 20)]
    pub window: usize,
}

impl SamplingArgs {
    fn mc(&self, seed: u64, progress: bool) -> McConfig {
        McConfig { budget: self.budget, epsilon: self.epsilon, window: self.window, seed, workers: 0, progress }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct KnnArgs {
    /// Neighbours in the surrogate classifier.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Maximum feature permutations.
    #[arg(long, default_value_t = 500)]
    pub perms: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 20)]
    pub window: usize,
}

impl KnnArgs {
    fn config(&self, seed: u64, progress: bool) -> KnnConfig {
        KnnConfig {
            k: self.k,
            feature_permutations: self.perms,
            epsilon: self.epsilon,
            window: self.window,
            seed,
            workers: 0,
            progress,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct ValueExactArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub partition: PartitionArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
    /// Refuse grids where (row groups − 1) + (column groups − 1) exceeds this.
    #[arg(long, default_value_t = fragshap::enumerate::DEFAULT_ENUMERATION_CAP)]
    pub cap: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct ValueMcArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub partition: PartitionArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct ValueKnnArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub partition: PartitionArgs,
    #[command(flatten)]
    pub knn: KnnArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AxiomEngine {
    /// Closed-form weights.
    Exact,
    /// Per-stratum average marginals.
    Stratified,
    /// Average over every permutation pair.
    Exhaustive,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyAxiomsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = AxiomEngine::Exact)]
    pub engine: AxiomEngine,
    #[arg(long, default_value_t = 20)]
    pub games: usize,
    #[arg(long, default_value_t = 3)]
    pub max_n: usize,
    #[arg(long, default_value_t = 3)]
    pub max_m: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyWeightsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueEngine {
    Exact,
    Mc,
    Knn,
    #[value(name = "1d")]
    #[serde(rename = "1d")]
    Baseline,
}

/// Engine used by an experiment to value the blocks.
#[derive(Args, Debug, Clone, Serialize)]
pub struct ValuationArgs {
    #[arg(long, value_enum, default_value_t = ValueEngine::Knn)]
    pub engine: ValueEngine,
    /// Neighbours in the knn engine's surrogate.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Maximum permutations for sampling engines.
    #[arg(long, default_value_t = 500)]
    pub budget: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 20)]
    pub window: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct ExpRemoveArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub partition: PartitionArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[command(flatten)]
    pub valuation: ValuationArgs,
    /// Cells removed per step.
    #[arg(long, default_value_t = 20)]
    pub batch: usize,
    #[arg(long, value_delimiter = ',', default_value = "descending,random,ascending")]
    pub orders: Vec<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct ExpOutliersArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[command(flatten)]
    pub knn: KnnArgs,
    /// Fraction of training cells to corrupt.
    #[arg(long, default_value_t = 0.02)]
    pub budget_fraction: f64,
    /// Exact number of cells to corrupt, overriding --budget-fraction.
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub density_quantile: f64,
    /// Permutations for the flattened baseline; 0 skips it.
    #[arg(long, default_value_t = 10)]
    pub baseline_perms: u64,
    /// Corrupt this feature by swapping paired values instead.
    #[arg(long, requires = "swap_pairs")]
    pub swap_feature: Option<String>,
    /// Value pairs such as `17:71,18:81`.
    #[arg(long, value_delimiter = ',')]
    pub swap_pairs: Vec<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct ExpAblationArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub knn: KnnArgs,
    #[arg(long, value_delimiter = ',', default_values_t = ABLATION_BUDGETS)]
    pub budgets: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2, 3, 4])]
    pub seeds: Vec<u64>,
}

#[derive(Args, Debug, Serialize)]
pub struct ExpBlocksArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    /// Coarse partition; every block is a sub-matrix.
    #[arg(long, default_value = "4x2")]
    pub partition: String,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[command(flatten)]
    pub valuation: ValuationArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1000)]
    pub cells: usize,
    #[arg(long, default_value_t = 10)]
    pub features: usize,
    #[arg(long, value_delimiter = ',', default_value = "mc,knn")]
    pub engines: Vec<String>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
}

#[derive(Serialize)]
struct RunConfig<'a> {
    command: &'static str,
    args: &'a Command,
}

#[derive(Serialize)]
struct Timing {
    command: &'static str,
    seconds: f64,
    workers: usize,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 2 for invalid input, 1 when a run fails.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

/// Runs one parsed command.
pub fn execute(command: &Command) -> Result<()> {
    let common = command.common();
    fs::create_dir_all(&common.out)?;
    let start = Instant::now();
    let out = Output { dir: &common.out };
    fragshap::with_workers(common.workers, || dispatch(command, &out))??;
    out.json("config.json", &RunConfig { command: command.name(), args: command })?;
    out.json(
        "timing.json",
        &Timing {
            command: command.name(),
            seconds: start.elapsed().as_secs_f64(),
            workers: if common.workers == 0 {
                std::thread::available_parallelism().map_or(1, |n| n.get())
            } else {
                common.workers
            },
        },
    )
}

struct Output<'a> {
    dir: &'a Path,
}

impl Output<'_> {
    fn text(&self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<()> {
        self.text(name, &to_json(value)?)
    }

    /// `<stem>.csv` matrix plus `<stem>.json` metadata.
    fn values(&self, stem: &str, values: &ValueGrid, grid: &BlockGrid, train: &Dataset) -> Result<()> {
        let (rows, cols) = labels(grid, train);
        self.text(&format!("{stem}.csv"), &values.to_csv(&rows, &cols)?)?;
        self.json(&format!("{stem}.json"), &values.meta())
    }
}

/// Sample-group and feature-group labels: the sample index or feature name
/// for singleton groups, the group index otherwise.
fn labels(grid: &BlockGrid, train: &Dataset) -> (Vec<String>, Vec<String>) {
    let rows = (0..grid.n())
        .map(|i| match grid.row_members(i) {
            [r] => format!("s{r}"),
            _ => format!("rows{i}"),
        })
        .collect();
    let cols = (0..grid.m())
        .map(|j| match grid.col_members(j) {
            [c] => train.feature_label(*c),
            _ => format!("cols{j}"),
        })
        .collect();
    (rows, cols)
}

fn dispatch(command: &Command, out: &Output) -> Result<()> {
    match command {
        Command::ValueExact(a) => {
            let (train, test) = a.data.load(a.common.seed)?;
            let grid = a.partition.grid(&train)?;
            let oracle = UtilityOracle::new(train.clone(), test, grid.clone(), a.learner.spec())?;
            let values = exact_values_with_cap(&oracle, a.cap)?;
            out.values("values", &values, &grid, &train)
        }
        Command::ValueMc(a) => {
            let (train, test) = a.data.load(a.common.seed)?;
            let grid = a.partition.grid(&train)?;
            let oracle = UtilityOracle::new(train.clone(), test, grid.clone(), a.learner.spec())?;
            let values = mc_values(&oracle, &a.sampling.mc(a.common.seed, !a.common.quiet))?;
            out.values("values", &values, &grid, &train)
        }
        Command::Value1d(a) => {
            let (train, test) = a.data.load(a.common.seed)?;
            let grid = a.partition.grid(&train)?;
            let game = FlattenedGame::new(train.clone(), test, grid.clone(), a.learner.spec())?;
            let sampling = Sampling::Permutations(a.sampling.mc(a.common.seed, !a.common.quiet));
            let values = baseline_1d_values(&game, grid.n(), grid.m(), &sampling)?;
            out.values("values", &values, &grid, &train)
        }
        Command::ValueKnn(a) => {
            let (train, test) = a.data.load(a.common.seed)?;
            let grid = a.partition.grid(&train)?;
            let engine = KnnEngine::new(&train, &test, grid.clone(), a.knn.k)?;
            let values = knn_2d_values(&engine, &a.knn.config(a.common.seed, !a.common.quiet))?;
            out.values("values", &values, &grid, &train)
        }
        Command::VerifyAxioms(a) => {
            let games = random_games(a.games, a.max_n, a.max_m, a.common.seed);
            let engine = a.engine;
            let checks = verify_axioms(
                |h: &SyntheticGame| match engine {
                    AxiomEngine::Exact => fragshap::exact::exact_values(h),
                    AxiomEngine::Stratified => stratified_values(h),
                    AxiomEngine::Exhaustive => exhaustive_values(h),
                },
                &games,
                a.tol,
                a.common.seed,
            )?;
            report_checks(out, "axioms.json", &checks, a.common.quiet)
        }
        Command::VerifyWeights(a) => {
            let checks = verify_weight_recursion(a.n, a.m)?;
            report_checks(out, "weights.json", &checks, a.common.quiet)
        }
        Command::ExpRemove(a) => exp_remove(a, out),
        Command::ExpOutliers(a) => exp_outliers(a, out),
        Command::ExpAblation(a) => exp_ablation(a, out),
        Command::ExpBlocks(a) => exp_blocks(a, out),
        Command::BenchRuntime(a) => bench(a, out),
    }
}

/// Writes the report, then fails the run if any check failed.
fn report_checks(out: &Output, name: &str, checks: &[Check], quiet: bool) -> Result<()> {
    out.json(name, checks)?;
    for c in checks.iter().filter(|_| !quiet) {
        println!("{:<24} max_residual={:.3e} {}", c.check, c.max_residual, if c.pass { "pass" } else { "FAIL" });
    }
    match checks.iter().find(|c| !c.pass) {
        None => Ok(()),
        Some(c) => Err(Error::Runtime(format!("check {} failed with residual {:e}", c.check, c.max_residual))),
    }
}

fn valuate(
    v: &ValuationArgs,
    train: &Dataset,
    test: &Dataset,
    grid: &BlockGrid,
    learner: &LearnerSpec,
    seed: u64,
    progress: bool,
) -> Result<ValueGrid> {
    let sampling = McConfig { budget: v.budget, epsilon: v.epsilon, window: v.window, seed, workers: 0, progress };
    match v.engine {
        ValueEngine::Exact => {
            let oracle = UtilityOracle::new(train.clone(), test.clone(), grid.clone(), learner.clone())?;
            fragshap::exact::exact_values(&oracle)
        }
        ValueEngine::Mc => {
            let oracle = UtilityOracle::new(train.clone(), test.clone(), grid.clone(), learner.clone())?;
            mc_values(&oracle, &sampling)
        }
        ValueEngine::Knn => {
            let engine = KnnEngine::new(train, test, grid.clone(), v.k)?;
            knn_2d_values(
                &engine,
                &KnnConfig {
                    k: v.k,
                    feature_permutations: v.budget,
                    epsilon: v.epsilon,
                    window: v.window,
                    seed,
                    workers: 0,
                    progress,
                },
            )
        }
        ValueEngine::Baseline => {
            let game = FlattenedGame::new(train.clone(), test.clone(), grid.clone(), learner.clone())?;
            baseline_1d_values(&game, grid.n(), grid.m(), &Sampling::Permutations(sampling))
        }
    }
}

fn exp_remove(a: &ExpRemoveArgs, out: &Output) -> Result<()> {
    let seed = a.common.seed;
    let (train, test) = a.data.load(seed)?;
    let grid = a.partition.grid(&train)?;
    let learner = a.learner.spec();
    let orders = a.orders.iter().map(|o| o.parse::<Order>()).collect::<Result<Vec<_>>>()?;
    let values = valuate(&a.valuation, &train, &test, &grid, &learner, seed, !a.common.quiet)?;
    out.values("values", &values, &grid, &train)?;
    let mut curves = Vec::new();
    for order in orders {
        let ranked = rank_cells(&values, &grid, order, seed)?;
        let curve = remove_cells(&train, &test, &ranked, a.batch, order, &learner)?;
        out.text(&format!("removal_{}.csv", order_name(order)), &removal_csv(&curve))?;
        curves.push(curve);
    }
    out.json("removal.json", &curves)
}

fn order_name(order: Order) -> &'static str {
    match order {
        Order::Ascending => "ascending",
        Order::Descending => "descending",
        Order::Random => "random",
    }
}

fn exp_outliers(a: &ExpOutliersArgs, out: &Output) -> Result<()> {
    let seed = a.common.seed;
    let (train, test) = a.data.load(seed)?;
    let swap_digits = match &a.swap_feature {
        None => None,
        Some(feature) => Some(SwapDigits {
            feature: feature.clone(),
            pairs: a.swap_pairs.iter().map(|p| parse_pair(p)).collect::<Result<_>>()?,
        }),
    };
    let progress = !a.common.quiet;
    let exp = OutlierExperiment {
        params: OutlierParams {
            budget_fraction: a.budget_fraction,
            density_quantile: a.density_quantile,
            cells: a.cells,
            seed,
            swap_digits,
        },
        knn: a.knn.config(seed, progress),
        baseline: (a.baseline_perms > 0).then(|| McConfig {
            budget: a.baseline_perms,
            epsilon: a.knn.epsilon,
            window: a.knn.window,
            seed,
            workers: 0,
            progress,
        }),
        learner: a.learner.spec(),
    };
    let report = outlier_experiment(&train, &test, &exp)?;
    let grid = BlockGrid::cells(train.n_samples(), train.n_features())?;
    out.values("values_knn", &report.knn_values, &grid, &train)?;
    out.text("detection_knn.csv", &detection_csv(&report.knn_curve))?;
    if let (Some(v), Some(c)) = (&report.baseline_values, &report.baseline_curve) {
        out.values("values_1d", v, &grid, &train)?;
        out.text("detection_1d.csv", &detection_csv(c))?;
    }
    let summary = OutlierSummary::new(&report);
    out.json("outliers.json", &summary)?;
    if !a.common.quiet {
        println!("{}", summary.line());
    }
    Ok(())
}

fn parse_pair(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::Config(format!("swap pair {s:?} is not of the form A:B"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

#[derive(Serialize)]
struct OutlierSummary<'a> {
    plan: &'a fragshap_experiments::OutlierPlan,
    knn_recall_at_5pct: f64,
    knn_recall_at_10pct: f64,
    baseline_recall_at_5pct: Option<f64>,
    baseline_recall_at_10pct: Option<f64>,
}

impl<'a> OutlierSummary<'a> {
    fn new(r: &'a OutlierReport) -> Self {
        OutlierSummary {
            plan: &r.plan,
            knn_recall_at_5pct: r.knn_curve.recall_at(0.05),
            knn_recall_at_10pct: r.knn_curve.recall_at(0.10),
            baseline_recall_at_5pct: r.baseline_curve.as_ref().map(|c| c.recall_at(0.05)),
            baseline_recall_at_10pct: r.baseline_curve.as_ref().map(|c| c.recall_at(0.10)),
        }
    }

    fn line(&self) -> String {
        let mut s = format!(
            "{} outliers; knn recall {:.3} at 5%, {:.3} at 10%",
            self.plan.placements.len(),
            self.knn_recall_at_5pct,
            self.knn_recall_at_10pct
        );
        if let (Some(a), Some(b)) = (self.baseline_recall_at_5pct, self.baseline_recall_at_10pct) {
            write!(s, "; 1d recall {a:.3} at 5%, {b:.3} at 10%").unwrap();
        }
        s
    }
}

fn exp_ablation(a: &ExpAblationArgs, out: &Output) -> Result<()> {
    let (train, test) = a.data.load(a.common.seed)?;
    let knn = a.knn.config(a.common.seed, false);
    let entries = ablation_outlier_budget(&train, &test, &a.budgets, &a.seeds, &knn)?;
    let mut csv = String::from("budget,seed,recall_at_5pct,recall_at_10pct\n");
    for e in &entries {
        writeln!(csv, "{},{},{},{}", e.budget, e.seed, e.curve.recall_at(0.05), e.curve.recall_at(0.10)).unwrap();
    }
    out.text("ablation.csv", &csv)?;
    out.json("ablation.json", &entries)
}

fn exp_blocks(a: &ExpBlocksArgs, out: &Output) -> Result<()> {
    let seed = a.common.seed;
    let (train, test) = a.data.load(seed)?;
    let grid = PartitionArgs { partition: a.partition.clone() }.grid(&train)?;
    let learner = a.learner.spec();
    let values = valuate(&a.valuation, &train, &test, &grid, &learner, seed, !a.common.quiet)?;
    out.values("heatmap", &values, &grid, &train)?;
    let table = block_value_vs_performance(&train, &test, &grid, &values, &learner)?;
    let mut csv = String::from("i,j,value,accuracy\n");
    for b in &table.blocks {
        writeln!(csv, "{},{},{},{}", b.i, b.j, b.value, b.accuracy).unwrap();
    }
    out.text("blocks.csv", &csv)?;
    out.json("blocks.json", &table)
}

fn bench(a: &BenchArgs, out: &Output) -> Result<()> {
    let engines = a.engines.iter().map(|e| e.parse::<Engine>()).collect::<Result<Vec<_>>>()?;
    let rows = bench_runtime(&BenchConfig {
        cells: a.cells,
        features: a.features,
        engines,
        sampling: a.sampling.mc(a.common.seed, !a.common.quiet),
        k: a.k,
        data_seed: a.common.seed,
    })?;
    let mut table = String::from("engine,cells,permutations,converged,seconds,log10_seconds,extrapolated\n");
    for r in &rows {
        let name = serde_json::to_value(r.engine)?;
        writeln!(
            table,
            "{},{},{},{},{},{},{}",
            name.as_str().unwrap_or_default(),
            r.cells,
            r.permutations,
            r.converged,
            r.seconds,
            r.log10_seconds,
            r.extrapolated
        )
        .unwrap();
    }
    if !a.common.quiet {
        print!("{table}");
    }
    out.text("bench.csv", &table)?;
    out.json("bench.json", &rows)
}
