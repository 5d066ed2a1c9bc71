use fragshap::knn::KnnConfig;
use fragshap::{BlockGrid, LearnerSpec};
use fragshap_experiments::pipeline::{ablation_outlier_budget, outlier_experiment, OutlierExperiment};
use fragshap_experiments::{inject_outliers, OutlierParams, SynthSpec};

#[test]
fn higher_injection_budgets_lower_early_recall_on_average() {
    let (train, test) = SynthSpec::default().generate().unwrap();
    let budgets = [0.01, 0.05, 0.15];
    let seeds = [0, 1, 2, 3, 4];
    let knn = KnnConfig { feature_permutations: 100, ..KnnConfig::default() };
    let entries = ablation_outlier_budget(&train, &test, &budgets, &seeds, &knn).unwrap();
    let mean_recall = |b: f64| {
        let hits: Vec<f64> = entries.iter().filter(|e| e.budget == b).map(|e| e.curve.recall_at(0.05)).collect();
        hits.iter().sum::<f64>() / hits.len() as f64
    };
    let recalls: Vec<f64> = budgets.iter().map(|&b| mean_recall(b)).collect();
    eprintln!("recall at 5% by budget: {recalls:?}");
    assert!(recalls.windows(2).all(|w| w[0] >= w[1]), "{recalls:?}");
}

#[test]
fn outlier_experiment_is_a_pure_function_of_its_inputs() {
    let (train, test) =
        SynthSpec { samples: 50, features: 5, test: 30, seed: 3, ..SynthSpec::default() }.generate().unwrap();
    let exp = OutlierExperiment {
        params: OutlierParams { seed: 3, ..OutlierParams::default() },
        knn: KnnConfig { feature_permutations: 30, seed: 3, ..KnnConfig::default() },
        baseline: Some(fragshap::mc::McConfig { budget: 2, seed: 3, ..Default::default() }),
        learner: LearnerSpec::default(),
    };
    let a = outlier_experiment(&train, &test, &exp).unwrap();
    let b = outlier_experiment(&train, &test, &exp).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.plan.placements.len(), 5);
    let grid = BlockGrid::cells(50, 5).unwrap();
    assert_eq!((a.knn_values.n, a.knn_values.m), (grid.n(), grid.m()));
    let (dirty, plan) = inject_outliers(&train, &exp.params).unwrap();
    assert_eq!(plan, a.plan);
    assert_ne!(dirty, train);
}
