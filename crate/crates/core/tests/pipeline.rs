use causal_rulefit::model::FitReport;
use causal_rulefit::simulation::{gen_scenario, Design, ScenarioSpec, SimulatedData};
use causal_rulefit::{fit, fit_with_report, load_model, save_model, Dataset, FitConfig, PropensitySource};

fn scenario(s: u8, design: Design, n: usize, p: usize, seed: u64) -> SimulatedData {
    gen_scenario(&ScenarioSpec::new(s, design, n, p, seed).unwrap()).unwrap()
}

/// A smaller configuration that keeps the suite fast while exercising every
/// stage.
fn quick(seed: u64) -> FitConfig {
    let mut cfg = FitConfig::seeded(seed);
    cfg.gbt.trees = 60;
    cfg.gbt.shrinkage = 0.05;
    cfg.solver.path_length = 40;
    cfg.solver.cv_folds = 5;
    cfg
}

fn effects(model: &causal_rulefit::CausalRuleFitModel, ds: &Dataset) -> Vec<f64> {
    model.predict_hte_rows(ds.x().view()).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn outcome_shift_moves_only_the_intercept() {
    let data = scenario(2, Design::Rct, 300, 10, 4);
    let ds = &data.dataset;
    let cfg = quick(3);
    let base = fit(ds, PropensitySource::Column, &cfg).unwrap();
    for c in [-7.5, 0.25, 40.0] {
        let shifted_ds = ds.with_outcomes(ds.y().iter().map(|v| v + c).collect()).unwrap();
        let shifted = fit(&shifted_ds, PropensitySource::Column, &cfg).unwrap();
        assert!((shifted.intercept - base.intercept - c).abs() <= 1e-6, "shift {c}");
        let d = max_abs_diff(&effects(&base, ds), &effects(&shifted, ds));
        assert!(d <= 1e-6, "shift {c}: effects moved by {d}");
    }
}

#[test]
fn relabeling_arms_negates_effects() {
    let data = scenario(2, Design::Rct, 300, 10, 5);
    let ds = &data.dataset;
    let cfg = quick(8);
    let base = fit(ds, PropensitySource::Column, &cfg).unwrap();
    let swapped = fit(&ds.with_swapped_arms().unwrap(), PropensitySource::Column, &cfg).unwrap();
    let a = effects(&base, ds);
    let b: Vec<f64> = effects(&swapped, ds).iter().map(|v| -v).collect();
    let d = max_abs_diff(&a, &b);
    assert!(d <= 1e-6, "effects differ by {d} after relabeling");
}

#[test]
fn same_seed_same_model_json() {
    let data = scenario(6, Design::Observational, 250, 8, 2);
    let cfg = quick(11);
    let a = fit(&data.dataset, PropensitySource::Column, &cfg).unwrap();
    let b = fit(&data.dataset, PropensitySource::Column, &cfg).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn saved_model_loads_identically() {
    let data = scenario(3, Design::Rct, 250, 8, 9);
    let model = fit(&data.dataset, PropensitySource::Constant(0.5), &quick(1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, model);
    let again = dir.path().join("again.json");
    save_model(&loaded, &again).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    assert_eq!(effects(&model, &data.dataset), effects(&loaded, &data.dataset));
}

#[test]
fn report_counts_are_consistent() {
    let data = scenario(4, Design::Rct, 250, 6, 3);
    let FitReport {
        model,
        raw_rule_count,
        unique_rule_count,
        candidate_rule_count,
        terminal_counts,
        linear_term_count,
        selection,
    } = fit_with_report(&data.dataset, PropensitySource::Column, &quick(2)).unwrap();
    assert_eq!(terminal_counts.len(), 60);
    assert_eq!(raw_rule_count, terminal_counts.iter().map(|t| 2 * (t - 1)).sum::<usize>());
    assert!(unique_rule_count <= raw_rule_count);
    assert!(candidate_rule_count <= unique_rule_count);
    assert_eq!(linear_term_count, 6);
    assert!(model.rules.len() <= candidate_rule_count);
    assert!(model.linear.len() <= linear_term_count);
    let sel = selection.unwrap();
    assert_eq!(sel.lambdas.len(), 40);
    assert_eq!(model.meta.lambda, sel.best_lambda());
    for e in &model.rules {
        assert!(e.support > 0.0 && e.support < 1.0);
        assert!(e.alpha != 0.0 || e.beta != 0.0);
    }
}

#[test]
fn single_arm_data_is_rejected() {
    let data = scenario(1, Design::Rct, 100, 5, 1);
    let ds = &data.dataset;
    let t = vec![1.0; ds.n()];
    let one_arm = Dataset::new(ds.y().to_vec(), t, ds.x().clone(), None, ds.feature_names().to_vec()).unwrap();
    assert!(fit(&one_arm, PropensitySource::Constant(0.5), &quick(1)).is_err());
}

#[test]
fn clipping_bounds_the_weights() {
    let data = scenario(7, Design::Observational, 300, 6, 12);
    let mut cfg = quick(4);
    cfg.clip_propensity = Some(0.05);
    let model = fit(&data.dataset, PropensitySource::Column, &cfg).unwrap();
    assert!(effects(&model, &data.dataset).iter().all(|v| v.is_finite()));
    let mut bad = quick(4);
    bad.clip_propensity = Some(0.7);
    assert!(fit(&data.dataset, PropensitySource::Column, &bad).is_err());
}

/// Without a penalty on a saturated design, each rule cell's fitted mean is
/// its sample mean per arm.
#[test]
fn saturated_instance_reproduces_cell_means() {
    use causal_rulefit::basis::GroupedDesign;
    use causal_rulefit::group_lasso::{solve_path_at, SolverConfig};

    // One binary covariate: cells (b, t) for b, t ∈ {0, 1}.
    let b = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0];
    let t = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
    let y = [1.0, 3.0, 1.5, 6.0, 2.0, 7.0, 2.5, 0.5, 2.5, 6.5, 6.0, 3.5];
    let n = y.len();
    // Groups: the arm indicator pair (t, 1 − t) and the rule pair (t·b, (1−t)·b).
    let pairs = [
        [t.to_vec(), t.iter().map(|v| 1.0 - v).collect()],
        [
            (0..n).map(|i| t[i] * b[i]).collect(),
            (0..n).map(|i| (1.0 - t[i]) * b[i]).collect(),
        ],
    ];
    let design = GroupedDesign::from_dense(n, &pairs).unwrap();
    let cfg = SolverConfig {
        tolerance: 1e-16,
        ..SolverConfig::default()
    };
    let sol = solve_path_at(&design, &y, &[1e-9], &cfg).unwrap().pop().unwrap();
    let fitted = design.predict(sol.intercept, &sol.coefs);
    for cell_b in [0.0, 1.0] {
        for cell_t in [0.0, 1.0] {
            let idx: Vec<usize> = (0..n).filter(|&i| b[i] == cell_b && t[i] == cell_t).collect();
            let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
            for &i in &idx {
                assert!((fitted[i] - mean).abs() <= 1e-4, "cell ({cell_b}, {cell_t})");
            }
        }
    }
}
