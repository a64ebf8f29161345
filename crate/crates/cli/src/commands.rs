use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

use causal_rulefit::data::{dataset_from_table, read_table, write_csv, ColumnSpec, Table};
use causal_rulefit::model::ReportFilter;
use causal_rulefit::numfmt::{format_real, format_sig};
use causal_rulefit::rule_induction::Subsample;
use causal_rulefit::simulation::{
    gen_scenario, mse, run_benchmark, CausalRuleFit, DifferenceInMeans, HteEstimator,
    ScenarioSpec, ZeroEffect,
};
use causal_rulefit::tuning::{tune, TuningGrid};
use causal_rulefit::{fit_with_report, load_model, save_model, Dataset, FitConfig, PropensitySource};

use crate::{
    BenchmarkArgs, Command, DataArgs, EvaluateArgs, FitArgs, InspectArgs, PenaltyArgs, PredictArgs,
    SimulateArgs, TuneArgs,
};

/// Column holding simulated propensities; ignored when a constant is given.
const DEFAULT_PSCORE_COLUMN: &str = "pscore";

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Inspect(a) => inspect(a),
        Command::Tune(a) => tune_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Benchmark(a) => benchmark(a),
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let spec = ScenarioSpec::new(a.scenario, a.design, a.n as usize, a.p as usize, a.seed)?;
    let data = gen_scenario(&spec)?;
    data.write_csv(&a.out)
        .with_context(|| format!("cannot write `{}`", a.out.display()))?;
    println!(
        "wrote {} rows and {} columns to {}",
        spec.n,
        spec.p + 4,
        a.out.display()
    );
    Ok(())
}

fn drop_column(table: &mut Table, name: &str) {
    if let Some(i) = table.headers.iter().position(|h| h == name) {
        table.headers.remove(i);
        table.columns.remove(i);
    }
}

fn load_data(a: &DataArgs) -> Result<(Dataset, PropensitySource)> {
    let mut table =
        read_table(&a.data).with_context(|| format!("cannot read `{}`", a.data.display()))?;
    drop_column(&mut table, &a.truth_col);
    let mut spec = ColumnSpec::new(a.outcome.as_str(), a.treatment.as_str());
    let source = match (a.pscore, &a.pscore_col) {
        (Some(c), None) => {
            drop_column(&mut table, DEFAULT_PSCORE_COLUMN);
            PropensitySource::constant(c)?
        }
        (None, Some(col)) => {
            spec = spec.with_pscore(col.as_str());
            PropensitySource::Column
        }
        _ => bail!("give exactly one of --pscore and --pscore-col"),
    };
    let loaded = dataset_from_table(&table, &spec)?;
    Ok((loaded.dataset, source))
}

fn apply_penalty(cfg: &mut FitConfig, p: &PenaltyArgs) {
    if let Some(v) = p.min_leaf {
        cfg.gbt.min_leaf = v as usize;
    }
    if let Some(v) = p.winsor_q {
        cfg.winsor_q = v;
    }
    if let Some(v) = p.lambda_path {
        cfg.solver.path_length = v as usize;
    }
    if let Some(v) = p.lambda_min_ratio {
        cfg.solver.path_min_ratio = v;
    }
}

fn fit_config(a: &FitArgs) -> Result<FitConfig> {
    let mut cfg = FitConfig::seeded(a.seed);
    apply_penalty(&mut cfg, &a.penalty);
    if let Some(v) = a.trees {
        cfg.gbt.trees = v as usize;
    }
    if let Some(v) = a.mean_depth {
        cfg.gbt.mean_terminal = v;
    }
    if let Some(v) = a.shrinkage {
        cfg.gbt.shrinkage = v;
    }
    if let Some(v) = a.subsample {
        cfg.gbt.subsample = Subsample::from_value(v)?;
    }
    if let Some(v) = a.folds {
        cfg.solver.cv_folds = v;
    }
    if let Some(v) = a.repeats {
        cfg.solver.cv_repeats = v as usize;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fit(a: FitArgs) -> Result<()> {
    let cfg = fit_config(&a)?;
    let (ds, source) = load_data(&a.data)?;
    let report = fit_with_report(&ds, source, &cfg)?;
    save_model(&report.model, &a.model)
        .with_context(|| format!("cannot write `{}`", a.model.display()))?;
    let m = &report.model;
    println!("n: {}", m.meta.n);
    println!("p: {}", m.meta.p);
    println!("candidate rules: {}", report.candidate_rule_count);
    println!("selected rules: {}", m.rules.len());
    println!("selected linear terms: {}", m.linear.len());
    println!("lambda: {}", format_sig(m.meta.lambda, 10));
    match m.meta.cv_error {
        Some(e) => println!("cv error: {}", format_sig(e, 10)),
        None => println!("cv error: none (no candidate terms)"),
    }
    println!("model: {}", a.model.display());
    Ok(())
}

/// Writes columns as CSV to `out`, or to standard output.
fn emit_columns(out: Option<&Path>, columns: &[(&str, &[f64])]) -> Result<()> {
    if let Some(path) = out {
        return write_csv(path, columns).with_context(|| format!("cannot write `{}`", path.display()));
    }
    let stdout = std::io::stdout();
    let mut w = std::io::BufWriter::new(stdout.lock());
    let header: Vec<&str> = columns.iter().map(|(n, _)| *n).collect();
    writeln!(w, "{}", header.join(","))?;
    let n = columns.first().map_or(0, |c| c.1.len());
    for i in 0..n {
        let row: Vec<String> = columns.iter().map(|(_, c)| format_real(c[i])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = load_model(&a.model).with_context(|| format!("cannot load `{}`", a.model.display()))?;
    let table = read_table(&a.data).with_context(|| format!("cannot read `{}`", a.data.display()))?;
    let x = table.matrix(&model.meta.feature_names)?;
    let tau = model.predict_hte_rows(x.view())?;
    if a.both_arms {
        let mut f0 = Vec::with_capacity(tau.len());
        let mut f1 = Vec::with_capacity(tau.len());
        for row in x.rows() {
            f0.push(model.predict_outcome(row, 0)?);
            f1.push(model.predict_outcome(row, 1)?);
        }
        emit_columns(a.out.as_deref(), &[("tau_hat", &tau), ("f0", &f0), ("f1", &f1)])
    } else {
        emit_columns(a.out.as_deref(), &[("tau_hat", &tau)])
    }
}

fn inspect(a: InspectArgs) -> Result<()> {
    let model = load_model(&a.model).with_context(|| format!("cannot load `{}`", a.model.display()))?;
    let report = model.importance();
    let mut filter = if a.all {
        ReportFilter::all()
    } else {
        ReportFilter {
            min_support: a.min_support,
            ..ReportFilter::default()
        }
    };
    filter.top = a.top;
    let rows = report.filtered(&filter);
    let support = |s: Option<f64>| s.map_or_else(|| "-".to_string(), |s| format_sig(s, 4));

    println!(
        "{:<6}  {:>10}  {:>12}  {:>7}  term",
        "kind", "importance", "coefficient", "support"
    );
    for r in &rows {
        println!(
            "{:<6}  {:>10}  {:>12}  {:>7}  {}",
            r.kind.as_str(),
            format_sig(r.importance, 4),
            format_sig(r.coefficient, 4),
            support(r.support),
            r.description
        );
    }
    if let Some(path) = &a.out {
        let mut w = csv::Writer::from_path(path)
            .with_context(|| format!("cannot write `{}`", path.display()))?;
        w.write_record(["kind", "term", "importance", "coefficient", "support"])?;
        for r in &rows {
            w.write_record([
                r.kind.as_str().to_string(),
                r.description.clone(),
                format_real(r.importance),
                format_real(r.coefficient),
                r.support.map(format_real).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}

fn tune_cmd(a: TuneArgs) -> Result<()> {
    let mut base = FitConfig::seeded(a.seed);
    apply_penalty(&mut base, &a.penalty);
    let grid = TuningGrid {
        trees: a.trees.iter().map(|&t| t as usize).collect(),
        mean_terminal: a.mean_depth.clone(),
        subsample: a.subsample.clone(),
        shrinkage: a.shrinkage.clone(),
    };
    if a.trees.contains(&0) {
        bail!("tree counts must be positive");
    }
    let (ds, source) = load_data(&a.data)?;
    let result = tune(&ds, source, &base, &grid, a.folds, a.repeats as usize, a.seed)?;
    let best = result.best();
    println!(
        "best: trees {} mean-depth {} subsample {} shrinkage {} cv error {}",
        best.point.trees,
        format_sig(best.point.mean_terminal, 6),
        format_sig(best.point.subsample, 6),
        format_sig(best.point.shrinkage, 6),
        format_sig(best.cv_error, 10)
    );
    if let Some(path) = &a.out {
        let mut w = csv::Writer::from_path(path)
            .with_context(|| format!("cannot write `{}`", path.display()))?;
        w.write_record(["trees", "mean_depth", "subsample", "shrinkage", "cv_error"])?;
        for r in &result.rows {
            w.write_record([
                r.point.trees.to_string(),
                format_real(r.point.mean_terminal),
                format_real(r.point.subsample),
                format_real(r.point.shrinkage),
                format_real(r.cv_error),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}

fn column(path: &Path, name: &str) -> Result<Vec<f64>> {
    let table = read_table(path).with_context(|| format!("cannot read `{}`", path.display()))?;
    Ok(table.column(name)?.to_vec())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let truth_file = &a.data[0];
    let pred_file = a.data.last().expect("at least one data file");
    let truth = column(truth_file, &a.truth_col)?;
    let pred = column(pred_file, &a.pred_col)?;
    println!("{}", format_sig(mse(&truth, &pred)?, 10));
    Ok(())
}

fn benchmark(a: BenchmarkArgs) -> Result<()> {
    let spec = ScenarioSpec::new(a.scenario, a.design, a.n as usize, a.p as usize, a.seed)?;
    let estimators: [&dyn HteEstimator; 3] = [
        &CausalRuleFit::default(),
        &DifferenceInMeans,
        &ZeroEffect,
    ];
    let mut writer = match &a.out {
        Some(path) => {
            let mut w = csv::Writer::from_path(path)
                .with_context(|| format!("cannot write `{}`", path.display()))?;
            w.write_record([
                "estimator", "scenario", "design", "p", "replication", "seed", "mse", "status",
            ])?;
            Some(w)
        }
        None => None,
    };
    for est in estimators {
        let result = run_benchmark(&spec, est, a.repeats as usize)?;
        let median = result.median().map_or_else(|| "-".to_string(), |m| format_sig(m, 10));
        println!(
            "{}: median mse {} over {} replications ({} failed)",
            est.name(),
            median,
            result.rows.len(),
            result.failures()
        );
        if let Some(w) = writer.as_mut() {
            for r in &result.rows {
                w.write_record([
                    est.name().to_string(),
                    r.scenario.to_string(),
                    r.design.to_string(),
                    r.p.to_string(),
                    r.replication.to_string(),
                    r.seed.to_string(),
                    r.mse.map(format_real).unwrap_or_default(),
                    r.status.clone(),
                ])?;
            }
        }
    }
    if let Some(mut w) = writer {
        w.flush()?;
    }
    Ok(())
}
