use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::solver::{lambda_max, lambda_path, solve_path_at, SolverConfig};
use crate::basis::GroupedDesign;
use crate::error::{Error, Result};
use crate::rng::{stream, CV_STREAM_BASE};

/// Cross-validated choice of λ.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSelection {
    pub lambdas: Vec<f64>,
    /// Mean held-out squared prediction error per λ.
    pub cv_error: Vec<f64>,
    pub best_index: usize,
}

impl LambdaSelection {
    pub fn best_lambda(&self) -> f64 {
        self.lambdas[self.best_index]
    }

    pub fn best_error(&self) -> f64 {
        self.cv_error[self.best_index]
    }
}

/// Fold label of every row, stratified by arm.
///
/// Rows are shuffled once; each row then takes the next fold in rotation
/// among rows of its own arm. Renaming the arms therefore leaves the folds
/// unchanged.
pub fn stratified_folds(arms: &[u8], folds: usize, seed: u64, repeat: usize) -> Result<Vec<usize>> {
    let n = arms.len();
    if folds < 2 {
        return Err(Error::FoldConstruction(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n {
        return Err(Error::FoldConstruction(format!(
            "{folds} folds requested for {n} rows"
        )));
    }
    let treated = arms.iter().filter(|&&a| a == 1).count();
    let control = n - treated;
    if treated < folds || control < folds {
        return Err(Error::FoldConstruction(format!(
            "every fold needs both arms, but there are {treated} treated and {control} control rows for {folds} folds"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, CV_STREAM_BASE + repeat as u64));
    let mut next = [0usize; 2];
    let mut labels = vec![0; n];
    for i in order {
        let arm = usize::from(arms[i] == 1);
        labels[i] = next[arm] % folds;
        next[arm] += 1;
    }
    Ok(labels)
}

/// Held-out squared error of every λ in `lambdas`, summed over folds.
fn fold_errors(
    design: &GroupedDesign,
    y: &[f64],
    labels: &[usize],
    fold: usize,
    lambdas: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let (train, test): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| labels[i] != fold);
    let train_design = design.subset(&train);
    let train_y: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let test_design = design.subset(&test);
    let path = solve_path_at(&train_design, &train_y, lambdas, cfg)?;
    Ok(path
        .iter()
        .map(|sol| {
            test_design
                .predict(sol.intercept, &sol.coefs)
                .iter()
                .zip(&test)
                .map(|(f, &i)| (y[i] - f).powi(2))
                .sum()
        })
        .collect())
}

/// k-fold cross-validation over the λ path of the full data.
///
/// The chosen λ minimizes mean held-out squared error; exact ties go to the
/// larger λ.
pub fn select_lambda(
    design: &GroupedDesign,
    y: &[f64],
    arms: &[u8],
    cfg: &SolverConfig,
) -> Result<LambdaSelection> {
    cfg.validate()?;
    if arms.len() != y.len() {
        return Err(Error::Shape {
            expected: y.len(),
            got: arms.len(),
        });
    }
    if y.len() < 2 * cfg.cv_folds {
        return Err(Error::FoldConstruction(format!(
            "{} rows are too few for {} folds",
            y.len(),
            cfg.cv_folds
        )));
    }
    let lambdas = lambda_path(lambda_max(design, y)?, cfg);
    let jobs: Vec<(usize, usize)> = (0..cfg.cv_repeats)
        .flat_map(|r| (0..cfg.cv_folds).map(move |f| (r, f)))
        .collect();
    let labels: Vec<Vec<usize>> = (0..cfg.cv_repeats)
        .map(|r| stratified_folds(arms, cfg.cv_folds, cfg.seed, r))
        .collect::<Result<_>>()?;
    let per_job: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(r, f)| fold_errors(design, y, &labels[r], f, &lambdas, cfg))
        .collect::<Result<_>>()?;
    let denom = (y.len() * cfg.cv_repeats) as f64;
    let cv_error: Vec<f64> = (0..lambdas.len())
        .map(|k| per_job.iter().map(|errs| errs[k]).sum::<f64>() / denom)
        .collect();
    let mut best_index = 0;
    for (k, &e) in cv_error.iter().enumerate() {
        if e < cv_error[best_index] {
            best_index = k;
        }
    }
    Ok(LambdaSelection {
        lambdas,
        cv_error,
        best_index,
    })
}
