//! Hyperparameter selection by repeated k-fold cross-validation of the
//! outcome model `F(x, t)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::group_lasso::stratified_folds;
use crate::model::{fit, FitConfig};
use crate::numfmt::serialize_real;
use crate::rng::mix_seed;
use crate::rule_induction::Subsample;
use crate::transform::PropensitySource;

/// Salt separating the tuning folds from the folds used to choose λ.
const TUNING_SALT: u64 = 0x7475_6e65;

/// Candidate values of the four boosting hyperparameters; every combination
/// is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningGrid {
    pub trees: Vec<usize>,
    pub mean_terminal: Vec<f64>,
    /// Subsample sizes, fractions up to 1 and row counts above.
    pub subsample: Vec<f64>,
    pub shrinkage: Vec<f64>,
}

impl Default for TuningGrid {
    /// The 81-point grid `M ∈ {200, 300, 400}`, `L̄ ∈ {2, 3, 4}`,
    /// `η ∈ {0.25, 0.5, 0.75}`, `v ∈ {0.01, 0.05, 0.1}`.
    fn default() -> Self {
        Self {
            trees: vec![200, 300, 400],
            mean_terminal: vec![2.0, 3.0, 4.0],
            subsample: vec![0.25, 0.5, 0.75],
            shrinkage: vec![0.01, 0.05, 0.1],
        }
    }
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub trees: usize,
    #[serde(serialize_with = "serialize_real")]
    pub mean_terminal: f64,
    #[serde(serialize_with = "serialize_real")]
    pub subsample: f64,
    #[serde(serialize_with = "serialize_real")]
    pub shrinkage: f64,
}

impl GridPoint {
    /// `base` with this point's boosting hyperparameters.
    pub fn apply(&self, base: &FitConfig) -> Result<FitConfig> {
        let mut cfg = base.clone();
        cfg.gbt.trees = self.trees;
        cfg.gbt.mean_terminal = self.mean_terminal;
        cfg.gbt.subsample = Subsample::from_value(self.subsample)?;
        cfg.gbt.shrinkage = self.shrinkage;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl TuningGrid {
    /// Every combination, with the tree count varying slowest and the
    /// shrinkage fastest.
    pub fn points(&self) -> Result<Vec<GridPoint>> {
        let mut out = Vec::new();
        for &trees in &self.trees {
            for &mean_terminal in &self.mean_terminal {
                for &subsample in &self.subsample {
                    for &shrinkage in &self.shrinkage {
                        out.push(GridPoint {
                            trees,
                            mean_terminal,
                            subsample,
                            shrinkage,
                        });
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Config("the tuning grid is empty".into()));
        }
        Ok(out)
    }
}

/// Cross-validated error of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningRow {
    #[serde(flatten)]
    pub point: GridPoint,
    /// Held-out squared error of `F(x_i, t_i)` summed over rows, averaged
    /// over repeats.
    #[serde(serialize_with = "serialize_real")]
    pub cv_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningResult {
    pub rows: Vec<TuningRow>,
    /// Smallest error; ties go to the earlier grid point.
    pub best_index: usize,
}

impl TuningResult {
    pub fn best(&self) -> &TuningRow {
        &self.rows[self.best_index]
    }
}

/// Repeated k-fold error of the outcome model fitted with `cfg`.
///
/// Folds are stratified by arm and depend on `seed` and the repeat only, so
/// every configuration is scored on the same splits.
pub fn cv_outcome_error(
    ds: &Dataset,
    ps: PropensitySource,
    cfg: &FitConfig,
    folds: usize,
    repeats: usize,
    seed: u64,
) -> Result<f64> {
    if repeats == 0 {
        return Err(Error::Config("at least one repeat is required".into()));
    }
    let fold_seed = mix_seed(seed, TUNING_SALT);
    let mut total = 0.0;
    for repeat in 0..repeats {
        let labels = stratified_folds(ds.t(), folds, fold_seed, repeat)?;
        let errors: Vec<f64> = (0..folds)
            .into_par_iter()
            .map(|fold| {
                let (train, test): (Vec<usize>, Vec<usize>) =
                    (0..ds.n()).partition(|&i| labels[i] != fold);
                let train_ds = ds.subset(&train)?;
                let model = fit(&train_ds, ps, cfg)?;
                test.iter().try_fold(0.0, |acc, &i| {
                    let f = model.predict_outcome(ds.row(i), ds.t()[i])?;
                    Ok(acc + (ds.y()[i] - f).powi(2))
                })
            })
            .collect::<Result<_>>()?;
        total += errors.iter().sum::<f64>();
    }
    Ok(total / repeats as f64)
}

/// Scores every grid point and picks the smallest cross-validated error.
pub fn tune(
    ds: &Dataset,
    ps: PropensitySource,
    base: &FitConfig,
    grid: &TuningGrid,
    folds: usize,
    repeats: usize,
    seed: u64,
) -> Result<TuningResult> {
    let points = grid.points()?;
    let configs: Vec<FitConfig> = points.iter().map(|p| p.apply(base)).collect::<Result<_>>()?;
    let rows: Vec<TuningRow> = points
        .iter()
        .zip(&configs)
        .map(|(&point, cfg)| {
            Ok(TuningRow {
                point,
                cv_error: cv_outcome_error(ds, ps, cfg, folds, repeats, seed)?,
            })
        })
        .collect::<Result<_>>()?;
    let best_index = rows
        .iter()
        .enumerate()
        .fold(0, |best, (i, r)| if r.cv_error < rows[best].cv_error { i } else { best });
    Ok(TuningResult { rows, best_index })
}
