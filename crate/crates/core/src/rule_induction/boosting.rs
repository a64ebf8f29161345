use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::tree::{fit_tree, RegressionTree};
use crate::error::{Error, Result};
use crate::numfmt::serialize_real;
use crate::rng::{stream, SUBSAMPLE_STREAM, TERMINAL_COUNT_STREAM};

/// Rows used to grow each tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subsample {
    /// `floor(fraction * n)` rows, fraction in (0, 1].
    Fraction(#[serde(serialize_with = "serialize_real")] f64),
    /// `min(count, n)` rows.
    Count(usize),
    /// `floor(min(n / 2, 100 + 6 sqrt(n)))` rows.
    Auto,
}

impl Subsample {
    /// Values up to 1 are fractions, larger values absolute counts.
    pub fn from_value(eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Config(format!("subsample {eta} must be positive")));
        }
        Ok(if eta <= 1.0 {
            Self::Fraction(eta)
        } else {
            Self::Count(eta.floor() as usize)
        })
    }

    pub fn size(&self, n: usize) -> usize {
        match *self {
            Self::Fraction(f) => ((f * n as f64).floor() as usize).min(n),
            Self::Count(c) => c.min(n),
            Self::Auto => {
                let nf = n as f64;
                ((nf / 2.0).min(100.0 + 6.0 * nf.sqrt()).floor() as usize).min(n)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtConfig {
    /// Number of boosting rounds `M`.
    pub trees: usize,
    /// Mean terminal-node count control `L̄ >= 2`.
    #[serde(serialize_with = "serialize_real")]
    pub mean_terminal: f64,
    #[serde(serialize_with = "serialize_real")]
    pub shrinkage: f64,
    pub subsample: Subsample,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for GbtConfig {
    fn default() -> Self {
        Self {
            trees: 333,
            mean_terminal: 2.0,
            shrinkage: 0.01,
            subsample: Subsample::Auto,
            min_leaf: 10,
            seed: 0,
        }
    }
}

impl GbtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trees == 0 {
            return Err(Error::Config("tree count must be positive".into()));
        }
        if !(self.mean_terminal >= 2.0) || !self.mean_terminal.is_finite() {
            return Err(Error::Config(format!(
                "mean terminal-node count {} must be at least 2",
                self.mean_terminal
            )));
        }
        if !(self.shrinkage > 0.0 && self.shrinkage <= 1.0) {
            return Err(Error::Config(format!(
                "shrinkage {} must lie in (0, 1]",
                self.shrinkage
            )));
        }
        match self.subsample {
            Subsample::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(Error::Config(format!("subsample fraction {f} must lie in (0, 1]")))
            }
            Subsample::Count(0) => {
                return Err(Error::Config("subsample count must be positive".into()))
            }
            _ => {}
        }
        if self.min_leaf == 0 {
            return Err(Error::Config("min_leaf must be positive".into()));
        }
        Ok(())
    }
}

/// `2 + floor(u)` with `u` exponential of mean `mean_terminal - 2`; exactly 2
/// when `mean_terminal == 2`.
pub fn draw_terminal_count<R: Rng + ?Sized>(mean_terminal: f64, rng: &mut R) -> Result<usize> {
    if !(mean_terminal >= 2.0) || !mean_terminal.is_finite() {
        return Err(Error::Config(format!(
            "mean terminal-node count {mean_terminal} must be at least 2"
        )));
    }
    if mean_terminal == 2.0 {
        return Ok(2);
    }
    let exp = Exp::new(1.0 / (mean_terminal - 2.0))
        .map_err(|e| Error::Config(format!("exponential rate: {e}")))?;
    let u: f64 = exp.sample(rng);
    // Saturating cast; a tree can never realize that many leaves anyway.
    Ok(2 + u.floor() as usize)
}

/// `initial + shrinkage * Σ tree(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostedEnsemble {
    pub initial: f64,
    pub shrinkage: f64,
    pub trees: Vec<RegressionTree>,
}

impl BoostedEnsemble {
    pub fn predict(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.initial + self.shrinkage * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    /// Predictions after the first `m` trees.
    pub fn predict_partial(&self, x: ArrayView1<'_, f64>, m: usize) -> f64 {
        self.initial
            + self.shrinkage * self.trees[..m].iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

/// Gradient boosting of least-squares trees on `targets`.
///
/// Pseudo-residuals are taken on all rows; each tree is grown on a fresh
/// subsample drawn without replacement, with a random terminal-node count.
pub fn fit_boosted(
    x: ArrayView2<'_, f64>,
    targets: &[f64],
    cfg: &GbtConfig,
) -> Result<BoostedEnsemble> {
    cfg.validate()?;
    let n = x.nrows();
    if targets.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: targets.len(),
        });
    }
    if n == 0 {
        return Err(Error::Validation("cannot boost on zero rows".into()));
    }
    let sub = cfg.subsample.size(n);
    if sub < 2 * cfg.min_leaf {
        return Err(Error::Config(format!(
            "subsample of {sub} rows is smaller than twice min_leaf ({})",
            cfg.min_leaf
        )));
    }
    let columns: Vec<Vec<f64>> = x.columns().into_iter().map(|c| c.to_vec()).collect();

    let initial = targets.iter().sum::<f64>() / n as f64;
    let mut fitted = vec![initial; n];
    let mut residual = vec![0.0; n];
    let mut count_rng = stream(cfg.seed, TERMINAL_COUNT_STREAM);
    let mut sample_rng = stream(cfg.seed, SUBSAMPLE_STREAM);
    let mut trees = Vec::with_capacity(cfg.trees);
    for _ in 0..cfg.trees {
        for i in 0..n {
            residual[i] = targets[i] - fitted[i];
        }
        let leaves = draw_terminal_count(cfg.mean_terminal, &mut count_rng)?;
        let mut rows = index::sample(&mut sample_rng, n, sub).into_vec();
        rows.sort_unstable();
        let tree = fit_tree(&rows, &residual, &columns, leaves, cfg.min_leaf);
        for (i, f) in fitted.iter_mut().enumerate() {
            *f += cfg.shrinkage * tree.predict_columns(&columns, i);
        }
        trees.push(tree);
    }
    Ok(BoostedEnsemble {
        initial,
        shrinkage: cfg.shrinkage,
        trees,
    })
}
