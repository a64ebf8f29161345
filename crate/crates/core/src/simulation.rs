//! Simulation laboratory: the twelve benchmark outcome models, RCT and
//! observational treatment assignment, and an MSE benchmark harness.
//!
//! Outcomes follow `y = μ(x) + (t − ½) τ(x) + ε` with `ε ~ N(0, σ²)`.
//! Scenario `s` pairs `μ_{⌈s/4⌉}` with `τ_{((s−1) mod 4) + 1}`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{fit, FitConfig};
use crate::numfmt::format_real;
use crate::rng::{mix_seed, stream, SIMULATION_STREAM};
use crate::transform::PropensitySource;

/// Noise standard deviation; the noise variance is 0.25.
pub const DEFAULT_NOISE_SD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Design {
    /// Every unit treated with probability ½.
    Rct,
    /// Treatment probability `logistic(μ − τ/2)`.
    Observational,
}

impl Design {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rct => "rct",
            Self::Observational => "observational",
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rct" => Ok(Self::Rct),
            "obs" | "observational" => Ok(Self::Observational),
            _ => Err(Error::Config(format!(
                "design must be `rct` or `obs`, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    /// 1 to 12.
    pub scenario: u8,
    pub design: Design,
    pub n: usize,
    /// At least 5: the outcome models read x1..x5.
    pub p: usize,
    pub seed: u64,
    /// Noise standard deviation; 0 gives noise-free outcomes.
    pub noise_sd: f64,
}

impl ScenarioSpec {
    pub fn new(scenario: u8, design: Design, n: usize, p: usize, seed: u64) -> Result<Self> {
        let spec = Self {
            scenario,
            design,
            n,
            p,
            seed,
            noise_sd: DEFAULT_NOISE_SD,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=12).contains(&self.scenario) {
            return Err(Error::Config(format!(
                "scenario must be between 1 and 12, got {}",
                self.scenario
            )));
        }
        if self.n == 0 {
            return Err(Error::Config("N must be positive".into()));
        }
        if self.p < 5 {
            return Err(Error::Config(format!("p must be at least 5, got {}", self.p)));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return Err(Error::Config(format!(
                "noise sd {} must be finite and non-negative",
                self.noise_sd
            )));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    /// Carries the true propensities as its score column.
    pub dataset: Dataset,
    pub true_tau: Vec<f64>,
    pub true_mu: Vec<f64>,
}

impl SimulatedData {
    /// Writes `y, t, pscore, x1..xp, true_tau`, one row per unit.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let ds = &self.dataset;
        let t: Vec<f64> = ds.t().iter().map(|&v| f64::from(v)).collect();
        let pscore = ds.pscore().expect("simulated data carry propensities");
        let xcols: Vec<Vec<f64>> = ds.x().columns().into_iter().map(|c| c.to_vec()).collect();
        let mut columns: Vec<(&str, &[f64])> = vec![("y", ds.y()), ("t", &t), ("pscore", pscore)];
        for (name, col) in ds.feature_names().iter().zip(&xcols) {
            columns.push((name, col));
        }
        columns.push(("true_tau", &self.true_tau));
        crate::data::write_csv(path, &columns)
    }
}

/// Odd columns (x1, x3, ...) standard normal, even columns Bernoulli(½).
pub fn gen_covariates<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Array2<f64> {
    let mut x = Array2::zeros((n, p));
    for mut row in x.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if j % 2 == 0 {
                rng.sample(StandardNormal)
            } else {
                f64::from(u8::from(rng.random::<bool>()))
            };
        }
    }
    x
}

fn indicator(b: bool) -> f64 {
    f64::from(u8::from(b))
}

/// Covariate effect `μ(x)` of a scenario.
pub fn mu(scenario: u8, x: ArrayView1<'_, f64>) -> f64 {
    match (scenario - 1) / 4 {
        0 => -0.25 + 0.5 * (x[0] + x[1] + x[2]),
        1 => 0.7 * indicator(x[0] > -1.0) - 1.4 * indicator(x[1] > 0.0) + 0.7 * indicator(x[2] > 1.0),
        _ => (x[0] + x[2]).sin().powi(2) - 2.0 * x[1] * (-(x[3] - x[4]).powi(2)).exp(),
    }
}

/// Treatment effect `τ(x)` of a scenario.
pub fn tau(scenario: u8, x: ArrayView1<'_, f64>) -> f64 {
    match (scenario - 1) % 4 {
        0 => 2.0,
        1 => x[0] + x[1] + x[2] - x[3] + x[4],
        2 => 2.0 * (0..5).map(|j| indicator(x[j] > 0.0)).sum::<f64>() - 5.0,
        _ => {
            (x[0] * x[0] + x[2] * x[2] + x[4] * x[4] + 4.0 * x[1] * (1.0 - x[3]) - 4.0)
                / std::f64::consts::SQRT_2
        }
    }
}

/// Treatment indicators and their probabilities.
pub fn assign_treatment<R: Rng + ?Sized>(
    design: Design,
    mu_vals: &[f64],
    tau_vals: &[f64],
    rng: &mut R,
) -> Result<(Vec<u8>, Vec<f64>)> {
    if mu_vals.len() != tau_vals.len() {
        return Err(Error::Shape {
            expected: mu_vals.len(),
            got: tau_vals.len(),
        });
    }
    let pi: Vec<f64> = match design {
        Design::Rct => vec![0.5; mu_vals.len()],
        Design::Observational => mu_vals
            .iter()
            .zip(tau_vals)
            .map(|(m, t)| logistic(m - t / 2.0))
            .collect(),
    };
    let t = pi.iter().map(|&p| u8::from(rng.random::<f64>() < p)).collect();
    Ok((t, pi))
}

/// `1 / (1 + e^{−z})`, evaluated without overflow.
fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Draws one dataset. Covariates, treatment and noise come from one seeded
/// stream in that order, so a noise-free draw shares covariates and
/// treatments with the noisy draw of the same seed.
pub fn gen_scenario(spec: &ScenarioSpec) -> Result<SimulatedData> {
    spec.validate()?;
    let mut rng = stream(spec.seed, SIMULATION_STREAM);
    let x = gen_covariates(spec.n, spec.p, &mut rng);
    let true_mu: Vec<f64> = x.rows().into_iter().map(|r| mu(spec.scenario, r)).collect();
    let true_tau: Vec<f64> = x.rows().into_iter().map(|r| tau(spec.scenario, r)).collect();
    let (t, pi) = assign_treatment(spec.design, &true_mu, &true_tau, &mut rng)?;
    let y: Vec<f64> = (0..spec.n)
        .map(|i| {
            let eps: f64 = rng.sample(StandardNormal);
            true_mu[i] + (f64::from(t[i]) - 0.5) * true_tau[i] + spec.noise_sd * eps
        })
        .collect();
    let names = (1..=spec.p).map(|j| format!("x{j}")).collect();
    let t: Vec<f64> = t.into_iter().map(f64::from).collect();
    // Logistic scores can round to exactly 0 or 1 for extreme μ − τ/2.
    let pi = pi.into_iter().map(|p| p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)).collect();
    Ok(SimulatedData {
        dataset: Dataset::new(y, t, x, Some(pi), names)?,
        true_tau,
        true_mu,
    })
}

/// Mean squared error `(1/N) Σ (truth − estimate)²`.
pub fn mse(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(Error::Shape {
            expected: truth.len(),
            got: estimate.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Validation("mse of empty sequences".into()));
    }
    Ok(truth
        .iter()
        .zip(estimate)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / truth.len() as f64)
}

/// Difference of arm means `ȳ₁ − ȳ₀`.
pub fn difference_in_means(ds: &Dataset) -> Result<f64> {
    ds.require_both_arms()?;
    let mut sum = [0.0; 2];
    let mut count = [0usize; 2];
    for (&y, &t) in ds.y().iter().zip(ds.t()) {
        sum[usize::from(t)] += y;
        count[usize::from(t)] += 1;
    }
    Ok(sum[1] / count[1] as f64 - sum[0] / count[0] as f64)
}

/// Anything that estimates τ on a test set after seeing a training set.
pub trait HteEstimator: Sync {
    fn name(&self) -> &str;

    fn estimate(&self, train: &SimulatedData, test: &SimulatedData, seed: u64) -> Result<Vec<f64>>;
}

/// The rule ensemble, fitted with the true propensities.
#[derive(Debug, Clone, Default)]
pub struct CausalRuleFit {
    pub config: FitConfig,
}

impl HteEstimator for CausalRuleFit {
    fn name(&self) -> &str {
        "causal-rulefit"
    }

    fn estimate(&self, train: &SimulatedData, test: &SimulatedData, seed: u64) -> Result<Vec<f64>> {
        let cfg = self.config.clone().with_seed(seed);
        let model = fit(&train.dataset, PropensitySource::Column, &cfg)?;
        model.predict_hte_rows(test.dataset.x().view())
    }
}

/// Constant estimate `ȳ₁ − ȳ₀` from the training set.
#[derive(Debug, Clone, Copy, Default)]
pub struct DifferenceInMeans;

impl HteEstimator for DifferenceInMeans {
    fn name(&self) -> &str {
        "difference-in-means"
    }

    fn estimate(&self, train: &SimulatedData, test: &SimulatedData, _seed: u64) -> Result<Vec<f64>> {
        Ok(vec![difference_in_means(&train.dataset)?; test.dataset.n()])
    }
}

/// Returns the true effect.
#[derive(Debug, Clone, Copy, Default)]
pub struct Oracle;

impl HteEstimator for Oracle {
    fn name(&self) -> &str {
        "oracle"
    }

    fn estimate(&self, _train: &SimulatedData, test: &SimulatedData, _seed: u64) -> Result<Vec<f64>> {
        Ok(test.true_tau.clone())
    }
}

/// τ̂ ≡ 0, the effect estimate of an intercept-only model.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroEffect;

impl HteEstimator for ZeroEffect {
    fn name(&self) -> &str {
        "zero"
    }

    fn estimate(&self, _train: &SimulatedData, test: &SimulatedData, _seed: u64) -> Result<Vec<f64>> {
        Ok(vec![0.0; test.dataset.n()])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub scenario: u8,
    pub design: Design,
    pub p: usize,
    pub replication: usize,
    /// Seed of this replication; train and test draws derive from it.
    pub seed: u64,
    /// `None` when the estimator failed.
    pub mse: Option<f64>,
    /// `ok`, or the error message.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkResult {
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.mse.is_none()).count()
    }

    /// Median MSE of the successful replications.
    pub fn median(&self) -> Option<f64> {
        let vals: Vec<f64> = self.rows.iter().filter_map(|r| r.mse).collect();
        median(&vals)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        w.write_record(["scenario", "design", "p", "replication", "seed", "mse", "status"])
            .map_err(csv_error)?;
        for r in &self.rows {
            w.write_record([
                r.scenario.to_string(),
                r.design.to_string(),
                r.p.to_string(),
                r.replication.to_string(),
                r.seed.to_string(),
                r.mse.map(format_real).unwrap_or_default(),
                r.status.clone(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Middle value, or the mean of the two middle values; `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

/// Seed of replication `r`.
pub fn replication_seed(seed: u64, r: usize) -> u64 {
    mix_seed(seed, r as u64)
}

/// Independent train and test draws of replication `r`, both of size N.
pub fn replication_data(spec: &ScenarioSpec, r: usize) -> Result<(SimulatedData, SimulatedData)> {
    let seed = replication_seed(spec.seed, r);
    let train = gen_scenario(&spec.with_seed(mix_seed(seed, 0)))?;
    let test = gen_scenario(&spec.with_seed(mix_seed(seed, 1)))?;
    Ok((train, test))
}

/// Fits `estimator` on each replication's training set and scores τ̂ on its
/// test set. Replications run in parallel; the result does not depend on
/// scheduling. Failed replications are recorded, not propagated.
pub fn run_benchmark(
    spec: &ScenarioSpec,
    estimator: &dyn HteEstimator,
    replications: usize,
) -> Result<BenchmarkResult> {
    spec.validate()?;
    if replications == 0 {
        return Err(Error::Config("at least one replication is required".into()));
    }
    let rows = (0..replications)
        .into_par_iter()
        .map(|r| {
            let seed = replication_seed(spec.seed, r);
            let outcome = replication_data(spec, r).and_then(|(train, test)| {
                let est = estimator.estimate(&train, &test, seed)?;
                mse(&test.true_tau, &est)
            });
            let (mse, status) = match outcome {
                Ok(m) => (Some(m), "ok".to_string()),
                Err(e) => (None, format!("error: {e}")),
            };
            BenchmarkRow {
                scenario: spec.scenario,
                design: spec.design,
                p: spec.p,
                replication: r,
                seed,
                mse,
                status,
            }
        })
        .collect();
    Ok(BenchmarkResult { rows })
}
