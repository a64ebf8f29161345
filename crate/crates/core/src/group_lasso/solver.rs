use serde::{Deserialize, Serialize};

use super::subproblem::{solve_block, Eigen2};
use crate::basis::GroupedDesign;
use crate::error::{Error, Result};
use crate::numfmt::serialize_real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub path_length: usize,
    #[serde(serialize_with = "serialize_real")]
    pub path_min_ratio: f64,
    /// A sweep sequence is converged once the squared change of the fitted
    /// values over one sweep is at most this fraction of `‖y − ȳ‖₂²`.
    #[serde(serialize_with = "serialize_real")]
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub cv_folds: usize,
    pub cv_repeats: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            path_length: 100,
            path_min_ratio: 1e-3,
            tolerance: 1e-7,
            max_sweeps: 100_000,
            cv_folds: 10,
            cv_repeats: 1,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.path_length == 0 || self.max_sweeps == 0 || self.cv_folds == 0 || self.cv_repeats == 0 {
            return Err(Error::Config(
                "path length, sweep limit, folds and repeats must be positive".into(),
            ));
        }
        if !(self.path_min_ratio > 0.0 && self.path_min_ratio < 1.0) {
            return Err(Error::Config(format!(
                "lambda min ratio {} must lie in (0, 1)",
                self.path_min_ratio
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Solution at one penalty level.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSolution {
    pub intercept: f64,
    /// `(treated, control)` coefficients of every group, on the raw column scale.
    pub coefs: Vec<[f64; 2]>,
    pub lambda: f64,
    /// `½ Σ r² + λ √2 Σ ‖θ_g‖₂` at the stored coefficients.
    pub objective: f64,
    pub sweeps: usize,
}

impl GroupSolution {
    pub fn active_groups(&self) -> usize {
        self.coefs.iter().filter(|c| c[0] != 0.0 || c[1] != 0.0).count()
    }
}

/// Every group's penalty weight.
pub const GROUP_WEIGHT: f64 = std::f64::consts::SQRT_2;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Smallest λ at which every group is zero: `max_g ‖Z_gᵀ(y − ȳ)‖₂ / √2`.
pub fn lambda_max(design: &GroupedDesign, y: &[f64]) -> Result<f64> {
    check_shape(design, y)?;
    let all_zero = design
        .groups()
        .iter()
        .all(|g| g.treated.values.iter().chain(&g.control.values).all(|&v| v == 0.0));
    if design.is_empty() || all_zero {
        return Err(Error::Degenerate("design has no nonzero column".into()));
    }
    let ybar = mean(y);
    let centered: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    Ok(design
        .groups()
        .iter()
        .map(|g| g.treated.dot(&centered).hypot(g.control.dot(&centered)))
        .fold(0.0, f64::max)
        / GROUP_WEIGHT)
}

/// `path_length` values log-spaced from `lambda_max` down to
/// `lambda_max * path_min_ratio`.
pub fn lambda_path(lambda_max: f64, cfg: &SolverConfig) -> Vec<f64> {
    let steps = cfg.path_length;
    if steps == 1 {
        return vec![lambda_max];
    }
    let log_ratio = cfg.path_min_ratio.ln();
    (0..steps)
        .map(|k| {
            if k == 0 {
                lambda_max
            } else {
                lambda_max * (log_ratio * k as f64 / (steps - 1) as f64).exp()
            }
        })
        .collect()
}

fn check_shape(design: &GroupedDesign, y: &[f64]) -> Result<()> {
    if design.n() != y.len() {
        return Err(Error::Shape {
            expected: design.n(),
            got: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::Validation("no observations".into()));
    }
    Ok(())
}

/// Per-group constants: column means, centered Gram matrix and its eigenbasis.
struct Block {
    means: [f64; 2],
    eig: Eigen2,
    gram: [[f64; 2]; 2],
}

fn prepare(design: &GroupedDesign) -> Vec<Block> {
    let n = design.n() as f64;
    design
        .groups()
        .iter()
        .map(|g| {
            let means = [g.treated.sum() / n, g.control.sum() / n];
            let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
            let cross = sparse_cross(&g.treated.rows, &g.treated.values, &g.control.rows, &g.control.values);
            let gram = [
                [sq(&g.treated.values) - n * means[0] * means[0], cross - n * means[0] * means[1]],
                [cross - n * means[0] * means[1], sq(&g.control.values) - n * means[1] * means[1]],
            ];
            Block {
                means,
                eig: Eigen2::of(gram),
                gram,
            }
        })
        .collect()
}

fn sparse_cross(ra: &[u32], va: &[f64], rb: &[u32], vb: &[f64]) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < ra.len() && j < rb.len() {
        match ra[i].cmp(&rb[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += va[i] * vb[j];
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// Block coordinate descent state. The true residual of the centered problem
/// is `stored[i] - shift`; rank-one intercept corrections go into `shift`.
struct State<'a> {
    design: &'a GroupedDesign,
    blocks: Vec<Block>,
    y: &'a [f64],
    ybar: f64,
    /// `‖y − ȳ‖₂²`, the yardstick for squared changes of the fitted values.
    scale: f64,
    coefs: Vec<[f64; 2]>,
    stored: Vec<f64>,
    shift: f64,
}

impl<'a> State<'a> {
    fn new(design: &'a GroupedDesign, y: &'a [f64]) -> Self {
        let mut state = Self {
            design,
            blocks: prepare(design),
            y,
            ybar: mean(y),
            scale: {
                let m = mean(y);
                y.iter().map(|v| (v - m).powi(2)).sum::<f64>()
            },
            coefs: vec![[0.0; 2]; design.len()],
            stored: Vec::new(),
            shift: 0.0,
        };
        state.refresh_residual();
        state
    }

    fn refresh_residual(&mut self) {
        self.stored = self.y.iter().map(|v| v - self.ybar).collect();
        self.shift = 0.0;
        for ((g, b), th) in self.design.groups().iter().zip(&self.blocks).zip(&self.coefs) {
            g.treated.axpy(-th[0], &mut self.stored);
            g.control.axpy(-th[1], &mut self.stored);
            self.shift -= b.means[0] * th[0] + b.means[1] * th[1];
        }
    }

    /// `C_gᵀ r` for the centered columns of group `g`.
    fn gradient(&self, g: usize) -> [f64; 2] {
        let grp = &self.design.groups()[g];
        let n = self.design.n() as f64;
        let m = self.blocks[g].means;
        [
            grp.treated.dot(&self.stored) - self.shift * n * m[0],
            grp.control.dot(&self.stored) - self.shift * n * m[1],
        ]
    }

    /// Exact block minimization of group `g`; returns the squared change of
    /// the fitted values it caused.
    fn update(&mut self, g: usize, penalty: f64) -> f64 {
        let grad = self.gradient(g);
        let block = &self.blocks[g];
        let th = self.coefs[g];
        let b = [
            grad[0] + block.gram[0][0] * th[0] + block.gram[0][1] * th[1],
            grad[1] + block.gram[1][0] * th[0] + block.gram[1][1] * th[1],
        ];
        let new = solve_block(&block.eig, b, penalty);
        let delta = [new[0] - th[0], new[1] - th[1]];
        if delta == [0.0, 0.0] {
            return 0.0;
        }
        let grp = &self.design.groups()[g];
        grp.treated.axpy(-delta[0], &mut self.stored);
        grp.control.axpy(-delta[1], &mut self.stored);
        self.shift -= block.means[0] * delta[0] + block.means[1] * delta[1];
        self.coefs[g] = new;
        let a = &block.gram;
        delta[0] * (a[0][0] * delta[0] + a[0][1] * delta[1])
            + delta[1] * (a[1][0] * delta[0] + a[1][1] * delta[1])
    }

    fn intercept(&self) -> f64 {
        self.ybar
            - self
                .blocks
                .iter()
                .zip(&self.coefs)
                .map(|(b, th)| b.means[0] * th[0] + b.means[1] * th[1])
                .sum::<f64>()
    }

    fn sweep(&mut self, groups: impl Iterator<Item = usize>, penalty: f64) -> f64 {
        let mut change = 0.0;
        for g in groups {
            change += self.update(g, penalty);
        }
        change
    }

    fn converged(&self, change: f64, tol: f64) -> bool {
        change <= tol * self.scale
    }

    /// The objective from the maintained residual, without a pass over the
    /// design.
    fn running_objective(&self, lambda: f64) -> f64 {
        let rss: f64 = self.stored.iter().map(|r| (r - self.shift).powi(2)).sum();
        let pen: f64 = self.coefs.iter().map(|th| th[0].hypot(th[1])).sum();
        0.5 * rss + lambda * GROUP_WEIGHT * pen
    }

    fn objective(&self, lambda: f64) -> f64 {
        objective_value(self.design, self.y, self.intercept(), &self.coefs, lambda)
    }

    fn solution(&self, lambda: f64, sweeps: usize) -> GroupSolution {
        GroupSolution {
            intercept: self.intercept(),
            coefs: self.coefs.clone(),
            lambda,
            objective: self.objective(lambda),
            sweeps,
        }
    }

    fn solve(&mut self, lambda: f64, cfg: &SolverConfig) -> Result<GroupSolution> {
        let penalty = lambda * GROUP_WEIGHT;
        let n_groups = self.coefs.len();
        self.refresh_residual();
        let mut sweeps = 0;
        let mut last_objective = if cfg!(debug_assertions) {
            self.running_objective(lambda)
        } else {
            0.0
        };
        let mut tick = |state: &State, sweeps: &mut usize| -> Result<()> {
            *sweeps += 1;
            if cfg!(debug_assertions) {
                let obj = state.running_objective(lambda);
                debug_assert!(
                    obj <= last_objective + 1e-9 * (1.0 + last_objective.abs()),
                    "objective increased from {last_objective} to {obj} at lambda {lambda}"
                );
                last_objective = obj;
            }
            if *sweeps > cfg.max_sweeps {
                return Err(Error::Convergence {
                    lambda,
                    sweeps: *sweeps,
                    last: Box::new(state.solution(lambda, *sweeps)),
                });
            }
            Ok(())
        };
        loop {
            let change = self.sweep(0..n_groups, penalty);
            tick(self, &mut sweeps)?;
            if self.converged(change, cfg.tolerance) {
                break;
            }
            let active: Vec<usize> = (0..n_groups)
                .filter(|&g| self.coefs[g] != [0.0, 0.0])
                .collect();
            loop {
                let change = self.sweep(active.iter().copied(), penalty);
                tick(self, &mut sweeps)?;
                if self.converged(change, cfg.tolerance) {
                    break;
                }
            }
        }
        Ok(self.solution(lambda, sweeps))
    }
}

/// `½ Σ (y − θ0 − Zθ)² + λ √2 Σ_g ‖θ_g‖₂`, evaluated from scratch.
pub fn objective_value(
    design: &GroupedDesign,
    y: &[f64],
    intercept: f64,
    coefs: &[[f64; 2]],
    lambda: f64,
) -> f64 {
    let fitted = design.predict(intercept, coefs);
    let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
    let penalty: f64 = coefs.iter().map(|c| c[0].hypot(c[1])).sum();
    0.5 * rss + lambda * GROUP_WEIGHT * penalty
}

/// Solutions along `lambdas` (descending), each warm-started from the last.
pub fn solve_path_at(
    design: &GroupedDesign,
    y: &[f64],
    lambdas: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<GroupSolution>> {
    check_shape(design, y)?;
    let mut state = State::new(design, y);
    lambdas.iter().map(|&l| state.solve(l, cfg)).collect()
}

/// Full regularization path from `lambda_max` down.
///
/// An empty design yields intercept-only solutions at λ = 0.
pub fn solve_path(
    design: &GroupedDesign,
    y: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<GroupSolution>> {
    cfg.validate()?;
    check_shape(design, y)?;
    let lambdas = match lambda_max(design, y) {
        Ok(top) => lambda_path(top, cfg),
        Err(Error::Degenerate(_)) => vec![0.0],
        Err(e) => return Err(e),
    };
    solve_path_at(design, y, &lambdas, cfg)
}
