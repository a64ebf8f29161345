//! Shared helpers for the integration tests: random grouped designs, an
//! independent proximal-gradient group-lasso solver and a KKT checker.

#![allow(dead_code)]

use causal_rulefit::basis::GroupedDesign;
use causal_rulefit::group_lasso::{GroupSolution, GROUP_WEIGHT};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random problem in the shape the estimator produces: a 0/1 arm vector,
/// and per group a basis column `b` split into `(t·b, (1−t)·b)`. Basis
/// columns are rule indicators or Gaussian linear terms; the outcome mixes a
/// few of them with noise.
pub struct Instance {
    pub pairs: Vec<[Vec<f64>; 2]>,
    pub y: Vec<f64>,
}

impl Instance {
    pub fn random(seed: u64, n: usize, groups: usize) -> Self {
        let mut r = rng(seed);
        let t: Vec<f64> = (0..n).map(|_| f64::from(u8::from(r.random_bool(0.5)))).collect();
        let mut pairs = Vec::with_capacity(groups);
        let mut y: Vec<f64> = (0..n).map(|_| 0.5 * r.sample::<f64, _>(StandardNormal)).collect();
        for g in 0..groups {
            let basis: Vec<f64> = if g % 2 == 0 {
                let p = r.random_range(0.2..0.8);
                (0..n).map(|_| f64::from(u8::from(r.random_bool(p)))).collect()
            } else {
                (0..n).map(|_| r.sample(StandardNormal)).collect()
            };
            let pair = [
                basis.iter().zip(&t).map(|(b, t)| b * t).collect::<Vec<_>>(),
                basis.iter().zip(&t).map(|(b, t)| b * (1.0 - t)).collect::<Vec<_>>(),
            ];
            if g < 3 {
                let a = r.random_range(-2.0..2.0);
                let b = r.random_range(-2.0..2.0);
                for i in 0..n {
                    y[i] += a * pair[0][i] + b * pair[1][i];
                }
            }
            pairs.push(pair);
        }
        let shift = r.random_range(-3.0..3.0);
        y.iter_mut().for_each(|v| *v += shift);
        Self { pairs, y }
    }

    pub fn design(&self) -> GroupedDesign {
        GroupedDesign::from_dense(self.y.len(), &self.pairs).unwrap()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Solution of the group lasso by accelerated proximal gradient with
/// restarts, on dense centered columns. Written independently of the block
/// coordinate descent solver.
pub fn proximal_gradient(pairs: &[[Vec<f64>; 2]], y: &[f64], lambda: f64) -> (f64, Vec<[f64; 2]>) {
    let p = 2 * pairs.len();
    let cols: Vec<Vec<f64>> = pairs
        .iter()
        .flat_map(|pair| pair.iter())
        .map(|c| {
            let m = mean(c);
            c.iter().map(|v| v - m).collect()
        })
        .collect();
    let ybar = mean(y);
    let yc: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let gram: Vec<Vec<f64>> = (0..p)
        .map(|a| (0..p).map(|b| dot(&cols[a], &cols[b])).collect())
        .collect();
    let zy: Vec<f64> = cols.iter().map(|c| dot(c, &yc)).collect();

    // Largest eigenvalue of the Gram matrix by power iteration.
    let mut v = vec![1.0; p];
    let mut top = 0.0;
    for _ in 0..2000 {
        let w = matvec(&gram, &v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        top = norm;
        v = w.iter().map(|x| x / norm).collect();
    }
    let step = 1.0 / (top * 1.01).max(1e-300);
    let penalty = lambda * GROUP_WEIGHT;

    let objective = |th: &[f64]| {
        let gth = matvec(&gram, th);
        let quad = 0.5 * dot(th, &gth) - dot(th, &zy);
        let pen: f64 = th.chunks(2).map(|g| g[0].hypot(g[1])).sum();
        quad + penalty * pen
    };
    let prox = |u: &[f64]| -> Vec<f64> {
        u.chunks(2)
            .flat_map(|g| {
                let norm = g[0].hypot(g[1]);
                let k = if norm <= step * penalty { 0.0 } else { 1.0 - step * penalty / norm };
                [k * g[0], k * g[1]]
            })
            .collect()
    };

    let mut theta = vec![0.0; p];
    let mut z = theta.clone();
    let mut tk: f64 = 1.0;
    let mut f_old = objective(&theta);
    for _ in 0..500_000 {
        let grad: Vec<f64> = matvec(&gram, &z).iter().zip(&zy).map(|(a, b)| a - b).collect();
        let u: Vec<f64> = z.iter().zip(&grad).map(|(z, g)| z - step * g).collect();
        let next = prox(&u);
        let f_new = objective(&next);
        if f_new > f_old {
            if tk == 1.0 {
                // Even a plain step no longer descends: converged to rounding.
                break;
            }
            // Restart the momentum.
            z = theta.clone();
            tk = 1.0;
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * tk * tk).sqrt()) / 2.0;
        let moved = next
            .iter()
            .zip(&theta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        z = next
            .iter()
            .zip(&theta)
            .map(|(a, b)| a + (tk - 1.0) / t_next * (a - b))
            .collect();
        theta = next;
        tk = t_next;
        f_old = f_new;
        if moved < 1e-13 {
            break;
        }
    }
    let coefs: Vec<[f64; 2]> = theta.chunks(2).map(|g| [g[0], g[1]]).collect();
    let intercept = ybar
        - pairs
            .iter()
            .zip(&coefs)
            .map(|(pair, c)| mean(&pair[0]) * c[0] + mean(&pair[1]) * c[1])
            .sum::<f64>();
    (intercept, coefs)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

/// Largest stationarity violations `(active, inactive)` of a solution:
/// for active groups `‖Z_gᵀr − λ√2 θ_g/‖θ_g‖‖ / (1 + ‖Z_gᵀr‖)`, for
/// inactive groups `max(0, ‖Z_gᵀr‖ − λ√2)`.
pub fn kkt_violation(design: &GroupedDesign, y: &[f64], sol: &GroupSolution) -> (f64, f64) {
    let fitted = design.predict(sol.intercept, &sol.coefs);
    let r: Vec<f64> = y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let penalty = sol.lambda * GROUP_WEIGHT;
    let mut active: f64 = 0.0;
    let mut inactive: f64 = 0.0;
    for (g, th) in design.groups().iter().zip(&sol.coefs) {
        let grad = [g.treated.dot(&r), g.control.dot(&r)];
        let gnorm = grad[0].hypot(grad[1]);
        let tnorm = th[0].hypot(th[1]);
        if tnorm == 0.0 {
            inactive = inactive.max(gnorm - penalty);
        } else {
            let d0 = grad[0] - penalty * th[0] / tnorm;
            let d1 = grad[1] - penalty * th[1] / tnorm;
            active = active.max(d0.hypot(d1) / (1.0 + gnorm));
        }
    }
    (active, inactive)
}

/// Intercept stationarity: the residuals of an optimal fit sum to zero.
pub fn residual_sum(design: &GroupedDesign, y: &[f64], sol: &GroupSolution) -> f64 {
    let fitted = design.predict(sol.intercept, &sol.coefs);
    y.iter().zip(&fitted).map(|(y, f)| y - f).sum()
}
