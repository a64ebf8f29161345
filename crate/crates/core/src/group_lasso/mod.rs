//! Group lasso with an unpenalized intercept and size-2 groups, solved by
//! exact block coordinate descent along a warm-started λ path.
//!
//! The objective is `½ Σ_i (y_i − θ0 − Σ_g z_igᵀθ_g)² + λ √2 Σ_g ‖θ_g‖₂` on
//! the raw design columns. Each block update minimizes it exactly over one
//! group in that group's centered eigenbasis.

mod cv;
mod solver;
mod subproblem;

pub use cv::{select_lambda, stratified_folds, LambdaSelection};
pub use solver::{
    lambda_max, lambda_path, objective_value, solve_path, solve_path_at, GroupSolution,
    SolverConfig, GROUP_WEIGHT,
};
pub use subproblem::{solve_block, Eigen2};
