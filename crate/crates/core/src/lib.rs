//! Interpretable estimation of heterogeneous treatment effects with causal
//! rule ensembles.
//!
//! Candidate rules come from gradient-boosted regression trees fitted to the
//! inverse-probability-weighted transformed outcome. Each rule and each
//! winsorized covariate then enters an outcome model with one coefficient per
//! treatment arm; a group lasso selects the pairs jointly, and the estimated
//! effect of a unit is the difference of its two arm predictions:
//!
//! ```text
//! F(x, t) = θ0 + t [Σ α_k r_k(x) + Σ α*_j l_j(x_j)] + (1 − t) [Σ β_k r_k(x) + Σ β*_j l_j(x_j)]
//! τ̂(x)    = F(x, 1) − F(x, 0)
//! ```
//!
//! The [`simulation`] module generates the twelve benchmark scenarios and
//! scores estimators on them.

pub mod basis;
pub mod data;
pub mod error;
pub mod group_lasso;
pub mod model;
pub mod numfmt;
pub mod rng;
pub mod rule_induction;
pub mod simulation;
pub mod transform;
pub mod tuning;

pub use data::{load_csv, ColumnSpec, Dataset};
pub use error::{Error, Result};
pub use model::{
    fit, fit_with_report, load_model, save_model, CausalRuleFitModel, FitConfig, ImportanceReport,
    ReportFilter,
};
pub use transform::PropensitySource;
