//! Candidate rule generation: boosted regression trees on the transformed
//! outcome, compiled into interval rules.

mod boosting;
mod extract;
mod tree;

pub use boosting::{draw_terminal_count, fit_boosted, BoostedEnsemble, GbtConfig, Subsample};
pub use extract::{compile_rules, extract_rules, tree_rules};
pub use tree::{fit_tree, RegressionTree, TreeNode};
