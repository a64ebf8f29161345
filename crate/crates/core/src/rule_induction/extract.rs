use std::collections::VecDeque;

use super::boosting::BoostedEnsemble;
use super::tree::{RegressionTree, TreeNode};
use crate::basis::{dedup_rules, Condition, Rule};

/// Rule of every non-root node of `tree`, breadth-first.
///
/// Conditions met along the path on the same feature are intersected into a
/// single interval.
pub fn tree_rules(tree: &RegressionTree) -> Vec<Rule> {
    let nodes = tree.nodes();
    let mut out = Vec::new();
    let mut queue: VecDeque<(usize, Vec<Condition>)> = VecDeque::from([(0, Vec::new())]);
    while let Some((idx, path)) = queue.pop_front() {
        if idx != 0 {
            out.push(Rule::new(path.clone()).expect("tree paths define nonempty intervals"));
        }
        if let TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } = nodes[idx]
        {
            queue.push_back((left, narrow(&path, feature, f64::NEG_INFINITY, threshold)));
            queue.push_back((right, narrow(&path, feature, threshold, f64::INFINITY)));
        }
    }
    out
}

fn narrow(path: &[Condition], feature: usize, lo: f64, hi: f64) -> Vec<Condition> {
    let mut out = path.to_vec();
    match out.iter_mut().find(|c| c.feature == feature) {
        Some(c) => {
            c.lo = c.lo.max(lo);
            c.hi = c.hi.min(hi);
        }
        None => out.push(Condition { feature, lo, hi }),
    }
    out
}

/// All rules of all trees in tree order, before deduplication. A tree with
/// `t` leaves contributes `2 (t - 1)` rules.
pub fn compile_rules(ens: &BoostedEnsemble) -> Vec<Rule> {
    ens.trees.iter().flat_map(tree_rules).collect()
}

/// [`compile_rules`] with repeated condition sets removed (first kept).
pub fn extract_rules(ens: &BoostedEnsemble) -> Vec<Rule> {
    dedup_rules(compile_rules(ens))
}
