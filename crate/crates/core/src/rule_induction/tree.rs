//! Least-squares regression trees grown best-first to an exact leaf count.

use ndarray::ArrayView1;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    /// Rows with `x[feature] < threshold` go to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { value: f64, count: usize },
}

/// Node arena; `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn leaf(value: f64, count: usize) -> Self {
        Self {
            nodes: vec![TreeNode::Leaf { value, count }],
        }
    }

    pub fn from_nodes(nodes: Vec<TreeNode>) -> Self {
        assert!(!nodes.is_empty(), "a tree needs a root");
        Self { nodes }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    /// Index of the leaf whose region contains `x`.
    pub fn leaf_index(&self, x: ArrayView1<'_, f64>) -> usize {
        self.leaf_index_by(|j| x[j])
    }

    fn leaf_index_by(&self, x: impl Fn(usize) -> f64) -> usize {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => idx = if x(feature) < threshold { left } else { right },
                TreeNode::Leaf { .. } => return idx,
            }
        }
    }

    pub fn predict(&self, x: ArrayView1<'_, f64>) -> f64 {
        match self.nodes[self.leaf_index(x)] {
            TreeNode::Leaf { value, .. } => value,
            TreeNode::Split { .. } => unreachable!(),
        }
    }

    pub(crate) fn predict_columns(&self, columns: &[Vec<f64>], row: usize) -> f64 {
        match self.nodes[self.leaf_index_by(|j| columns[j][row])] {
            TreeNode::Leaf { value, .. } => value,
            TreeNode::Split { .. } => unreachable!(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Split {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Best SSE-reducing split of `rows`; ties go to the lowest feature, then the
/// lowest threshold.
fn best_split(
    rows: &[usize],
    targets: &[f64],
    columns: &[Vec<f64>],
    min_leaf: usize,
) -> Option<Split> {
    let n = rows.len();
    if n < 2 * min_leaf {
        return None;
    }
    let first = targets[rows[0]];
    if rows.iter().all(|&r| targets[r] == first) {
        return None;
    }
    let mean = rows.iter().map(|&r| targets[r]).sum::<f64>() / n as f64;
    let total: f64 = rows.iter().map(|&r| targets[r] - mean).sum();
    let base = total * total / n as f64;

    let mut best: Option<Split> = None;
    let mut order: Vec<usize> = rows.to_vec();
    for (j, col) in columns.iter().enumerate() {
        order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
        let mut left_sum = 0.0;
        for k in 1..n {
            left_sum += targets[order[k - 1]] - mean;
            if k < min_leaf || n - k < min_leaf {
                continue;
            }
            let lo = col[order[k - 1]];
            let hi = col[order[k]];
            if lo == hi {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / k as f64
                + right_sum * right_sum / (n - k) as f64
                - base;
            if best.is_none_or(|b| gain > b.gain) {
                let mut threshold = 0.5 * (lo + hi);
                if threshold <= lo {
                    threshold = hi;
                }
                best = Some(Split {
                    gain,
                    feature: j,
                    threshold,
                });
            }
        }
    }
    best.filter(|s| s.gain > 0.0)
}

/// Grows a tree on `rows` of `targets` until it has `terminal_count` leaves
/// or no admissible split remains. `columns[j][i]` is covariate `j` of row `i`.
///
/// At every step the leaf with the largest achievable SSE reduction is split
/// (earliest-created leaf on ties). Leaf values are target means.
pub fn fit_tree(
    rows: &[usize],
    targets: &[f64],
    columns: &[Vec<f64>],
    terminal_count: usize,
    min_leaf: usize,
) -> RegressionTree {
    let min_leaf = min_leaf.max(1);
    let mean_of = |rows: &[usize]| rows.iter().map(|&r| targets[r]).sum::<f64>() / rows.len() as f64;
    if rows.is_empty() {
        return RegressionTree::leaf(0.0, 0);
    }

    let mut nodes = vec![TreeNode::Leaf {
        value: mean_of(rows),
        count: rows.len(),
    }];
    // Open leaves: (node index, rows, best split).
    let mut open: Vec<(usize, Vec<usize>, Option<Split>)> = vec![(
        0,
        rows.to_vec(),
        best_split(rows, targets, columns, min_leaf),
    )];
    let mut leaves = 1;
    while leaves < terminal_count {
        let pick = open
            .iter()
            .enumerate()
            .filter_map(|(pos, (idx, _, s))| s.map(|s| (pos, *idx, s.gain)))
            .fold(None, |best: Option<(usize, usize, f64)>, cand| match best {
                Some(b) if b.2 > cand.2 || (b.2 == cand.2 && b.1 < cand.1) => Some(b),
                _ => Some(cand),
            });
        let Some((pos, _, _)) = pick else { break };
        let (idx, node_rows, split) = open.swap_remove(pos);
        let split = split.expect("picked leaf has a split");
        let col = &columns[split.feature];
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            node_rows.iter().partition(|&&r| col[r] < split.threshold);
        let left = nodes.len();
        let right = left + 1;
        nodes.push(TreeNode::Leaf {
            value: mean_of(&left_rows),
            count: left_rows.len(),
        });
        nodes.push(TreeNode::Leaf {
            value: mean_of(&right_rows),
            count: right_rows.len(),
        });
        nodes[idx] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        leaves += 1;
        let left_split = best_split(&left_rows, targets, columns, min_leaf);
        let right_split = best_split(&right_rows, targets, columns, min_leaf);
        open.push((left, left_rows, left_split));
        open.push((right, right_rows, right_split));
    }
    RegressionTree { nodes }
}
