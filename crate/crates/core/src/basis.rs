//! Basis functions of the effect model: interval rules, winsorized linear
//! terms, and the treatment/control grouped design built from them.

use std::collections::HashSet;

use ndarray::{ArrayView1, ArrayView2};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numfmt::format_sig;

/// `lo <= x[feature] < hi`; either bound may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    pub feature: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Condition {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v < self.hi
    }
}

/// Conjunction of half-open interval conditions, at most one per feature,
/// kept sorted by feature index.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    conditions: Vec<Condition>,
}

impl Rule {
    pub fn new(mut conditions: Vec<Condition>) -> Result<Self> {
        if conditions.is_empty() {
            return Err(Error::Validation("a rule needs at least one condition".into()));
        }
        conditions.sort_by_key(|c| c.feature);
        for w in conditions.windows(2) {
            if w[0].feature == w[1].feature {
                return Err(Error::Validation(format!(
                    "feature {} constrained twice in one rule",
                    w[0].feature
                )));
            }
        }
        if let Some(c) = conditions.iter().find(|c| !(c.lo < c.hi) || c.lo.is_nan()) {
            return Err(Error::Validation(format!(
                "empty interval [{}, {}) on feature {}",
                c.lo, c.hi, c.feature
            )));
        }
        Ok(Self { conditions })
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn evaluate(&self, x: ArrayView1<'_, f64>) -> bool {
        self.conditions.iter().all(|c| c.contains(x[c.feature]))
    }

    pub fn max_feature(&self) -> usize {
        self.conditions.last().map_or(0, |c| c.feature)
    }

    /// Identity used for deduplication: feature indices and exact bound bits.
    pub fn key(&self) -> Vec<(usize, u64, u64)> {
        self.conditions
            .iter()
            .map(|c| (c.feature, c.lo.to_bits(), c.hi.to_bits()))
            .collect()
    }

    /// `x1 >= 0.5 & x3 < 1.25`, bounds with 6 significant digits.
    pub fn describe(&self, names: &[String]) -> String {
        self.conditions
            .iter()
            .map(|c| {
                let name = names
                    .get(c.feature)
                    .cloned()
                    .unwrap_or_else(|| format!("x{}", c.feature + 1));
                match (c.lo == f64::NEG_INFINITY, c.hi == f64::INFINITY) {
                    (true, true) => format!("{name} unrestricted"),
                    (true, false) => format!("{name} < {}", format_sig(c.hi, 6)),
                    (false, true) => format!("{name} >= {}", format_sig(c.lo, 6)),
                    (false, false) => format!(
                        "{} <= {name} < {}",
                        format_sig(c.lo, 6),
                        format_sig(c.hi, 6)
                    ),
                }
            })
            .collect::<Vec<_>>()
            .join(" & ")
    }
}

/// Rule indicator as 0 or 1.
pub fn evaluate_rule(rule: &Rule, x: ArrayView1<'_, f64>) -> u8 {
    u8::from(rule.evaluate(x))
}

/// Fraction of rows of `x` satisfying the rule.
pub fn support_in(rule: &Rule, x: ArrayView2<'_, f64>) -> f64 {
    let n = x.nrows();
    if n == 0 {
        return 0.0;
    }
    let hits = x.rows().into_iter().filter(|row| rule.evaluate(*row)).count();
    hits as f64 / n as f64
}

pub fn support(rule: &Rule, ds: &Dataset) -> f64 {
    support_in(rule, ds.x().view())
}

/// Drops rules whose condition sets repeat an earlier rule.
pub fn dedup_rules(rules: Vec<Rule>) -> Vec<Rule> {
    let mut seen = HashSet::new();
    rules.into_iter().filter(|r| seen.insert(r.key())).collect()
}

/// Empirical quantile by linear interpolation between order statistics
/// (`h = (n - 1) q`). `sorted` must be ascending and nonempty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Columns whose winsorized standard deviation falls below this are constant.
pub const MIN_LINEAR_STD: f64 = 1e-12;

/// Target standard deviation of a normalized linear term.
pub const LINEAR_TERM_STD: f64 = 0.4;

/// Winsorized and rescaled covariate `scale * clamp(x, delta_lo, delta_hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearTerm {
    pub feature: usize,
    pub delta_lo: f64,
    pub delta_hi: f64,
    /// `0.4 / std`, or 0 for a constant column.
    pub scale: f64,
}

impl LinearTerm {
    pub fn winsorize(&self, v: f64) -> f64 {
        v.max(self.delta_lo).min(self.delta_hi)
    }

    pub fn value(&self, v: f64) -> f64 {
        self.scale * self.winsorize(v)
    }

    pub fn is_included(&self) -> bool {
        self.scale > 0.0
    }
}

fn population_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    (values.map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// One term per covariate, bounds at the `q` and `1 - q` quantiles.
pub fn fit_linear_terms(ds: &Dataset, q: f64) -> Result<Vec<LinearTerm>> {
    fit_linear_terms_in(ds.x().view(), q)
}

pub fn fit_linear_terms_in(x: ArrayView2<'_, f64>, q: f64) -> Result<Vec<LinearTerm>> {
    if !(0.0..0.5).contains(&q) {
        return Err(Error::Config(format!("winsor quantile {q} must lie in [0, 0.5)")));
    }
    let terms = x
        .columns()
        .into_iter()
        .enumerate()
        .map(|(j, col)| {
            let mut sorted = col.to_vec();
            sorted.sort_by(f64::total_cmp);
            let mut term = LinearTerm {
                feature: j,
                delta_lo: quantile_sorted(&sorted, q),
                delta_hi: quantile_sorted(&sorted, 1.0 - q),
                scale: 0.0,
            };
            let std = population_std(col.iter().map(|&v| term.winsorize(v)));
            if std >= MIN_LINEAR_STD {
                term.scale = LINEAR_TERM_STD / std;
            }
            term
        })
        .collect();
    Ok(terms)
}

/// Sparse column: nonzero rows in ascending order and their values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseColumn {
    pub rows: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseColumn {
    pub fn from_dense(values: &[f64]) -> Self {
        let mut col = Self::default();
        for (i, &v) in values.iter().enumerate() {
            if v != 0.0 {
                col.rows.push(i as u32);
                col.values.push(v);
            }
        }
        col
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (&r, &v) in self.rows.iter().zip(&self.values) {
            out[r as usize] = v;
        }
        out
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.values)
            .map(|(&r, &v)| v * dense[r as usize])
            .sum()
    }

    pub fn axpy(&self, alpha: f64, dense: &mut [f64]) {
        for (&r, &v) in self.rows.iter().zip(&self.values) {
            dense[r as usize] += alpha * v;
        }
    }
}

/// What a design group was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    /// Index into the rule list passed to [`build_grouped_design`].
    Rule(usize),
    /// Index into the linear-term list passed to [`build_grouped_design`].
    Linear(usize),
    /// Group supplied directly as columns.
    Raw,
}

/// Two-column group: `(t * b(x), (1 - t) * b(x))` for a basis function `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignGroup {
    pub kind: GroupKind,
    pub treated: SparseColumn,
    pub control: SparseColumn,
}

impl DesignGroup {
    pub fn column(&self, k: usize) -> &SparseColumn {
        if k == 0 {
            &self.treated
        } else {
            &self.control
        }
    }
}

/// Design matrix of size-2 groups; rule groups first, then linear groups.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDesign {
    n: usize,
    groups: Vec<DesignGroup>,
}

impl GroupedDesign {
    pub fn new(n: usize, groups: Vec<DesignGroup>) -> Result<Self> {
        for g in &groups {
            for col in [&g.treated, &g.control] {
                if col.rows.len() != col.values.len()
                    || col.rows.iter().any(|&r| r as usize >= n)
                    || col.rows.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(Error::Validation(
                        "sparse column rows must be strictly increasing and below n".into(),
                    ));
                }
            }
        }
        Ok(Self { n, groups })
    }

    /// Groups given as dense column pairs.
    pub fn from_dense(n: usize, pairs: &[[Vec<f64>; 2]]) -> Result<Self> {
        let mut groups = Vec::with_capacity(pairs.len());
        for pair in pairs {
            if pair[0].len() != n || pair[1].len() != n {
                return Err(Error::Shape {
                    expected: n,
                    got: pair[0].len().min(pair[1].len()),
                });
            }
            groups.push(DesignGroup {
                kind: GroupKind::Raw,
                treated: SparseColumn::from_dense(&pair[0]),
                control: SparseColumn::from_dense(&pair[1]),
            });
        }
        Self::new(n, groups)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn groups(&self) -> &[DesignGroup] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// `intercept + Σ_g Z_g θ_g` for every row.
    pub fn predict(&self, intercept: f64, coefs: &[[f64; 2]]) -> Vec<f64> {
        let mut out = vec![intercept; self.n];
        for (g, theta) in self.groups.iter().zip(coefs) {
            g.treated.axpy(theta[0], &mut out);
            g.control.axpy(theta[1], &mut out);
        }
        out
    }

    /// Rows `idx` (strictly increasing) of every group.
    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut position = vec![u32::MAX; self.n];
        for (new, &old) in idx.iter().enumerate() {
            position[old] = new as u32;
        }
        let pick = |col: &SparseColumn| {
            let mut out = SparseColumn::default();
            for (&r, &v) in col.rows.iter().zip(&col.values) {
                let p = position[r as usize];
                if p != u32::MAX {
                    out.rows.push(p);
                    out.values.push(v);
                }
            }
            out
        };
        Self {
            n: idx.len(),
            groups: self
                .groups
                .iter()
                .map(|g| DesignGroup {
                    kind: g.kind,
                    treated: pick(&g.treated),
                    control: pick(&g.control),
                })
                .collect(),
        }
    }
}

/// Assembles `(t r_k, (1-t) r_k)` for each rule, then `(t l_j, (1-t) l_j)`
/// for each included linear term.
pub fn build_grouped_design(
    ds: &Dataset,
    rules: &[Rule],
    linear_terms: &[LinearTerm],
) -> GroupedDesign {
    build_grouped_design_in(ds.x().view(), ds.t(), rules, linear_terms)
}

pub fn build_grouped_design_in(
    x: ArrayView2<'_, f64>,
    t: &[u8],
    rules: &[Rule],
    linear_terms: &[LinearTerm],
) -> GroupedDesign {
    let n = x.nrows();
    let mut groups = Vec::with_capacity(rules.len() + linear_terms.len());
    for (k, rule) in rules.iter().enumerate() {
        let mut g = DesignGroup {
            kind: GroupKind::Rule(k),
            treated: SparseColumn::default(),
            control: SparseColumn::default(),
        };
        for (i, row) in x.rows().into_iter().enumerate() {
            if rule.evaluate(row) {
                let col = if t[i] == 1 { &mut g.treated } else { &mut g.control };
                col.rows.push(i as u32);
                col.values.push(1.0);
            }
        }
        groups.push(g);
    }
    for (j, term) in linear_terms.iter().enumerate() {
        if !term.is_included() {
            continue;
        }
        let mut g = DesignGroup {
            kind: GroupKind::Linear(j),
            treated: SparseColumn::default(),
            control: SparseColumn::default(),
        };
        for i in 0..n {
            let v = term.value(x[[i, term.feature]]);
            if v != 0.0 {
                let col = if t[i] == 1 { &mut g.treated } else { &mut g.control };
                col.rows.push(i as u32);
                col.values.push(v);
            }
        }
        groups.push(g);
    }
    GroupedDesign { n, groups }
}
