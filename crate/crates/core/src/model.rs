//! End-to-end fitting, prediction, importance reporting and persistence of
//! the causal rule ensemble
//!
//! `F(x, t) = θ0 + t [Σ α_k r_k(x) + Σ α*_j l_j(x_j)] + (1 − t) [Σ β_k r_k(x) + Σ β*_j l_j(x_j)]`
//!
//! whose treatment effect is `τ̂(x) = F(x, 1) − F(x, 0)`.

use std::fs;
use std::path::Path;

use ndarray::ArrayView1;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::basis::{
    build_grouped_design, fit_linear_terms, support, Condition, GroupKind, LinearTerm, Rule,
    LINEAR_TERM_STD,
};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::group_lasso::{select_lambda, solve_path_at, LambdaSelection, SolverConfig};
use crate::numfmt::serialize_real;
use crate::rule_induction::{compile_rules, fit_boosted, GbtConfig};
use crate::transform::{clip_propensity, resolve_propensity, transformed_outcome_from, PropensitySource};

/// Version written to and required from model files.
pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub gbt: GbtConfig,
    pub solver: SolverConfig,
    /// Winsorizing quantile `q` of the linear terms.
    #[serde(serialize_with = "serialize_real")]
    pub winsor_q: f64,
    /// Clamp propensities into `[eps, 1 - eps]` before weighting.
    #[serde(serialize_with = "serialize_opt_real")]
    pub clip_propensity: Option<f64>,
    /// Subtract the outcome mean before the IPW transform.
    ///
    /// The transform stays unbiased for τ (the shift has the same mean in
    /// both arms) and the generated rules no longer depend on the outcome's
    /// location, so shifting `y` only moves the intercept.
    pub center_outcome: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            gbt: GbtConfig::default(),
            solver: SolverConfig::default(),
            winsor_q: 0.025,
            clip_propensity: None,
            center_outcome: true,
        }
    }
}

impl FitConfig {
    /// Defaults with every random stream keyed by `seed`.
    pub fn seeded(seed: u64) -> Self {
        Self::default().with_seed(seed)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.gbt.seed = seed;
        self.solver.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.gbt.validate()?;
        self.solver.validate()?;
        if !(0.0..0.5).contains(&self.winsor_q) {
            return Err(Error::Config(format!(
                "winsor quantile {} must lie in [0, 0.5)",
                self.winsor_q
            )));
        }
        if let Some(eps) = self.clip_propensity {
            if !(eps > 0.0 && eps < 0.5) {
                return Err(Error::Config(format!("clip epsilon {eps} must lie in (0, 0.5)")));
            }
        }
        Ok(())
    }
}

fn serialize_opt_real<S: Serializer>(value: &Option<f64>, serializer: S) -> std::result::Result<S::Ok, S::Error> {
    match value {
        Some(v) => serialize_real(v, serializer),
        None => serializer.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleEntry {
    pub rule: Rule,
    pub alpha: f64,
    pub beta: f64,
    /// Fraction of training rows satisfying the rule.
    pub support: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearEntry {
    pub term: LinearTerm,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitMeta {
    pub seed: u64,
    pub lambda: f64,
    pub n: usize,
    pub p: usize,
    pub feature_names: Vec<String>,
    /// Cross-validated error at the chosen λ; absent for intercept-only fits.
    pub cv_error: Option<f64>,
    pub propensity: PropensitySource,
    pub config: FitConfig,
}

/// Fitted model. Only terms with a nonzero coefficient pair are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalRuleFitModel {
    pub intercept: f64,
    pub rules: Vec<RuleEntry>,
    pub linear: Vec<LinearEntry>,
    pub meta: FitMeta,
}

/// Counts from the intermediate stages of [`fit_with_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: CausalRuleFitModel,
    /// Rules compiled from the trees, `Σ 2 (t_m − 1)`.
    pub raw_rule_count: usize,
    /// Distinct rules after deduplication.
    pub unique_rule_count: usize,
    /// Rules with training support strictly inside (0, 1).
    pub candidate_rule_count: usize,
    /// Leaf counts of the boosted trees.
    pub terminal_counts: Vec<usize>,
    /// Linear terms of non-constant covariates.
    pub linear_term_count: usize,
    /// `None` when no candidate group survived and no λ was selected.
    pub selection: Option<LambdaSelection>,
}

pub fn fit(ds: &Dataset, ps: PropensitySource, cfg: &FitConfig) -> Result<CausalRuleFitModel> {
    fit_with_report(ds, ps, cfg).map(|r| r.model)
}

/// Fits the model and reports stage diagnostics.
pub fn fit_with_report(ds: &Dataset, ps: PropensitySource, cfg: &FitConfig) -> Result<FitReport> {
    cfg.validate()?;
    ds.require_both_arms()?;
    let n = ds.n();

    let mut pi = resolve_propensity(ds, ps)?;
    if let Some(eps) = cfg.clip_propensity {
        clip_propensity(&mut pi, eps)?;
    }
    let y_mean = ds.y().iter().sum::<f64>() / n as f64;
    let y_for_rules: Vec<f64> = if cfg.center_outcome {
        ds.y().iter().map(|v| v - y_mean).collect()
    } else {
        ds.y().to_vec()
    };
    let pseudo = transformed_outcome_from(&y_for_rules, ds.t(), &pi)?;

    let ensemble = fit_boosted(ds.x().view(), &pseudo, &cfg.gbt)?;
    let terminal_counts: Vec<usize> = ensemble.trees.iter().map(|t| t.leaf_count()).collect();
    let raw = compile_rules(&ensemble);
    let raw_rule_count = raw.len();
    let unique = crate::basis::dedup_rules(raw);
    let unique_rule_count = unique.len();
    let (rules, supports): (Vec<Rule>, Vec<f64>) = unique
        .into_iter()
        .map(|r| {
            let s = support(&r, ds);
            (r, s)
        })
        .filter(|&(_, s)| s > 0.0 && s < 1.0)
        .unzip();

    let linear_terms = fit_linear_terms(ds, cfg.winsor_q)?;
    let linear_term_count = linear_terms.iter().filter(|l| l.is_included()).count();
    let design = build_grouped_design(ds, &rules, &linear_terms);

    let meta = |lambda, cv_error| FitMeta {
        seed: cfg.gbt.seed,
        lambda,
        n,
        p: ds.p(),
        feature_names: ds.feature_names().to_vec(),
        cv_error,
        propensity: ps,
        config: cfg.clone(),
    };

    if design.is_empty() {
        return Ok(FitReport {
            model: CausalRuleFitModel {
                intercept: y_mean,
                rules: Vec::new(),
                linear: Vec::new(),
                meta: meta(0.0, None),
            },
            raw_rule_count,
            unique_rule_count,
            candidate_rule_count: rules.len(),
            terminal_counts,
            linear_term_count,
            selection: None,
        });
    }

    let selection = select_lambda(&design, ds.y(), ds.t(), &cfg.solver)?;
    let path = solve_path_at(
        &design,
        ds.y(),
        &selection.lambdas[..=selection.best_index],
        &cfg.solver,
    )?;
    let sol = path.last().expect("path has at least one λ");

    let mut model = CausalRuleFitModel {
        intercept: sol.intercept,
        rules: Vec::new(),
        linear: Vec::new(),
        meta: meta(selection.best_lambda(), Some(selection.best_error())),
    };
    for (group, coef) in design.groups().iter().zip(&sol.coefs) {
        if coef[0] == 0.0 && coef[1] == 0.0 {
            continue;
        }
        match group.kind {
            GroupKind::Rule(k) => model.rules.push(RuleEntry {
                rule: rules[k].clone(),
                alpha: coef[0],
                beta: coef[1],
                support: supports[k],
            }),
            GroupKind::Linear(j) => model.linear.push(LinearEntry {
                term: linear_terms[j],
                alpha: coef[0],
                beta: coef[1],
            }),
            GroupKind::Raw => unreachable!("fit builds rule and linear groups only"),
        }
    }
    Ok(FitReport {
        model,
        raw_rule_count,
        unique_rule_count,
        candidate_rule_count: rules.len(),
        terminal_counts,
        linear_term_count,
        selection: Some(selection),
    })
}

impl CausalRuleFitModel {
    pub fn p(&self) -> usize {
        self.meta.p
    }

    fn check_row(&self, x: ArrayView1<'_, f64>) -> Result<()> {
        if x.len() != self.meta.p {
            return Err(Error::Shape {
                expected: self.meta.p,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Treated-arm and control-arm parts `(Σ α b(x), Σ β b(x))`.
    fn arm_parts(&self, x: ArrayView1<'_, f64>) -> (f64, f64) {
        let mut treated = 0.0;
        let mut control = 0.0;
        for e in &self.rules {
            if e.rule.evaluate(x) {
                treated += e.alpha;
                control += e.beta;
            }
        }
        for e in &self.linear {
            let l = e.term.value(x[e.term.feature]);
            treated += e.alpha * l;
            control += e.beta * l;
        }
        (treated, control)
    }

    /// `F(x, t)`.
    pub fn predict_outcome(&self, x: ArrayView1<'_, f64>, t: u8) -> Result<f64> {
        self.check_row(x)?;
        if t > 1 {
            return Err(Error::Validation(format!("treatment must be 0 or 1, got {t}")));
        }
        let (treated, control) = self.arm_parts(x);
        Ok(self.intercept + if t == 1 { treated } else { control })
    }

    /// `τ̂(x) = Σ (α_k − β_k) r_k(x) + Σ (α*_j − β*_j) l_j(x_j)`.
    pub fn predict_hte(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        self.check_row(x)?;
        let mut tau = 0.0;
        for e in &self.rules {
            if e.rule.evaluate(x) {
                tau += e.alpha - e.beta;
            }
        }
        for e in &self.linear {
            tau += (e.alpha - e.beta) * e.term.value(x[e.term.feature]);
        }
        Ok(tau)
    }

    /// `τ̂` for every row of `x`.
    pub fn predict_hte_rows(&self, x: ndarray::ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        x.rows().into_iter().map(|row| self.predict_hte(row)).collect()
    }

    pub fn importance(&self) -> ImportanceReport {
        let names = &self.meta.feature_names;
        let mut rows: Vec<ImportanceRow> = Vec::new();
        for e in &self.rules {
            let diff = e.alpha - e.beta;
            rows.push(ImportanceRow {
                kind: TermKind::Rule,
                description: e.rule.describe(names),
                coefficient: diff,
                importance: diff.abs() * (e.support * (1.0 - e.support)).sqrt(),
                support: Some(e.support),
            });
        }
        for e in &self.linear {
            let diff = e.alpha - e.beta;
            rows.push(ImportanceRow {
                kind: TermKind::Linear,
                description: names
                    .get(e.term.feature)
                    .cloned()
                    .unwrap_or_else(|| format!("x{}", e.term.feature + 1)),
                coefficient: diff,
                // A normalized linear term has standard deviation 0.4 on the
                // training rows by construction.
                importance: diff.abs() * LINEAR_TERM_STD,
                support: None,
            });
        }
        rows.retain(|r| r.importance > 0.0);
        rows.sort_by(|a, b| b.importance.total_cmp(&a.importance));
        ImportanceReport { rows }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    Rule,
    Linear,
}

impl TermKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rule => "rule",
            Self::Linear => "linear",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceRow {
    pub kind: TermKind,
    pub description: String,
    /// Coefficient difference `α − β`, the term's contribution to τ̂.
    pub coefficient: f64,
    pub importance: f64,
    /// Training support of a rule; `None` for linear terms.
    pub support: Option<f64>,
}

/// Terms with nonzero importance, most important first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImportanceReport {
    pub rows: Vec<ImportanceRow>,
}

/// Which rows of an [`ImportanceReport`] to show.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportFilter {
    /// Keep only terms whose importance exceeds the mean over all terms.
    pub above_mean: bool,
    /// Keep only rules with support above this (linear terms always pass).
    pub min_support: f64,
    pub top: Option<usize>,
}

impl Default for ReportFilter {
    fn default() -> Self {
        Self {
            above_mean: true,
            min_support: 0.1,
            top: None,
        }
    }
}

impl ReportFilter {
    /// Every nonzero term.
    pub fn all() -> Self {
        Self {
            above_mean: false,
            min_support: f64::NEG_INFINITY,
            top: None,
        }
    }
}

impl ImportanceReport {
    pub fn mean_importance(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(|r| r.importance).sum::<f64>() / self.rows.len() as f64
    }

    pub fn filtered(&self, filter: &ReportFilter) -> Vec<&ImportanceRow> {
        let mean = self.mean_importance();
        let kept = self
            .rows
            .iter()
            .filter(|r| !filter.above_mean || r.importance > mean)
            .filter(|r| r.support.is_none_or(|s| s > filter.min_support));
        match filter.top {
            Some(k) => kept.take(k).collect(),
            None => kept.collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Persistence

/// Interval bound: a finite number, or the strings `"-inf"` / `"+inf"`.
#[derive(Debug, Clone, Copy)]
struct Bound(f64);

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::NEG_INFINITY {
            serializer.serialize_str("-inf")
        } else if self.0 == f64::INFINITY {
            serializer.serialize_str("+inf")
        } else {
            serialize_real(&self.0, serializer)
        }
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(v) => Ok(Self(v)),
            Repr::Text(s) if s == "-inf" => Ok(Self(f64::NEG_INFINITY)),
            Repr::Text(s) if s == "+inf" => Ok(Self(f64::INFINITY)),
            Repr::Text(s) => Err(serde::de::Error::custom(format!(
                "bound must be a number, \"-inf\" or \"+inf\", got {s:?}"
            ))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConditionFile {
    feature: String,
    lo: Bound,
    hi: Bound,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    conditions: Vec<ConditionFile>,
    #[serde(serialize_with = "serialize_real")]
    alpha: f64,
    #[serde(serialize_with = "serialize_real")]
    beta: f64,
    #[serde(serialize_with = "serialize_real")]
    support: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearFile {
    feature: String,
    #[serde(serialize_with = "serialize_real")]
    delta_lo: f64,
    #[serde(serialize_with = "serialize_real")]
    delta_hi: f64,
    #[serde(serialize_with = "serialize_real")]
    scale: f64,
    #[serde(serialize_with = "serialize_real")]
    alpha: f64,
    #[serde(serialize_with = "serialize_real")]
    beta: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaFile {
    seed: u64,
    #[serde(serialize_with = "serialize_real")]
    lambda: f64,
    n: usize,
    p: usize,
    feature_names: Vec<String>,
    #[serde(serialize_with = "serialize_opt_real")]
    cv_error: Option<f64>,
    propensity: PropensitySource,
    config: FitConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u64,
    #[serde(serialize_with = "serialize_real")]
    intercept: f64,
    rules: Vec<RuleFile>,
    linear: Vec<LinearFile>,
    meta: MetaFile,
}

impl CausalRuleFitModel {
    fn to_file(&self) -> ModelFile {
        let names = &self.meta.feature_names;
        ModelFile {
            format_version: FORMAT_VERSION,
            intercept: self.intercept,
            rules: self
                .rules
                .iter()
                .map(|e| RuleFile {
                    conditions: e
                        .rule
                        .conditions()
                        .iter()
                        .map(|c| ConditionFile {
                            feature: names[c.feature].clone(),
                            lo: Bound(c.lo),
                            hi: Bound(c.hi),
                        })
                        .collect(),
                    alpha: e.alpha,
                    beta: e.beta,
                    support: e.support,
                })
                .collect(),
            linear: self
                .linear
                .iter()
                .map(|e| LinearFile {
                    feature: names[e.term.feature].clone(),
                    delta_lo: e.term.delta_lo,
                    delta_hi: e.term.delta_hi,
                    scale: e.term.scale,
                    alpha: e.alpha,
                    beta: e.beta,
                })
                .collect(),
            meta: MetaFile {
                seed: self.meta.seed,
                lambda: self.meta.lambda,
                n: self.meta.n,
                p: self.meta.p,
                feature_names: names.clone(),
                cv_error: self.meta.cv_error,
                propensity: self.meta.propensity,
                config: self.meta.config.clone(),
            },
        }
    }

    fn from_file(file: ModelFile) -> Result<Self> {
        let names = file.meta.feature_names;
        if names.len() != file.meta.p {
            return Err(Error::Format(format!(
                "meta lists {} feature names for p = {}",
                names.len(),
                file.meta.p
            )));
        }
        let index = |name: &str| {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Format(format!("unknown feature `{name}`")))
        };
        let finite = |what: &str, v: f64| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Format(format!("{what} must be finite")))
            }
        };
        let mut rules = Vec::with_capacity(file.rules.len());
        for r in file.rules {
            let conditions = r
                .conditions
                .iter()
                .map(|c| {
                    Ok(Condition {
                        feature: index(&c.feature)?,
                        lo: c.lo.0,
                        hi: c.hi.0,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if !(r.support > 0.0 && r.support < 1.0) {
                return Err(Error::Format(format!(
                    "rule support {} outside (0, 1)",
                    r.support
                )));
            }
            rules.push(RuleEntry {
                rule: Rule::new(conditions).map_err(|e| Error::Format(e.to_string()))?,
                alpha: finite("alpha", r.alpha)?,
                beta: finite("beta", r.beta)?,
                support: r.support,
            });
        }
        let mut linear = Vec::with_capacity(file.linear.len());
        for l in file.linear {
            linear.push(LinearEntry {
                term: LinearTerm {
                    feature: index(&l.feature)?,
                    delta_lo: finite("delta_lo", l.delta_lo)?,
                    delta_hi: finite("delta_hi", l.delta_hi)?,
                    scale: finite("scale", l.scale)?,
                },
                alpha: finite("alpha", l.alpha)?,
                beta: finite("beta", l.beta)?,
            });
        }
        Ok(Self {
            intercept: finite("intercept", file.intercept)?,
            rules,
            linear,
            meta: FitMeta {
                seed: file.meta.seed,
                lambda: file.meta.lambda,
                n: file.meta.n,
                p: file.meta.p,
                feature_names: names,
                cv_error: file.meta.cv_error,
                propensity: file.meta.propensity,
                config: file.meta.config,
            },
        })
    }

    /// Pretty-printed JSON document with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.to_file())
            .map_err(|e| Error::Format(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        match value.get("format_version").and_then(serde_json::Value::as_u64) {
            Some(FORMAT_VERSION) => {}
            Some(found) => {
                return Err(Error::Version {
                    found,
                    expected: FORMAT_VERSION,
                })
            }
            None => return Err(Error::Format("missing integer `format_version`".into())),
        }
        let file: ModelFile =
            serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_file(file)
    }
}

pub fn save_model(model: &CausalRuleFitModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model.to_json()?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CausalRuleFitModel> {
    CausalRuleFitModel::from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn names(p: usize) -> Vec<String> {
        (1..=p).map(|j| format!("x{j}")).collect()
    }

    fn bare(p: usize, intercept: f64) -> CausalRuleFitModel {
        CausalRuleFitModel {
            intercept,
            rules: Vec::new(),
            linear: Vec::new(),
            meta: FitMeta {
                seed: 0,
                lambda: 0.0,
                n: 10,
                p,
                feature_names: names(p),
                cv_error: None,
                propensity: PropensitySource::Constant(0.5),
                config: FitConfig::default(),
            },
        }
    }

    fn one_rule(alpha: f64, beta: f64, support: f64) -> CausalRuleFitModel {
        let mut m = bare(2, 0.25);
        m.rules.push(RuleEntry {
            rule: Rule::new(vec![Condition {
                feature: 0,
                lo: f64::NEG_INFINITY,
                hi: 0.5,
            }])
            .unwrap(),
            alpha,
            beta,
            support,
        });
        m
    }

    #[test]
    fn intercept_only_prediction() {
        let m = bare(3, 1.5);
        let x = array![0.3, -2.0, 7.0];
        assert_eq!(m.predict_outcome(x.view(), 0).unwrap(), 1.5);
        assert_eq!(m.predict_outcome(x.view(), 1).unwrap(), 1.5);
        assert_eq!(m.predict_hte(x.view()).unwrap(), 0.0);
        assert!(m.importance().rows.is_empty());
    }

    #[test]
    fn single_rule_arms() {
        let m = one_rule(2.0, 1.0, 0.3);
        let fires = array![0.0, 9.0];
        let silent = array![1.0, 9.0];
        assert_eq!(m.predict_outcome(fires.view(), 1).unwrap(), 2.25);
        assert_eq!(m.predict_outcome(fires.view(), 0).unwrap(), 1.25);
        assert_eq!(m.predict_hte(fires.view()).unwrap(), 1.0);
        assert_eq!(m.predict_hte(silent.view()).unwrap(), 0.0);
        assert!(matches!(
            m.predict_hte(array![1.0].view()),
            Err(Error::Shape { expected: 2, got: 1 })
        ));
        assert!(m.predict_outcome(fires.view(), 2).is_err());
    }

    #[test]
    fn equal_arms_have_no_effect_or_importance() {
        let m = one_rule(0.7, 0.7, 0.5);
        assert_eq!(m.predict_hte(array![0.0, 0.0].view()).unwrap(), 0.0);
        assert!(m.importance().rows.is_empty());
    }

    #[test]
    fn rule_importance_formula() {
        let m = one_rule(0.3, 0.2, 0.5);
        let report = m.importance();
        assert_eq!(report.rows.len(), 1);
        approx::assert_abs_diff_eq!(report.rows[0].importance, 0.05, epsilon = 1e-15);
        assert_eq!(report.rows[0].description, "x1 < 0.5");
    }

    #[test]
    fn linear_terms_use_stored_bounds() {
        let mut m = bare(2, 0.0);
        m.linear.push(LinearEntry {
            term: LinearTerm {
                feature: 1,
                delta_lo: -1.0,
                delta_hi: 1.0,
                scale: 0.5,
            },
            alpha: 2.0,
            beta: -2.0,
        });
        assert_eq!(m.predict_hte(array![0.0, 10.0].view()).unwrap(), 2.0);
        assert_eq!(m.predict_outcome(array![0.0, -0.5].view(), 0).unwrap(), 0.5);
        approx::assert_abs_diff_eq!(m.importance().rows[0].importance, 1.6, epsilon = 1e-15);
    }

    #[test]
    fn filter_view() {
        let mut report = ImportanceReport::default();
        for (imp, sup) in [(5.0, Some(0.5)), (4.0, Some(0.05)), (3.0, None), (1.0, Some(0.4))] {
            report.rows.push(ImportanceRow {
                kind: if sup.is_some() { TermKind::Rule } else { TermKind::Linear },
                description: String::new(),
                coefficient: imp,
                importance: imp,
                support: sup,
            });
        }
        // mean 3.25: 5.0 passes; 4.0 fails support; 3.0 and 1.0 fall below the mean.
        let kept = report.filtered(&ReportFilter::default());
        assert_eq!(kept.iter().map(|r| r.importance).collect::<Vec<_>>(), [5.0]);
        assert_eq!(report.filtered(&ReportFilter::all()).len(), 4);
        let top2 = report.filtered(&ReportFilter {
            top: Some(2),
            ..ReportFilter::all()
        });
        assert_eq!(top2.len(), 2);
    }

    #[test]
    fn json_round_trip_is_byte_stable() {
        let mut m = one_rule(0.1, -1.0 / 3.0, 0.30000000000000004);
        m.rules.push(RuleEntry {
            rule: Rule::new(vec![
                Condition {
                    feature: 0,
                    lo: -1.25,
                    hi: f64::INFINITY,
                },
                Condition {
                    feature: 1,
                    lo: 0.5,
                    hi: 2.0,
                },
            ])
            .unwrap(),
            alpha: 1e-300,
            beta: 12345.678,
            support: 0.75,
        });
        m.meta.cv_error = Some(0.123);
        let text = m.to_json().unwrap();
        assert!(text.contains("\"-inf\""));
        assert!(text.contains("\"+inf\""));
        assert!(text.contains("0.10000000000000001"));
        let back = CausalRuleFitModel::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn version_mismatch_is_reported() {
        let text = bare(1, 0.0).to_json().unwrap().replace("\"format_version\": 1", "\"format_version\": 7");
        match CausalRuleFitModel::from_json(&text) {
            Err(Error::Version { found: 7, expected: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(CausalRuleFitModel::from_json("{"), Err(Error::Format(_))));
    }

    #[test]
    fn constant_outcome_gives_intercept_only_model() {
        let n = 60;
        let x = Array2::from_shape_fn((n, 2), |(i, j)| ((i * 7 + j * 3) % 11) as f64);
        let t: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let ds = Dataset::new(vec![3.0; n], t, x, None, names(2)).unwrap();
        let mut cfg = FitConfig::seeded(1);
        cfg.gbt.trees = 20;
        cfg.solver.cv_folds = 3;
        let m = fit(&ds, PropensitySource::Constant(0.5), &cfg).unwrap();
        assert!(m.rules.is_empty() && m.linear.is_empty());
        approx::assert_abs_diff_eq!(m.intercept, 3.0, epsilon = 1e-12);
        assert_eq!(m.predict_hte(ds.row(0)).unwrap(), 0.0);
    }
}
