//! Propensity scores and the inverse-probability-weighted transformed outcome.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numfmt::serialize_real;

/// Where treatment probabilities come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropensitySource {
    /// The same probability for every unit, e.g. 0.5 in a balanced trial.
    Constant(#[serde(serialize_with = "serialize_real")] f64),
    /// The per-row scores stored in the dataset.
    Column,
}

impl PropensitySource {
    pub fn constant(c: f64) -> Result<Self> {
        if c > 0.0 && c < 1.0 {
            Ok(Self::Constant(c))
        } else {
            Err(Error::Validation(format!(
                "constant propensity {c} must lie strictly inside (0, 1)"
            )))
        }
    }
}

/// Per-row propensities for `ds`.
pub fn resolve_propensity(ds: &Dataset, ps: PropensitySource) -> Result<Vec<f64>> {
    match ps {
        PropensitySource::Constant(c) => {
            PropensitySource::constant(c)?;
            Ok(vec![c; ds.n()])
        }
        PropensitySource::Column => ds
            .pscore()
            .map(<[f64]>::to_vec)
            .ok_or_else(|| Error::MissingColumn("pscore".into())),
    }
}

/// Clamps every score into `[eps, 1 - eps]`.
pub fn clip_propensity(pi: &mut [f64], eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Config(format!("clip epsilon {eps} must lie in (0, 0.5)")));
    }
    for p in pi.iter_mut() {
        *p = p.clamp(eps, 1.0 - eps);
    }
    Ok(())
}

/// `t * y / pi - (1 - t) * y / (1 - pi)`, whose conditional mean is the
/// treatment effect when `pi` is the true propensity.
pub fn transformed_outcome_from(y: &[f64], t: &[u8], pi: &[f64]) -> Result<Vec<f64>> {
    if y.len() != t.len() || y.len() != pi.len() {
        return Err(Error::Shape {
            expected: y.len(),
            got: if t.len() != y.len() { t.len() } else { pi.len() },
        });
    }
    y.iter()
        .zip(t)
        .zip(pi)
        .enumerate()
        .map(|(i, ((&y, &t), &p))| {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::PropensityRange { row: i, value: p });
            }
            Ok(if t == 1 { y / p } else { -y / (1.0 - p) })
        })
        .collect()
}

pub fn transformed_outcome(ds: &Dataset, ps: PropensitySource) -> Result<Vec<f64>> {
    let pi = resolve_propensity(ds, ps)?;
    transformed_outcome_from(ds.y(), ds.t(), &pi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn tiny(y: Vec<f64>, t: Vec<f64>, ps: Option<Vec<f64>>) -> Dataset {
        let n = y.len();
        Dataset::new(y, t, Array2::zeros((n, 1)), ps, vec!["x1".into()]).unwrap()
    }

    #[test]
    fn formula_cases() {
        assert_eq!(transformed_outcome_from(&[2.0], &[1], &[0.5]).unwrap(), [4.0]);
        assert_eq!(transformed_outcome_from(&[2.0], &[0], &[0.5]).unwrap(), [-4.0]);
        assert_eq!(transformed_outcome_from(&[3.0], &[1], &[0.75]).unwrap(), [4.0]);
    }

    #[test]
    fn rejects_boundary_propensity() {
        assert!(matches!(
            transformed_outcome_from(&[1.0, 1.0], &[1, 0], &[0.5, 1.0]),
            Err(Error::PropensityRange { row: 1, .. })
        ));
        assert!(transformed_outcome_from(&[1.0], &[1], &[0.0]).is_err());
    }

    #[test]
    fn resolve_constant_and_column() {
        let ds = tiny(vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0], Some(vec![0.2, 0.3, 0.4]));
        assert_eq!(
            resolve_propensity(&ds, PropensitySource::Constant(0.5)).unwrap(),
            [0.5, 0.5, 0.5]
        );
        assert_eq!(
            resolve_propensity(&ds, PropensitySource::Column).unwrap(),
            [0.2, 0.3, 0.4]
        );
        assert!(resolve_propensity(&ds, PropensitySource::Constant(1.0)).is_err());
        assert!(PropensitySource::constant(1.0).is_err());
        let no_ps = tiny(vec![1.0], vec![1.0], None);
        assert!(matches!(
            resolve_propensity(&no_ps, PropensitySource::Column),
            Err(Error::MissingColumn(_))
        ));
    }

    #[test]
    fn doubling_outcome_doubles_transform() {
        let y = [0.3, -1.2, 4.0, 0.0];
        let t = [1, 0, 0, 1];
        let pi = [0.2, 0.7, 0.5, 0.9];
        let a = transformed_outcome_from(&y, &t, &pi).unwrap();
        let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
        let b = transformed_outcome_from(&y2, &t, &pi).unwrap();
        for (a, b) in a.iter().zip(&b) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn clipping() {
        let mut pi = vec![0.001, 0.5, 0.999];
        clip_propensity(&mut pi, 0.01).unwrap();
        assert_eq!(pi, [0.01, 0.5, 0.99]);
        assert!(clip_propensity(&mut pi, 0.0).is_err());
    }
}
