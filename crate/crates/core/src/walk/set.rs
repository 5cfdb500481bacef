use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// A subset of the walk's state space, in real coordinates.
///
/// Boxes are closed, `half_open_interval` is `[lo, hi)`, orthants are
/// `[0, ∞)^d` and `(-∞, 0)^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    HalfLineNonneg,
    HalfLineNeg,
    OrthantNonneg { dim: usize },
    OrthantNeg { dim: usize },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    HalfOpenInterval { lo: f64, hi: f64 },
    CustomLatticeMask { points: Vec<Vec<f64>> },
    Complement { of: std::boxed::Box<SetSpec> },
}

impl SetSpec {
    pub fn interval(lo: f64, hi: f64) -> SetSpec {
        SetSpec::HalfOpenInterval { lo, hi }
    }

    pub fn closed_box(lower: Vec<f64>, upper: Vec<f64>) -> SetSpec {
        SetSpec::Box { lower, upper }
    }

    pub fn sites(points: &[f64]) -> SetSpec {
        SetSpec::CustomLatticeMask { points: points.iter().map(|p| vec![*p]).collect() }
    }

    pub fn complement(&self) -> SetSpec {
        match self {
            SetSpec::Complement { of } => (**of).clone(),
            SetSpec::HalfLineNonneg => SetSpec::HalfLineNeg,
            SetSpec::HalfLineNeg => SetSpec::HalfLineNonneg,
            other => SetSpec::Complement { of: std::boxed::Box::new(other.clone()) },
        }
    }

    /// Dimension the set lives in, when it fixes one.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            SetSpec::HalfLineNonneg | SetSpec::HalfLineNeg | SetSpec::HalfOpenInterval { .. } => Some(1),
            SetSpec::OrthantNonneg { dim } | SetSpec::OrthantNeg { dim } => Some(*dim),
            SetSpec::Box { lower, .. } => Some(lower.len()),
            SetSpec::CustomLatticeMask { points } => points.first().map(Vec::len),
            SetSpec::Complement { of } => of.dimension(),
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        match self {
            SetSpec::OrthantNonneg { dim } | SetSpec::OrthantNeg { dim } if *dim == 0 => {
                Err(LabError::config(format!("{field}.dim"), "must be positive"))
            }
            SetSpec::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(LabError::config(field, "box corners must have equal positive length"));
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
                    return Err(LabError::config(field, "box needs finite lower ≤ upper"));
                }
                Ok(())
            }
            SetSpec::HalfOpenInterval { lo, hi } => {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(LabError::config(field, "interval needs finite lo < hi"));
                }
                Ok(())
            }
            SetSpec::CustomLatticeMask { points } => {
                let d = points.first().map(Vec::len).unwrap_or(0);
                if d == 0 || points.iter().any(|p| p.len() != d) {
                    return Err(LabError::config(field, "mask points must share a positive dimension"));
                }
                Ok(())
            }
            SetSpec::Complement { of } => of.validate(field),
            _ => Ok(()),
        }
    }

    /// Membership of a real point. Total and pure.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            SetSpec::HalfLineNonneg => x[0] >= 0.0,
            SetSpec::HalfLineNeg => x[0] < 0.0,
            SetSpec::OrthantNonneg { .. } => x.iter().all(|v| *v >= 0.0),
            SetSpec::OrthantNeg { .. } => x.iter().all(|v| *v < 0.0),
            SetSpec::Box { lower, upper } => {
                x.len() == lower.len() && x.iter().zip(lower.iter().zip(upper)).all(|(v, (l, u))| *l <= *v && *v <= *u)
            }
            SetSpec::HalfOpenInterval { lo, hi } => *lo <= x[0] && x[0] < *hi,
            SetSpec::CustomLatticeMask { points } => points.iter().any(|p| p.as_slice() == x),
            SetSpec::Complement { of } => !of.contains(x),
        }
    }

    #[inline]
    pub fn contains1(&self, x: f64) -> bool {
        self.contains(std::slice::from_ref(&x))
    }

    /// Smallest closed interval containing a one-dimensional bounded set.
    pub fn bounds_1d(&self) -> Option<(f64, f64)> {
        match self {
            SetSpec::Box { lower, upper } if lower.len() == 1 => Some((lower[0], upper[0])),
            SetSpec::HalfOpenInterval { lo, hi } => Some((*lo, *hi)),
            SetSpec::CustomLatticeMask { points } if points.first().map(Vec::len) == Some(1) => {
                let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
                let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
                Some((lo, hi))
            }
            _ => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, SetSpec::Box { .. } | SetSpec::HalfOpenInterval { .. } | SetSpec::CustomLatticeMask { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn membership_conventions() {
        assert!(SetSpec::HalfLineNonneg.contains1(0.0));
        assert!(!SetSpec::HalfLineNeg.contains1(0.0));
        assert!(SetSpec::interval(0.0, 1.0).contains1(0.0));
        assert!(!SetSpec::interval(0.0, 1.0).contains1(1.0));
        assert!(SetSpec::closed_box(vec![0.0], vec![1.0]).contains1(1.0));
        assert!(SetSpec::OrthantNonneg { dim: 2 }.contains(&[0.0, 3.0]));
        assert!(!SetSpec::OrthantNonneg { dim: 2 }.contains(&[-1.0, 3.0]));
        assert!(SetSpec::sites(&[-3.0, 2.0]).contains1(2.0));
    }

    #[test]
    fn serde_shape() {
        let s: SetSpec = serde_json::from_str(r#"{"kind":"half_open_interval","lo":0,"hi":1}"#).unwrap();
        assert_eq!(s, SetSpec::interval(0.0, 1.0));
        assert!(serde_json::from_str::<SetSpec>(r#"{"kind":"half_open_interval","lo":0,"hi":1,"x":2}"#).is_err());
    }

    proptest! {
        #[test]
        fn complement_negates(x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let sets = [
                SetSpec::HalfLineNonneg,
                SetSpec::OrthantNeg { dim: 2 },
                SetSpec::closed_box(vec![-1.0, 0.0], vec![1.0, 2.0]),
            ];
            for s in &sets {
                let p: Vec<f64> = if s.dimension() == Some(1) { vec![x] } else { vec![x, y] };
                prop_assert_eq!(s.contains(&p), !s.complement().contains(&p));
            }
        }
    }
}
