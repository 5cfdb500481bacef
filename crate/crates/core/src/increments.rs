//! Increment distributions of the random walk.
//!
//! A law is either one-dimensional or a product of independent
//! one-dimensional components. Lattice laws keep their support as exact
//! integer multiples of the span `h`; continuum laws have `h = 0`.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::Add;

use num_integer::Integer;
use num_rational::Ratio;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{LabError, Result};
use crate::rng::RngState;

type Q = Ratio<i128>;

/// Family tag as it appears in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    LatticePmf,
    LaplaceUnit,
    GaussianStd,
    UniformSymmetric,
    UpwardExponentialMix,
    #[serde(rename = "product_of_1d")]
    ProductOf1d,
}

impl Family {
    pub fn parse(name: &str) -> Result<Family> {
        serde_json::from_value(serde_json::Value::String(name.to_string()))
            .map_err(|_| LabError::config("law.family", format!("unsupported family `{name}`")))
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::LatticePmf => "lattice_pmf",
            Family::LaplaceUnit => "laplace_unit",
            Family::GaussianStd => "gaussian_std",
            Family::UniformSymmetric => "uniform_symmetric",
            Family::UpwardExponentialMix => "upward_exponential_mix",
            Family::ProductOf1d => "product_of_1d",
        }
    }
}

/// Declarative form of a law: `{"family": "...", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub family: String,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// Parses a decimal or fraction string (`"-2"`, `"0.25"`, `"2/3"`) into an
/// exact rational. Returns `None` when the value does not fit.
pub fn parse_exact(text: &str) -> Option<Q> {
    let t = text.trim();
    if let Some((num, den)) = t.split_once('/') {
        let n = num.trim().parse::<i128>().ok()?;
        let d = den.trim().parse::<i128>().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Q::new(n, d));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut n: i128 = digits.parse().ok()?;
    let d = 10i128.checked_pow(frac_part.len() as u32)?;
    if neg {
        n = -n;
    }
    Some(Q::new(n, d))
}

fn q_to_f64(q: &Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Lattice pmf with support stored in units of the span.
#[derive(Debug, Clone)]
pub struct LatticePmf {
    span: f64,
    units: Vec<i64>,
    weights: Vec<f64>,
    exact_weights: Option<Vec<Q>>,
    exact_span: Q,
}

impl LatticePmf {
    /// Builds a pmf from `(support, weight)` string pairs.
    pub fn from_strings(pairs: &[(String, String)]) -> Result<LatticePmf> {
        if pairs.is_empty() {
            return Err(LabError::config("law.params.pmf", "empty pmf"));
        }
        let mut merged: BTreeMap<Q, (f64, Option<Q>)> = BTreeMap::new();
        for (i, (s, w)) in pairs.iter().enumerate() {
            let support = parse_exact(s).ok_or_else(|| {
                LabError::config(format!("law.params.pmf[{i}][0]"), format!("support `{s}` is not an exact decimal or fraction"))
            })?;
            let exact_w = parse_exact(w);
            let wf = match &exact_w {
                Some(q) => q_to_f64(q),
                None => w.trim().parse::<f64>().map_err(|_| {
                    LabError::config(format!("law.params.pmf[{i}][1]"), format!("weight `{w}` is not a number"))
                })?,
            };
            if !(wf >= 0.0) || !wf.is_finite() {
                return Err(LabError::config(format!("law.params.pmf[{i}][1]"), "weights must be nonnegative"));
            }
            let entry = merged.entry(support).or_insert((0.0, Some(Q::from_integer(0))));
            entry.0 += wf;
            entry.1 = match (entry.1, exact_w) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            };
        }
        merged.retain(|_, (w, _)| *w > 0.0);
        let exact_all = merged.values().all(|(_, e)| e.is_some());
        if exact_all {
            let total: Q = merged.values().map(|(_, e)| e.unwrap()).sum();
            if total != Q::from_integer(1) {
                return Err(LabError::config("law.params.pmf", format!("weights sum to {total}, not 1")));
            }
        } else {
            let total: f64 = merged.values().map(|(w, _)| *w).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(LabError::config("law.params.pmf", format!("weights sum to {total}, not 1")));
            }
        }
        let support: Vec<Q> = merged.keys().copied().collect();
        if support.iter().all(|s| *s == Q::from_integer(0)) {
            return Err(LabError::config("law.params.pmf", "degenerate law concentrated at 0"));
        }
        // span = gcd of the support: gcd of numerators over lcm of denominators
        let mut num_gcd: i128 = 0;
        let mut den_lcm: i128 = 1;
        for s in &support {
            num_gcd = num_gcd.gcd(s.numer());
            den_lcm = den_lcm.lcm(s.denom());
        }
        let exact_span = Q::new(num_gcd, den_lcm);
        let units: Vec<i64> = support
            .iter()
            .map(|s| {
                let u = *s / exact_span;
                debug_assert!(u.is_integer());
                *u.numer() as i64
            })
            .collect();
        let weights: Vec<f64> = merged.values().map(|(w, _)| *w).collect();
        let exact_weights = if exact_all {
            Some(merged.values().map(|(_, e)| e.unwrap()).collect())
        } else {
            None
        };
        Ok(LatticePmf {
            span: q_to_f64(&exact_span),
            units,
            weights,
            exact_weights,
            exact_span,
        })
    }

    /// Convenience constructor from `(support, weight)` numeric pairs given
    /// as decimal/fraction text, e.g. `&[("1", "2/3"), ("-2", "1/3")]`.
    pub fn new(pairs: &[(&str, &str)]) -> Result<LatticePmf> {
        let owned: Vec<(String, String)> = pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        Self::from_strings(&owned)
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn units(&self) -> &[i64] {
        &self.units
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn min_unit(&self) -> i64 {
        self.units[0]
    }

    pub fn max_unit(&self) -> i64 {
        *self.units.last().unwrap()
    }

    /// Exact mean when every weight was given exactly.
    pub fn exact_mean(&self) -> Option<Q> {
        let w = self.exact_weights.as_ref()?;
        Some(
            self.units
                .iter()
                .zip(w)
                .map(|(u, p)| Q::from_integer(*u as i128) * self.exact_span * *p)
                .sum(),
        )
    }

    /// P(X = u·h).
    pub fn mass_at_unit(&self, u: i64) -> f64 {
        match self.units.binary_search(&u) {
            Ok(i) => self.weights[i],
            Err(_) => 0.0,
        }
    }

    fn value(&self, i: usize) -> f64 {
        self.units[i] as f64 * self.span
    }

    fn sum_where(&self, pred: impl Fn(f64) -> bool) -> f64 {
        (0..self.units.len()).filter(|&i| pred(self.value(i))).map(|i| self.weights[i]).sum()
    }
}

/// One-dimensional component law.
#[derive(Debug, Clone)]
pub enum Law1 {
    Lattice(LatticePmf),
    Laplace,
    Gaussian,
    Uniform { half_width: f64 },
}

/// First two moments of a one-dimensional law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub abs_mean: f64,
    pub second_moment: f64,
}

impl Law1 {
    pub fn span(&self) -> f64 {
        match self {
            Law1::Lattice(p) => p.span,
            _ => 0.0,
        }
    }

    pub fn is_lattice(&self) -> bool {
        matches!(self, Law1::Lattice(_))
    }

    /// P(X > x).
    pub fn tail_up(&self, x: f64) -> f64 {
        let (up, low) = self.tails(x);
        let _ = low;
        up
    }

    /// P(X ≤ x).
    pub fn tail_low(&self, x: f64) -> f64 {
        self.tails(x).1
    }

    /// `(P(X > x), P(X ≤ x))`. The smaller side is computed directly and the
    /// other as its complement, so the pair sums to exactly 1.
    pub fn tails(&self, x: f64) -> (f64, f64) {
        let (small, small_is_up) = match self {
            Law1::Lattice(p) => {
                let up = p.sum_where(|v| v > x);
                if up <= 0.5 {
                    (up, true)
                } else {
                    (p.sum_where(|v| v <= x), false)
                }
            }
            Law1::Laplace => {
                if x >= 0.0 {
                    (0.5 * (-x).exp(), true)
                } else {
                    (0.5 * x.exp(), false)
                }
            }
            Law1::Gaussian => {
                if x >= 0.0 {
                    (0.5 * erfc(x / std::f64::consts::SQRT_2), true)
                } else {
                    (0.5 * erfc(-x / std::f64::consts::SQRT_2), false)
                }
            }
            Law1::Uniform { half_width: a } => {
                let low = ((x + a) / (2.0 * a)).clamp(0.0, 1.0);
                if x >= 0.0 {
                    (((a - x) / (2.0 * a)).clamp(0.0, 1.0), true)
                } else {
                    (low, false)
                }
            }
        };
        if small_is_up {
            (small, 1.0 - small)
        } else {
            (1.0 - small, small)
        }
    }

    /// P(X = x); zero for continuum laws.
    pub fn atom(&self, x: f64) -> f64 {
        match self {
            Law1::Lattice(p) => {
                let u = x / p.span;
                if u.fract() != 0.0 || !u.is_finite() {
                    return 0.0;
                }
                p.mass_at_unit(u as i64)
            }
            _ => 0.0,
        }
    }

    /// P(X ∈ I) for the interval with the given endpoints and closedness.
    /// Infinite endpoints are allowed.
    pub fn prob_interval(&self, lo: f64, lo_closed: bool, hi: f64, hi_closed: bool) -> f64 {
        if lo > hi || (lo == hi && !(lo_closed && hi_closed)) {
            return 0.0;
        }
        // half-infinite intervals go through `tails` so complements stay exact
        if lo == f64::NEG_INFINITY && hi_closed {
            return self.tails(hi).1;
        }
        if hi == f64::INFINITY && !lo_closed {
            return self.tails(lo).0;
        }
        match self {
            Law1::Lattice(p) => p.sum_where(|v| {
                let above = if lo_closed { v >= lo } else { v > lo };
                let below = if hi_closed { v <= hi } else { v < hi };
                above && below
            }),
            _ => {
                let (up_lo, low_lo) = self.tails(lo);
                let (up_hi, low_hi) = self.tails(hi);
                // pick the representation without catastrophic cancellation
                let p = if lo >= 0.0 { up_lo - up_hi } else { low_hi - low_lo };
                p.max(0.0)
            }
        }
    }

    pub fn moments(&self) -> Moments {
        match self {
            Law1::Lattice(p) => {
                let mut m = Moments { mean: 0.0, abs_mean: 0.0, second_moment: 0.0 };
                for i in 0..p.units.len() {
                    let v = p.value(i);
                    m.mean += p.weights[i] * v;
                    m.abs_mean += p.weights[i] * v.abs();
                    m.second_moment += p.weights[i] * v * v;
                }
                if let Some(q) = p.exact_mean() {
                    m.mean = q_to_f64(&q);
                }
                m
            }
            Law1::Laplace => Moments { mean: 0.0, abs_mean: 1.0, second_moment: 2.0 },
            Law1::Gaussian => Moments {
                mean: 0.0,
                abs_mean: (2.0 / std::f64::consts::PI).sqrt(),
                second_moment: 1.0,
            },
            Law1::Uniform { half_width: a } => Moments {
                mean: 0.0,
                abs_mean: a / 2.0,
                second_moment: a * a / 3.0,
            },
        }
    }

    /// `Some(true)` when the mean is exactly zero by exact arithmetic,
    /// otherwise compares against 1e-12.
    pub fn is_mean_zero(&self) -> bool {
        if let Law1::Lattice(p) = self {
            if let Some(q) = p.exact_mean() {
                return q == Q::from_integer(0);
            }
        }
        self.moments().mean.abs() <= 1e-12
    }

    /// A bound `B` with P(|X| > B) below double precision resolution.
    pub fn support_bound(&self) -> f64 {
        match self {
            Law1::Lattice(p) => p.units.iter().map(|u| (*u as f64 * p.span).abs()).fold(0.0, f64::max),
            Law1::Laplace => 40.0,
            Law1::Gaussian => 12.0,
            Law1::Uniform { half_width } => *half_width,
        }
    }

    /// Upward jumps are exponential with rate 1 given that they are positive.
    pub fn has_exponential_up_jumps(&self) -> bool {
        matches!(self, Law1::Laplace)
    }

    pub fn has_exponential_down_jumps(&self) -> bool {
        matches!(self, Law1::Laplace)
    }

    fn from_spec(family: Family, params: &serde_json::Value, field: &str) -> Result<Law1> {
        let obj = params.as_object().cloned().unwrap_or_default();
        let allow = |keys: &[&str]| -> Result<()> {
            for k in obj.keys() {
                if !keys.contains(&k.as_str()) {
                    return Err(LabError::config(format!("{field}.params.{k}"), "unknown field"));
                }
            }
            Ok(())
        };
        match family {
            Family::LatticePmf => {
                allow(&["pmf"])?;
                let raw = obj
                    .get("pmf")
                    .ok_or_else(|| LabError::config(format!("{field}.params.pmf"), "missing"))?;
                let arr = raw
                    .as_array()
                    .ok_or_else(|| LabError::config(format!("{field}.params.pmf"), "expected an array of [support, weight] pairs"))?;
                let mut pairs = Vec::with_capacity(arr.len());
                for (i, item) in arr.iter().enumerate() {
                    let pair = item.as_array().filter(|p| p.len() == 2).ok_or_else(|| {
                        LabError::config(format!("{field}.params.pmf[{i}]"), "expected [support, weight]")
                    })?;
                    let text = |v: &serde_json::Value| match v {
                        serde_json::Value::String(s) => Some(s.clone()),
                        serde_json::Value::Number(n) => Some(n.to_string()),
                        _ => None,
                    };
                    let s = text(&pair[0])
                        .ok_or_else(|| LabError::config(format!("{field}.params.pmf[{i}][0]"), "expected string"))?;
                    let w = text(&pair[1])
                        .ok_or_else(|| LabError::config(format!("{field}.params.pmf[{i}][1]"), "expected string"))?;
                    pairs.push((s, w));
                }
                Ok(Law1::Lattice(LatticePmf::from_strings(&pairs)?))
            }
            Family::LaplaceUnit | Family::UpwardExponentialMix => {
                allow(&[])?;
                Ok(Law1::Laplace)
            }
            Family::GaussianStd => {
                allow(&[])?;
                Ok(Law1::Gaussian)
            }
            Family::UniformSymmetric => {
                allow(&["half_width"])?;
                let a = match obj.get("half_width") {
                    None => 1.0,
                    Some(v) => v
                        .as_f64()
                        .ok_or_else(|| LabError::config(format!("{field}.params.half_width"), "expected a number"))?,
                };
                if !(a > 0.0) || !a.is_finite() {
                    return Err(LabError::config(format!("{field}.params.half_width"), "must be positive"));
                }
                Ok(Law1::Uniform { half_width: a })
            }
            Family::ProductOf1d => Err(LabError::config(format!("{field}.family"), "product laws cannot be nested")),
        }
    }
}

/// An increment law in dimension `d ≥ 1`.
#[derive(Debug, Clone)]
pub struct IncrementLaw {
    family: Family,
    components: Vec<Law1>,
}

impl IncrementLaw {
    pub fn one_dim(family: Family, law: Law1) -> IncrementLaw {
        IncrementLaw { family, components: vec![law] }
    }

    pub fn lattice(pairs: &[(&str, &str)]) -> Result<IncrementLaw> {
        Ok(Self::one_dim(Family::LatticePmf, Law1::Lattice(LatticePmf::new(pairs)?)))
    }

    pub fn simple() -> IncrementLaw {
        Self::lattice(&[("1", "1/2"), ("-1", "1/2")]).expect("valid pmf")
    }

    pub fn laplace() -> IncrementLaw {
        Self::one_dim(Family::LaplaceUnit, Law1::Laplace)
    }

    pub fn gaussian() -> IncrementLaw {
        Self::one_dim(Family::GaussianStd, Law1::Gaussian)
    }

    pub fn uniform(half_width: f64) -> IncrementLaw {
        Self::one_dim(Family::UniformSymmetric, Law1::Uniform { half_width })
    }

    pub fn product(components: Vec<IncrementLaw>) -> Result<IncrementLaw> {
        if components.len() < 2 {
            return Err(LabError::config("law.params.components", "a product needs at least two components"));
        }
        let mut laws = Vec::new();
        for c in components {
            if c.dimension() != 1 {
                return Err(LabError::config("law.params.components", "components must be one-dimensional"));
            }
            laws.extend(c.components);
        }
        let lattice = laws[0].is_lattice();
        if laws.iter().any(|l| l.is_lattice() != lattice) {
            return Err(LabError::config(
                "law.params.components",
                "components must be all lattice or all continuum",
            ));
        }
        Ok(IncrementLaw { family: Family::ProductOf1d, components: laws })
    }

    pub fn from_spec(spec: &LawSpec) -> Result<IncrementLaw> {
        let family = Family::parse(&spec.family)?;
        if family == Family::ProductOf1d {
            let obj = spec.params.as_object().cloned().unwrap_or_default();
            for k in obj.keys() {
                if k != "components" {
                    return Err(LabError::config(format!("law.params.{k}"), "unknown field"));
                }
            }
            let comps = obj
                .get("components")
                .and_then(|v| v.as_array())
                .ok_or_else(|| LabError::config("law.params.components", "expected an array of laws"))?;
            let mut parts = Vec::new();
            for (i, c) in comps.iter().enumerate() {
                let sub: LawSpec = serde_json::from_value(c.clone())
                    .map_err(|e| LabError::config(format!("law.params.components[{i}]"), e.to_string()))?;
                let fam = Family::parse(&sub.family)?;
                let l = Law1::from_spec(fam, &sub.params, &format!("law.params.components[{i}]"))?;
                parts.push(IncrementLaw::one_dim(fam, l));
            }
            return IncrementLaw::product(parts);
        }
        let law = Law1::from_spec(family, &spec.params, "law")?;
        Ok(IncrementLaw::one_dim(family, law))
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Law1] {
        &self.components
    }

    /// The single component of a one-dimensional law.
    pub fn one(&self) -> Result<&Law1> {
        if self.components.len() == 1 {
            Ok(&self.components[0])
        } else {
            Err(LabError::capability(format!(
                "operation needs a one-dimensional law, got dimension {}",
                self.components.len()
            )))
        }
    }

    /// Span of the lattice (per coordinate); 0 for continuum laws.
    pub fn lattice_spans(&self) -> Vec<f64> {
        self.components.iter().map(Law1::span).collect()
    }

    /// Scalar span; for products the spans of all coordinates must agree.
    pub fn lattice_span(&self) -> f64 {
        self.components[0].span()
    }

    pub fn is_lattice(&self) -> bool {
        self.components[0].is_lattice()
    }

    /// `tail_up`: P(X > x) in d = 1, 1 − P(X ≤ x coordinatewise) in d ≥ 2.
    pub fn tail_up(&self, x: &[f64]) -> f64 {
        self.tails(x).0
    }

    /// `tail_low`: P(X ≤ x) (coordinatewise in d ≥ 2).
    pub fn tail_low(&self, x: &[f64]) -> f64 {
        self.tails(x).1
    }

    pub fn tails(&self, x: &[f64]) -> (f64, f64) {
        assert_eq!(x.len(), self.dimension(), "point dimension mismatch");
        if self.components.len() == 1 {
            return self.components[0].tails(x[0]);
        }
        let low: f64 = self.components.iter().zip(x).map(|(c, xi)| c.tail_low(*xi)).product();
        (1.0 - low, low)
    }

    /// P(X > x strictly in every coordinate).
    pub fn prob_all_greater(&self, x: &[f64]) -> f64 {
        self.components.iter().zip(x).map(|(c, xi)| c.tail_up(*xi)).product()
    }

    pub fn moments(&self) -> Result<Moments> {
        if self.components.len() != 1 {
            return Err(LabError::capability("moments are defined here for one-dimensional laws only"));
        }
        Ok(self.components[0].moments())
    }

    pub fn is_mean_zero(&self) -> bool {
        self.components.iter().all(Law1::is_mean_zero)
    }

    /// Draws `n` i.i.d. increments of a one-dimensional law.
    pub fn sample(&self, rng: &mut RngState, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(LabError::config("n", "sample size must be at least 1"));
        }
        let law = self.one()?;
        Ok(match law.stepper() {
            Stepper1::Lattice(s) => (0..n).map(|_| s.step(rng) as f64 * s.span).collect(),
            Stepper1::Real(s) => (0..n).map(|_| s.step(rng)).collect(),
        })
    }

    /// Draws `n` i.i.d. increments as points of `R^d`.
    pub fn sample_points(&self, rng: &mut RngState, n: usize) -> Result<Vec<Vec<f64>>> {
        if n == 0 {
            return Err(LabError::config("n", "sample size must be at least 1"));
        }
        let steppers: Vec<Stepper1> = self.components.iter().map(Law1::stepper).collect();
        Ok((0..n)
            .map(|_| {
                steppers
                    .iter()
                    .map(|s| match s {
                        Stepper1::Lattice(l) => l.step(rng) as f64 * l.span,
                        Stepper1::Real(r) => r.step(rng),
                    })
                    .collect()
            })
            .collect())
    }
}

/// Coordinate type of walk positions: `i64` lattice units or raw `f64`.
pub trait Coord:
    Copy + PartialOrd + PartialEq + Default + Debug + Send + Sync + Add<Output = Self> + 'static
{
    fn to_real(self, span: f64) -> f64;
    /// Converts a real point to this representation; fails when the point is
    /// not on the lattice.
    fn from_real(x: f64, span: f64) -> Result<Self>;
    #[inline]
    fn is_nonneg(self) -> bool {
        self >= Self::default()
    }
}

impl Coord for i64 {
    #[inline]
    fn to_real(self, span: f64) -> f64 {
        self as f64 * span
    }

    fn from_real(x: f64, span: f64) -> Result<Self> {
        let u = x / span;
        if !u.is_finite() || (u - u.round()).abs() > 1e-9 {
            return Err(LabError::domain(format!("point {x} is not on the lattice of span {span}")));
        }
        Ok(u.round() as i64)
    }
}

impl Coord for f64 {
    #[inline]
    fn to_real(self, _span: f64) -> f64 {
        self
    }

    fn from_real(x: f64, _span: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(LabError::domain("point must be finite"));
        }
        Ok(x)
    }
}

/// Draws single increments in the coordinate representation `Coord`.
pub trait Stepper: Clone + Send + Sync {
    type Coord: Coord;
    fn step(&self, rng: &mut RngState) -> Self::Coord;
    fn span(&self) -> f64;
}

#[derive(Debug, Clone)]
pub struct LatticeStepper {
    alias: WeightedAliasIndex<f64>,
    units: Vec<i64>,
    span: f64,
}

impl Stepper for LatticeStepper {
    type Coord = i64;

    #[inline]
    fn step(&self, rng: &mut RngState) -> i64 {
        self.units[self.alias.sample(rng)]
    }

    fn span(&self) -> f64 {
        self.span
    }
}

#[derive(Debug, Clone, Copy)]
pub enum RealStepper {
    Laplace,
    Gaussian,
    Uniform(f64),
}

impl Stepper for RealStepper {
    type Coord = f64;

    #[inline]
    fn step(&self, rng: &mut RngState) -> f64 {
        match *self {
            RealStepper::Laplace => {
                let e: f64 = Exp1.sample(rng);
                if rng.random::<bool>() {
                    e
                } else {
                    -e
                }
            }
            RealStepper::Gaussian => StandardNormal.sample(rng),
            RealStepper::Uniform(a) => rng.random_range(-a..a),
        }
    }

    fn span(&self) -> f64 {
        0.0
    }
}

/// Runtime choice between the two coordinate representations; use
/// [`with_stepper!`](crate::with_stepper) to run generic code on either.
#[derive(Debug, Clone)]
pub enum Stepper1 {
    Lattice(LatticeStepper),
    Real(RealStepper),
}

impl Law1 {
    pub fn stepper(&self) -> Stepper1 {
        match self {
            Law1::Lattice(p) => Stepper1::Lattice(LatticeStepper {
                alias: WeightedAliasIndex::new(p.weights.clone()).expect("validated weights"),
                units: p.units.clone(),
                span: p.span,
            }),
            Law1::Laplace => Stepper1::Real(RealStepper::Laplace),
            Law1::Gaussian => Stepper1::Real(RealStepper::Gaussian),
            Law1::Uniform { half_width } => Stepper1::Real(RealStepper::Uniform(*half_width)),
        }
    }
}

/// Expands `$body` once per coordinate representation with `$s` bound to
/// the concrete stepper.
#[macro_export]
macro_rules! with_stepper {
    ($stepper:expr, |$s:ident| $body:expr) => {
        match $stepper {
            $crate::increments::Stepper1::Lattice($s) => $body,
            $crate::increments::Stepper1::Real($s) => $body,
        }
    };
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn skewed() -> IncrementLaw {
        IncrementLaw::lattice(&[("1", "2/3"), ("-2", "1/3")]).unwrap()
    }

    #[test]
    fn family_names_round_trip() {
        use Family::*;
        for f in [LatticePmf, LaplaceUnit, GaussianStd, UniformSymmetric, UpwardExponentialMix, ProductOf1d] {
            assert_eq!(Family::parse(f.as_str()).unwrap(), f);
        }
    }

    #[test]
    fn parse_exact_forms() {
        assert_eq!(parse_exact("2/3"), Some(Q::new(2, 3)));
        assert_eq!(parse_exact("-0.25"), Some(Q::new(-1, 4)));
        assert_eq!(parse_exact("+3"), Some(Q::from_integer(3)));
        assert_eq!(parse_exact("abc"), None);
        assert_eq!(parse_exact("1/0"), None);
    }

    #[test]
    fn lattice_span_is_gcd_of_support() {
        let l = IncrementLaw::lattice(&[("0.5", "0.5"), ("-1.5", "0.25"), ("1.5", "0.25")]).unwrap();
        assert_eq!(l.lattice_span(), 0.5);
        assert_eq!(skewed().lattice_span(), 1.0);
        let Law1::Lattice(p) = skewed().one().unwrap().clone() else { panic!() };
        assert_eq!(p.units(), &[-2, 1]);
    }

    #[test]
    fn pmf_validation() {
        assert!(matches!(
            IncrementLaw::lattice(&[("1", "0.5"), ("-1", "0.4")]),
            Err(LabError::Config { .. })
        ));
        assert!(IncrementLaw::lattice(&[("1", "-0.5"), ("-1", "1.5")]).is_err());
        assert!(IncrementLaw::lattice(&[("0", "1")]).is_err());
    }

    #[test]
    fn exact_mean_zero_check() {
        assert!(skewed().is_mean_zero());
        assert!(!IncrementLaw::lattice(&[("1", "0.6"), ("-1", "0.4")]).unwrap().is_mean_zero());
    }

    #[test]
    fn unsupported_family_is_config_error() {
        let spec = LawSpec { family: "cauchy".into(), params: serde_json::json!({}) };
        assert!(matches!(IncrementLaw::from_spec(&spec), Err(LabError::Config { .. })));
    }

    #[test]
    fn spec_round_trip_for_pmf() {
        let spec: LawSpec = serde_json::from_str(r#"{"family":"lattice_pmf","params":{"pmf":[["1","2/3"],["-2","1/3"]]}}"#).unwrap();
        let law = IncrementLaw::from_spec(&spec).unwrap();
        assert_eq!(law.tail_low(&[-1.0]), 1.0 / 3.0);
    }

    #[test]
    fn sample_support_membership() {
        let mut r = rng::stream(1, 0);
        let xs = IncrementLaw::simple().sample(&mut r, 3).unwrap();
        assert_eq!(xs.len(), 3);
        assert!(xs.iter().all(|x| *x == 1.0 || *x == -1.0));
    }

    #[test]
    fn sample_is_deterministic() {
        let a = IncrementLaw::gaussian().sample(&mut rng::stream(9, 4), 2).unwrap();
        let b = IncrementLaw::gaussian().sample(&mut rng::stream(9, 4), 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_zero_is_error() {
        assert!(IncrementLaw::laplace().sample(&mut rng::stream(1, 0), 0).is_err());
    }

    #[test]
    fn laplace_sample_mean() {
        let n = 1_000_000;
        let xs = IncrementLaw::laplace().sample(&mut rng::stream(2024, 0), n).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 4e-3, "mean {mean}");
    }

    #[test]
    fn tail_examples() {
        let lap = IncrementLaw::laplace();
        assert_eq!(lap.tail_up(&[0.0]), 0.5);
        assert!((lap.tail_up(&[1.0]) - (-1.0f64).exp() / 2.0).abs() < 1e-15);
        assert!((skewed().tail_low(&[-1.0]) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn moment_examples() {
        let m = IncrementLaw::simple().moments().unwrap();
        assert_eq!((m.mean, m.abs_mean, m.second_moment), (0.0, 1.0, 1.0));
        let m = IncrementLaw::laplace().moments().unwrap();
        assert_eq!((m.mean, m.abs_mean, m.second_moment), (0.0, 1.0, 2.0));
        let m = skewed().moments().unwrap();
        assert_eq!(m.mean, 0.0);
        assert!((m.abs_mean - 4.0 / 3.0).abs() < 1e-15);
        assert!((m.second_moment - 2.0).abs() < 1e-15);
    }

    #[test]
    fn product_moments_are_a_capability_error() {
        let p = IncrementLaw::product(vec![IncrementLaw::simple(), IncrementLaw::simple()]).unwrap();
        assert!(matches!(p.moments(), Err(LabError::Capability(_))));
        assert_eq!(p.tail_low(&[0.0, 0.0]), 0.25);
        assert_eq!(p.tail_up(&[0.0, 0.0]), 0.75);
    }

    #[test]
    fn lattice_samples_lie_on_lattice() {
        let l = IncrementLaw::lattice(&[("0.5", "0.5"), ("-1.5", "0.25"), ("1.5", "0.25")]).unwrap();
        let xs = l.sample(&mut rng::stream(3, 0), 10_000).unwrap();
        assert!(xs.iter().all(|x| (x / 0.5).fract() == 0.0));
    }

    #[test]
    fn empirical_tails_match_at_probe_points() {
        let n = 1_000_000usize;
        let laws = [IncrementLaw::simple(), skewed(), IncrementLaw::laplace(), IncrementLaw::gaussian(), IncrementLaw::uniform(1.0)];
        for (k, law) in laws.iter().enumerate() {
            let mut xs = law.sample(&mut rng::stream(77, k as u64), n).unwrap();
            xs.sort_by(f64::total_cmp);
            for j in 0..10 {
                let x = -2.25 + 0.5 * j as f64;
                let p = law.tail_up(&[x]);
                let emp = (n - xs.partition_point(|v| *v <= x)) as f64 / n as f64;
                let band = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
                assert!((emp - p).abs() <= band.max(1e-12), "law {k} x {x}: {emp} vs {p}");
            }
        }
    }

    fn any_law() -> impl Strategy<Value = IncrementLaw> {
        prop_oneof![
            Just(IncrementLaw::simple()),
            Just(skewed()),
            Just(IncrementLaw::laplace()),
            Just(IncrementLaw::gaussian()),
            (0.1f64..5.0).prop_map(IncrementLaw::uniform),
        ]
    }

    proptest! {
        #[test]
        fn tails_are_complementary(law in any_law(), x in -50.0f64..50.0) {
            let (up, low) = law.tails(&[x]);
            prop_assert!((0.0..=1.0).contains(&up));
            prop_assert!((0.0..=1.0).contains(&low));
            prop_assert_eq!(up + low, 1.0);
        }

        #[test]
        fn interval_probability_is_monotone(law in any_law(), a in -5.0f64..5.0, w in 0.0f64..5.0) {
            let l = law.one().unwrap();
            let inner = l.prob_interval(a, true, a + w, false);
            let outer = l.prob_interval(a - 1.0, true, a + w + 1.0, true);
            prop_assert!(inner <= outer + 1e-15);
            prop_assert!((0.0..=1.0 + 1e-15).contains(&outer));
        }
    }
}
