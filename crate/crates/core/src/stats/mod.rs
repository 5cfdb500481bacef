//! Statistical verification of the random-walk claims: summaries, the KS
//! distance, verdicts, and the experiments producing them.

mod experiments;
mod summary;

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::finite_chain::IdentityCheck;
use crate::walk::dump::fmt17;

pub use experiments::{
    clt_from_sample, clt_levelcrossings, haar_measure, hopf_ratio_test, invariance_test, level_crossing_sample,
    lln_overshoots, occupation_identity, perkins_from_sample, perkins_sum, upcrossing_expectation, ChainKind,
    CrossingSample, StartLaw, CLT_TARGET_TAG, PERKINS_TARGET_TAG,
};
pub use summary::{ks_distance, ks_distance_atomic, EmpiricalSummary, ExactSum, Histogram};

/// Kolmogorov constant used for exact-null KS thresholds `c / √N`.
pub const KS_CONSTANT: f64 = 1.95;

/// Seed and number of random streams behind a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedManifest {
    pub seed: u64,
    pub streams: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// Kolmogorov–Smirnov distance.
    Ks,
    /// Largest standardized deviation of cell frequencies, in σ units.
    SigmaBands,
    RelativeError,
    /// Largest increase of a sequence that should not increase.
    Trend,
    /// Absolute residual of an exact identity.
    Residual,
}

/// Outcome of one statistical check. `pass` holds exactly when
/// `value ≤ threshold`. Unasserted verdicts are reported only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestVerdict {
    pub name: String,
    pub statistic: Statistic,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub asserted: bool,
    /// Some sample paths ran out of step budget.
    pub partial: bool,
    pub sample_size: u64,
    pub seed: SeedManifest,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_cdf: Option<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl TestVerdict {
    pub fn new(name: impl Into<String>, statistic: Statistic, value: f64, threshold: f64, sample_size: u64, seed: SeedManifest) -> Self {
        TestVerdict {
            name: name.into(),
            statistic,
            value,
            threshold,
            pass: value <= threshold,
            asserted: true,
            partial: false,
            sample_size,
            seed,
            estimate: None,
            target: None,
            target_cdf: None,
            details: BTreeMap::new(),
        }
    }

    /// Relative error `|estimate − target| / |target|`, or the absolute
    /// error when the target is zero.
    pub fn relative(name: impl Into<String>, estimate: f64, target: f64, tol: f64, n: u64, seed: SeedManifest) -> Self {
        let err = if target == 0.0 { estimate.abs() } else { (estimate - target).abs() / target.abs() };
        let mut v = TestVerdict::new(name, Statistic::RelativeError, err, tol, n, seed);
        v.estimate = Some(estimate);
        v.target = Some(target);
        v
    }

    /// Verdict for an exact finite-chain identity. Informational and
    /// skipped identities are unasserted.
    pub fn from_identity(check: &IdentityCheck, seed: u64) -> Self {
        let threshold = check.threshold.unwrap_or(f64::INFINITY);
        let mut v = TestVerdict::new(
            check.identity.clone(),
            Statistic::Residual,
            check.residual,
            threshold,
            1,
            SeedManifest { seed, streams: 0 },
        );
        v.pass = check.pass;
        if check.threshold.is_none() || check.skipped.is_some() {
            v = v.unasserted();
        }
        v
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.into(), value);
        self
    }

    pub fn with_partial(mut self, partial: bool) -> Self {
        self.partial = partial;
        self
    }

    pub fn unasserted(mut self) -> Self {
        self.asserted = false;
        self
    }

    /// Counts toward success: passes with a full budget, or is unasserted.
    pub fn ok(&self) -> bool {
        !self.asserted || (self.pass && !self.partial)
    }
}

/// Plot data `(y, empirical CDF, target CDF)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    pub name: String,
    pub rows: Vec<[f64; 3]>,
}

impl CdfTable {
    /// Evaluates both CDFs on `points` evenly spaced over the sample range.
    pub fn build(name: &str, sample: &EmpiricalSummary, target: impl Fn(f64) -> f64, points: usize) -> Result<CdfTable> {
        let v = sample.samples().ok_or_else(|| LabError::Stats("summary keeps no samples".into()))?;
        let (lo, hi) = match (v.first(), v.last()) {
            (Some(a), Some(b)) => (*a, *b),
            _ => return Err(LabError::Stats("empty sample".into())),
        };
        let points = points.max(2);
        let mut rows = Vec::with_capacity(points);
        for i in 0..points {
            let y = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            rows.push([y, sample.ecdf(y)?, target(y)]);
        }
        Ok(CdfTable { name: name.into(), rows })
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let io = |e: std::io::Error| LabError::Stats(e.to_string());
        writeln!(out, "y,empirical_cdf,target_cdf").map_err(io)?;
        for r in &self.rows {
            writeln!(out, "{},{},{}", fmt17(r[0]), fmt17(r[1]), fmt17(r[2])).map_err(io)?;
        }
        Ok(())
    }
}

/// Verdicts of one experiment plus optional plot data.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub verdicts: Vec<TestVerdict>,
    pub cdf_tables: Vec<CdfTable>,
}

impl Outcome {
    pub fn ok(&self) -> bool {
        self.verdicts.iter().all(TestVerdict::ok)
    }
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}
