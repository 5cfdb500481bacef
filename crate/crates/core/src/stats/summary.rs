use serde::Serialize;

use crate::error::{LabError, Result};

/// Exactly rounded floating-point sum.
///
/// Keeps Shewchuk's list of non-overlapping partials, so the represented
/// value is the exact real sum of everything added. The rounded result
/// therefore does not depend on the order of additions or merges.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        ExactSum::default()
    }

    pub fn add(&mut self, mut x: f64) {
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    pub fn merge(&mut self, other: &ExactSum) {
        for p in &other.partials {
            self.add(*p);
        }
    }

    /// The exact sum rounded to nearest.
    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let Some(mut n) = p.len().checked_sub(1) else {
            return 0.0;
        };
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            lo = y - (hi - x);
            if lo != 0.0 {
                break;
            }
        }
        // half-way case: correct the rounding using the next partial
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

/// Fixed-bin histogram; values outside `[edges[0], edges[last])` are
/// counted separately.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub below: u64,
    pub above: u64,
}

impl Histogram {
    pub fn new(edges: Vec<f64>) -> Result<Histogram> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(LabError::config("bins", "need at least two strictly increasing edges"));
        }
        let n = edges.len() - 1;
        Ok(Histogram { edges, counts: vec![0; n], below: 0, above: 0 })
    }

    pub fn add(&mut self, x: f64) {
        if x < self.edges[0] {
            self.below += 1;
        } else if x >= *self.edges.last().unwrap() {
            self.above += 1;
        } else {
            let i = self.edges.partition_point(|e| *e <= x) - 1;
            self.counts[i] += 1;
        }
    }

    fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.edges != other.edges {
            return Err(LabError::Stats("histograms with different bins cannot merge".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.below += other.below;
        self.above += other.above;
        Ok(())
    }
}

/// Count, exact sums and optionally the full sample and a histogram.
///
/// Merging is associative and commutative: sums are exact, and a merged
/// sample buffer is always re-sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSummary {
    count: u64,
    sum: ExactSum,
    sum_sq: ExactSum,
    samples: Option<Vec<f64>>,
    sorted: bool,
    histogram: Option<Histogram>,
}

impl EmpiricalSummary {
    /// Moments only.
    pub fn moments() -> Self {
        EmpiricalSummary {
            count: 0,
            sum: ExactSum::new(),
            sum_sq: ExactSum::new(),
            samples: None,
            sorted: true,
            histogram: None,
        }
    }

    /// Moments and the full sample.
    pub fn with_samples() -> Self {
        EmpiricalSummary { samples: Some(Vec::new()), ..Self::moments() }
    }

    pub fn with_histogram(mut self, h: Histogram) -> Self {
        self.histogram = Some(h);
        self
    }

    pub fn from_values(values: &[f64]) -> Self {
        let mut s = Self::with_samples();
        for v in values {
            s.push(*v);
        }
        s.sort();
        s
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
        if let Some(v) = &mut self.samples {
            v.push(x);
            self.sorted = false;
        }
        if let Some(h) = &mut self.histogram {
            h.add(x);
        }
    }

    pub fn sort(&mut self) {
        if let Some(v) = &mut self.samples {
            v.sort_by(f64::total_cmp);
        }
        self.sorted = true;
    }

    pub fn merge(&mut self, other: &EmpiricalSummary) -> Result<()> {
        self.count += other.count;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
        match (&mut self.samples, &other.samples) {
            (Some(a), Some(b)) => a.extend_from_slice(b),
            (None, None) => {}
            _ => return Err(LabError::Stats("cannot merge a sampled summary with a moments-only one".into())),
        }
        match (&mut self.histogram, &other.histogram) {
            (Some(a), Some(b)) => a.merge(b)?,
            (None, None) => {}
            _ => return Err(LabError::Stats("cannot merge summaries with and without histograms".into())),
        }
        self.sort();
        Ok(())
    }

    pub fn merged(parts: impl IntoIterator<Item = EmpiricalSummary>) -> Result<EmpiricalSummary> {
        let mut it = parts.into_iter();
        let Some(mut acc) = it.next() else {
            return Err(LabError::Stats("nothing to merge".into()));
        };
        for p in it {
            acc.merge(&p)?;
        }
        acc.sort();
        Ok(acc)
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn sum(&self) -> f64 {
        self.sum.value()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.count as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.count as f64;
        if self.count < 2 {
            return f64::NAN;
        }
        let mut centred = self.sum_sq.clone();
        let s = self.sum();
        centred.add(-s * s / n);
        (centred.value() / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    pub fn samples(&self) -> Option<&[f64]> {
        self.samples.as_deref()
    }

    pub fn histogram(&self) -> Option<&Histogram> {
        self.histogram.as_ref()
    }

    /// Empirical CDF `#{x_i ≤ y} / n`.
    pub fn ecdf(&self, y: f64) -> Result<f64> {
        let v = self.sorted_samples()?;
        Ok(v.partition_point(|x| *x <= y) as f64 / v.len() as f64)
    }

    fn sorted_samples(&self) -> Result<&[f64]> {
        let v = self.samples.as_deref().ok_or_else(|| LabError::Stats("summary keeps no samples".into()))?;
        if v.is_empty() {
            return Err(LabError::Stats("empty sample".into()));
        }
        if !self.sorted {
            return Err(LabError::Stats("sample buffer is not sorted".into()));
        }
        Ok(v)
    }
}

/// Kolmogorov–Smirnov distance `sup_y |F_n(y) − F(y)|` for a continuous
/// `cdf`, exact over the sample points.
pub fn ks_distance(empirical: &EmpiricalSummary, cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let v = empirical.sorted_samples()?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        // a run of ties moves the empirical CDF in one jump
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        let f = cdf(v[i]);
        d = d.max(f - i as f64 / n).max((j + 1) as f64 / n - f);
        i = j + 1;
    }
    Ok(d)
}

/// Kolmogorov distance between the sample and a purely atomic law: the
/// largest CDF gap over the union of sample values and atoms.
pub fn ks_distance_atomic(empirical: &EmpiricalSummary, atoms: &[(f64, f64)]) -> Result<f64> {
    let v = empirical.sorted_samples()?;
    let mut points: Vec<f64> = v.iter().copied().chain(atoms.iter().map(|a| a.0)).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let n = v.len() as f64;
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    let mut d: f64 = 0.0;
    let (mut k, mut acc) = (0usize, 0.0);
    let mut sorted_atoms = atoms.to_vec();
    sorted_atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    for p in points {
        while k < sorted_atoms.len() && sorted_atoms[k].0 <= p {
            acc += sorted_atoms[k].1 / total;
            k += 1;
        }
        let e = v.partition_point(|x| *x <= p) as f64 / n;
        d = d.max((e - acc).abs());
    }
    Ok(d)
}
