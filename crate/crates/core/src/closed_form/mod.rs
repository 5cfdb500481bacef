//! Closed-form invariant densities of crossing and entrance chains.
//!
//! Densities are taken with respect to the Haar measure `λ`: Lebesgue
//! measure on the continuum, mass `h` per point on the lattice `hZ` (`h^d`
//! on product lattices).

pub mod quad;
mod sample;

pub use sample::{sample_from, Sampler};

use std::io::Write;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::increments::{IncrementLaw, Law1};
use crate::walk::dump::fmt17;
use crate::walk::SetSpec;

/// Absolute tolerance of all continuum quadratures.
pub const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TotalMass {
    Finite(f64),
    Infinite,
}

impl TotalMass {
    pub fn finite(self) -> Option<f64> {
        match self {
            TotalMass::Finite(m) => Some(m),
            TotalMass::Infinite => None,
        }
    }
}

type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A density with respect to `λ`, restricted to a region.
#[derive(Clone)]
pub struct DensityOnGroup {
    name: String,
    law: IncrementLaw,
    region: Option<SetSpec>,
    f: DensityFn,
    mass: TotalMass,
    /// Effective support per coordinate; the density vanishes (to double
    /// precision) outside.
    extent: Vec<(f64, f64)>,
    breaks: Vec<Vec<f64>>,
}

impl std::fmt::Debug for DensityOnGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DensityOnGroup")
            .field("name", &self.name)
            .field("region", &self.region)
            .field("mass", &self.mass)
            .field("extent", &self.extent)
            .finish()
    }
}

impl DensityOnGroup {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn law(&self) -> &IncrementLaw {
        &self.law
    }

    pub fn dimension(&self) -> usize {
        self.law.dimension()
    }

    pub fn is_lattice(&self) -> bool {
        self.law.is_lattice()
    }

    pub fn total_mass(&self) -> TotalMass {
        self.mass
    }

    pub fn region(&self) -> Option<&SetSpec> {
        self.region.as_ref()
    }

    /// Density at `x`; zero off the region.
    pub fn density(&self, x: &[f64]) -> f64 {
        match &self.region {
            Some(r) if !r.contains(x) => 0.0,
            _ => (self.f)(x),
        }
    }

    pub fn density1(&self, x: f64) -> f64 {
        self.density(std::slice::from_ref(&x))
    }

    /// `λ`-mass of a single lattice point, `h^d · density`.
    pub fn point_mass(&self, x: &[f64]) -> f64 {
        let cell: f64 = self.law.lattice_spans().iter().product();
        cell * self.density(x)
    }

    pub(crate) fn extent(&self) -> &[(f64, f64)] {
        &self.extent
    }

    pub(crate) fn breaks(&self, axis: usize) -> &[f64] {
        &self.breaks[axis]
    }

    /// Lattice points carrying positive mass, with their masses. Requires a
    /// lattice law and finite extent.
    pub fn atoms(&self) -> Result<Vec<(Vec<f64>, f64)>> {
        if !self.is_lattice() {
            return Err(LabError::capability("atoms exist only for lattice laws"));
        }
        let spans = self.law.lattice_spans();
        let ranges: Vec<(i64, i64)> = self
            .extent
            .iter()
            .zip(&spans)
            .map(|((a, b), h)| ((a / h - 1e-9).ceil() as i64, (b / h + 1e-9).floor() as i64))
            .collect();
        let total: i128 = ranges.iter().map(|(a, b)| (b - a + 1).max(0) as i128).product();
        if total > 50_000_000 {
            return Err(LabError::capability("lattice support too large to enumerate"));
        }
        let mut out = Vec::new();
        let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        if ranges.iter().any(|(a, b)| a > b) {
            return Ok(out);
        }
        loop {
            let x: Vec<f64> = idx.iter().zip(&spans).map(|(k, h)| *k as f64 * h).collect();
            let m = self.point_mass(&x);
            if m > 0.0 {
                out.push((x, m));
            }
            let mut axis = 0;
            loop {
                if axis == idx.len() {
                    return Ok(out);
                }
                if idx[axis] < ranges[axis].1 {
                    idx[axis] += 1;
                    break;
                }
                idx[axis] = ranges[axis].0;
                axis += 1;
            }
        }
    }

    /// `∫ g dρ` for this density `ρ` in one dimension: a sum for lattice
    /// laws, adaptive Simpson otherwise.
    pub fn integrate1<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        if self.dimension() != 1 {
            return Err(LabError::capability("one-dimensional integral on a multi-dimensional density"));
        }
        if self.is_lattice() {
            return Ok(self.atoms()?.iter().map(|(x, m)| m * g(x[0])).sum());
        }
        let (a, b) = self.extent[0];
        let h = |x: f64| self.density1(x) * g(x);
        Ok(quad::integrate(&h, a, b, &self.breaks[0], QUAD_TOL))
    }

    /// Writes `x,density` rows on the given grid.
    pub fn write_csv<W: Write>(&self, out: &mut W, grid: &[f64]) -> Result<()> {
        let io = |e: std::io::Error| LabError::Domain(format!("write failed: {e}"));
        writeln!(out, "x,density").map_err(io)?;
        for x in grid {
            writeln!(out, "{},{}", fmt17(*x), fmt17(self.density1(*x))).map_err(io)?;
        }
        Ok(())
    }

    fn compute_mass(&self) -> Result<TotalMass> {
        if self.extent.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Ok(TotalMass::Infinite);
        }
        if self.is_lattice() {
            return Ok(TotalMass::Finite(self.atoms()?.iter().map(|(_, m)| m).sum()));
        }
        Ok(TotalMass::Finite(self.nested(&[])))
    }

    fn nested(&self, prefix: &[f64]) -> f64 {
        let axis = prefix.len();
        let (a, b) = self.extent[axis];
        let tol = if self.dimension() == 1 { QUAD_TOL } else { 1e-8 };
        let f = |t: f64| {
            let mut p = prefix.to_vec();
            p.push(t);
            if p.len() == self.dimension() {
                self.density(&p)
            } else {
                self.nested(&p)
            }
        };
        quad::integrate(&f, a, b, &self.breaks[axis], tol)
    }
}

/// `c1 = 2 / E|X|` in dimension one, 1 otherwise.
pub fn c1(law: &IncrementLaw) -> f64 {
    match law.one() {
        Ok(l) => 2.0 / l.moments().abs_mean,
        Err(_) => 1.0,
    }
}

/// Points where the law's distribution function is not smooth.
fn law_kinks(l: &Law1) -> Vec<f64> {
    match l {
        Law1::Lattice(p) => p.units().iter().map(|u| *u as f64 * p.span()).collect(),
        Law1::Laplace => vec![0.0],
        Law1::Gaussian => vec![],
        Law1::Uniform { half_width } => vec![-half_width, *half_width],
    }
}

/// Per-coordinate hull of a set's boundary.
fn boundary_hull(set: &SetSpec, d: usize) -> Result<Vec<(f64, f64)>> {
    Ok(match set {
        SetSpec::HalfLineNonneg | SetSpec::HalfLineNeg | SetSpec::OrthantNonneg { .. } | SetSpec::OrthantNeg { .. } => {
            vec![(0.0, 0.0); d]
        }
        SetSpec::Box { lower, upper } => lower.iter().copied().zip(upper.iter().copied()).collect(),
        SetSpec::HalfOpenInterval { lo, hi } => vec![(*lo, *hi)],
        SetSpec::CustomLatticeMask { points } => (0..d)
            .map(|i| {
                let lo = points.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
                let hi = points.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            })
            .collect(),
        SetSpec::Complement { of } => boundary_hull(of, d)?,
    })
}

/// Per-coordinate extent of a set (infinite where unbounded).
fn set_extent(set: &SetSpec, d: usize) -> Vec<(f64, f64)> {
    match set {
        SetSpec::HalfLineNonneg | SetSpec::OrthantNonneg { .. } => vec![(0.0, f64::INFINITY); d],
        SetSpec::HalfLineNeg | SetSpec::OrthantNeg { .. } => vec![(f64::NEG_INFINITY, 0.0); d],
        SetSpec::Complement { .. } => vec![(f64::NEG_INFINITY, f64::INFINITY); d],
        bounded => boundary_hull(bounded, d).expect("bounded set"),
    }
}

/// `P(x + s·X ∈ set)` for `s = ±1`.
pub fn prob_shifted(law: &IncrementLaw, x: &[f64], sign: f64, set: &SetSpec) -> Result<f64> {
    let comps = law.components();
    if x.len() != comps.len() {
        return Err(LabError::domain("point dimension does not match the law"));
    }
    if let Some(d) = set.dimension() {
        if d != comps.len() {
            return Err(LabError::domain(format!("set has dimension {d}, law has dimension {}", comps.len())));
        }
    }
    // P(x_i + s X_i ∈ [l, u]) with closedness flags
    let coord = |i: usize, l: f64, lc: bool, u: f64, uc: bool| -> f64 {
        if sign > 0.0 {
            comps[i].prob_interval(l - x[i], lc, u - x[i], uc)
        } else {
            comps[i].prob_interval(x[i] - u, uc, x[i] - l, lc)
        }
    };
    let d = comps.len();
    Ok(match set {
        SetSpec::HalfLineNonneg | SetSpec::OrthantNonneg { .. } => {
            (0..d).map(|i| coord(i, 0.0, true, f64::INFINITY, false)).product()
        }
        SetSpec::HalfLineNeg | SetSpec::OrthantNeg { .. } => {
            (0..d).map(|i| coord(i, f64::NEG_INFINITY, false, 0.0, false)).product()
        }
        SetSpec::Box { lower, upper } => (0..d).map(|i| coord(i, lower[i], true, upper[i], true)).product(),
        SetSpec::HalfOpenInterval { lo, hi } => coord(0, *lo, true, *hi, false),
        SetSpec::CustomLatticeMask { points } => {
            if !law.is_lattice() {
                return Err(LabError::capability("lattice masks need a lattice law"));
            }
            points
                .iter()
                .map(|p| (0..d).map(|i| comps[i].atom(sign * (p[i] - x[i]))).product::<f64>())
                .sum()
        }
        SetSpec::Complement { of } => 1.0 - prob_shifted(law, x, sign, of)?,
    })
}

fn build(
    name: String,
    law: &IncrementLaw,
    region: Option<SetSpec>,
    f: DensityFn,
    boundary: &SetSpec,
    infinite: bool,
) -> Result<DensityOnGroup> {
    let d = law.dimension();
    let hull = boundary_hull(boundary, d)?;
    let reg_ext = match &region {
        Some(r) => set_extent(r, d),
        None => vec![(f64::NEG_INFINITY, f64::INFINITY); d],
    };
    let mut extent = Vec::with_capacity(d);
    let mut breaks = Vec::with_capacity(d);
    for (i, comp) in law.components().iter().enumerate() {
        let b = comp.support_bound();
        let (hl, hh) = hull[i];
        let (rl, rh) = reg_ext[i];
        let (mut lo, mut hi) = (rl.max(hl - b), rh.min(hh + b));
        if infinite {
            // orthant-type densities do not decay in the other coordinates
            lo = rl;
            hi = rh;
        }
        if lo > hi {
            hi = lo;
        }
        extent.push((lo, hi));
        let mut br = vec![hl, hh];
        for k in law_kinks(comp) {
            br.extend([hl + k, hl - k, hh + k, hh - k]);
        }
        br.sort_by(f64::total_cmp);
        br.dedup();
        breaks.push(br);
    }
    let mut dens = DensityOnGroup { name, law: law.clone(), region, f, mass: TotalMass::Infinite, extent, breaks };
    dens.mass = if infinite { TotalMass::Infinite } else { dens.compute_mass()? };
    Ok(dens)
}

/// `π(dx) = (c1/2) [1{x ≥ 0} P(X > x) + 1{x < 0} P(X ≤ x)] λ(dx)`, d = 1.
pub fn pi_density(law: &IncrementLaw) -> Result<DensityOnGroup> {
    let l = law.one()?.clone();
    let c = c1(law);
    let f: DensityFn = Arc::new(move |x: &[f64]| {
        let (up, low) = l.tails(x[0]);
        0.5 * c * if x[0] >= 0.0 { up } else { low }
    });
    build("pi".into(), law, None, f, &SetSpec::HalfLineNonneg, false)
}

/// `π+ = c1 (1 − P(X ≤ x))` on `[0, ∞)^d`.
pub fn pi_plus_density(law: &IncrementLaw) -> Result<DensityOnGroup> {
    let d = law.dimension();
    let c = c1(law);
    let l = law.clone();
    let f: DensityFn = Arc::new(move |x: &[f64]| c * (1.0 - l.tail_low(x)));
    let region = if d == 1 { SetSpec::HalfLineNonneg } else { SetSpec::OrthantNonneg { dim: d } };
    build("pi_plus".into(), law, Some(region.clone()), f, &region, d >= 2)
}

/// `π− = c1 (1 − P(X > x))` on `(−∞, 0)^d`, strict componentwise `>`.
pub fn pi_minus_density(law: &IncrementLaw) -> Result<DensityOnGroup> {
    let d = law.dimension();
    let c = c1(law);
    let l = law.clone();
    let f: DensityFn = Arc::new(move |x: &[f64]| c * (1.0 - l.prob_all_greater(x)));
    let region = if d == 1 { SetSpec::HalfLineNeg } else { SetSpec::OrthantNeg { dim: d } };
    build("pi_minus".into(), law, Some(region.clone()), f, &region, d >= 2)
}

fn check_set(law: &IncrementLaw, a: &SetSpec) -> Result<()> {
    a.validate("set")?;
    if let Some(d) = a.dimension() {
        if d != law.dimension() {
            return Err(LabError::domain(format!("set has dimension {d}, law has dimension {}", law.dimension())));
        }
    }
    if matches!(a, SetSpec::CustomLatticeMask { .. }) && !law.is_lattice() {
        return Err(LabError::capability("lattice masks need a lattice law"));
    }
    Ok(())
}

/// In dimension `≥ 2` the densities below have infinite mass unless `A` or
/// its complement is bounded.
fn infinite_in_high_dim(law: &IncrementLaw, a: &SetSpec) -> bool {
    law.dimension() >= 2 && !a.is_bounded() && !a.complement().is_bounded()
}

/// `λ_A^entr(dx) = P(X ∈ x − A^c) λ(dx)` on `A`.
pub fn lambda_entr_density(law: &IncrementLaw, a: &SetSpec) -> Result<DensityOnGroup> {
    check_set(law, a)?;
    let ac = a.complement();
    let l = law.clone();
    let acc = ac.clone();
    let f: DensityFn = Arc::new(move |x: &[f64]| prob_shifted(&l, x, -1.0, &acc).expect("validated set"));
    let infinite = infinite_in_high_dim(law, a);
    build("lambda_entr".into(), law, Some(a.clone()), f, a, infinite)
}

/// `λ_{A^c}^exit(dx) = P(X ∈ A − x) λ(dx)` on `A^c`.
pub fn lambda_exit_density(law: &IncrementLaw, a: &SetSpec) -> Result<DensityOnGroup> {
    check_set(law, a)?;
    let ac = a.complement();
    let l = law.clone();
    let aa = a.clone();
    let f: DensityFn = Arc::new(move |x: &[f64]| prob_shifted(&l, x, 1.0, &aa).expect("validated set"));
    let infinite = infinite_in_high_dim(law, a);
    build("lambda_exit".into(), law, Some(ac), f, a, infinite)
}

/// `∫|y| π(dy)` three ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsMoment {
    /// `σ² / (2 E|X|)`.
    pub closed: f64,
    /// `½ (E1 + E2)` with `E1 = c1 ∫_0^∞ (y − h/2) P(X > y) dy`,
    /// `E2 = c1 ∫_0^∞ (y + h/2) P(−X > y) dy`.
    pub tail_integrals: f64,
    /// `∫|y| π(dy)` from the density.
    pub direct: f64,
}

/// `∫|y| π(dy) = σ²/(2E|X|)`, cross-checked against two independent
/// integrals; fails if they disagree by more than 1e-8 relative.
pub fn abs_first_moment_pi(law: &IncrementLaw) -> Result<AbsMoment> {
    let l = law.one()?;
    if !l.is_mean_zero() {
        return Err(LabError::domain("the first absolute moment of π needs a mean-zero law"));
    }
    let m = l.moments();
    let closed = m.second_moment / (2.0 * m.abs_mean);
    let c = c1(law);
    let h = l.span();
    let b = l.support_bound();
    let mut kinks = law_kinks(l);
    kinks.extend(kinks.clone().iter().map(|k| -k));
    let e1 = c * quad::integrate(&|y: f64| (y - h / 2.0) * l.tail_up(y), 0.0, b, &kinks, QUAD_TOL);
    let e2 = c * quad::integrate(&|y: f64| (y + h / 2.0) * neg_tail(l, y), 0.0, b, &kinks, QUAD_TOL);
    let tail_integrals = 0.5 * (e1 + e2);
    let direct = pi_density(law)?.integrate1(f64::abs)?;
    let rel = |a: f64| (a - closed).abs() / closed;
    if rel(tail_integrals) > 1e-8 || rel(direct) > 1e-8 {
        return Err(LabError::domain(format!(
            "moment routes disagree: closed {closed}, tail integrals {tail_integrals}, direct {direct}"
        )));
    }
    Ok(AbsMoment { closed, tail_integrals, direct })
}

/// `P(−X > y) = P(X < −y)`.
fn neg_tail(l: &Law1, y: f64) -> f64 {
    l.prob_interval(f64::NEG_INFINITY, false, -y, false)
}

#[cfg(test)]
mod tests;
