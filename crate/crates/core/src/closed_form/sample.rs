use rand::distr::Distribution;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;

use super::quad::GaussLegendre;
use super::{DensityOnGroup, TotalMass};
use crate::error::{LabError, Result};
use crate::rng::RngState;

const CELL_WIDTH: f64 = 0.25;
const X_TOL: f64 = 1e-12;

/// Exact sampler for a finite-mass density, prepared once.
///
/// Lattice densities use an alias table over their atoms. One-dimensional
/// continuum densities are inverted cell by cell: the cell is chosen from
/// cumulative masses, then `F(t) = r` is solved by safeguarded Newton
/// iteration to `1e-12`.
#[derive(Clone)]
pub enum Sampler {
    Atoms {
        points: Vec<Vec<f64>>,
        alias: WeightedAliasIndex<f64>,
    },
    Continuum {
        density: DensityOnGroup,
        cells: Vec<(f64, f64)>,
        cumulative: Vec<f64>,
        gl: GaussLegendre,
    },
}

impl Sampler {
    pub fn new(density: &DensityOnGroup) -> Result<Sampler> {
        if density.total_mass() == TotalMass::Infinite {
            return Err(LabError::capability(format!(
                "{} has infinite mass and cannot be sampled; use a ratio test instead",
                density.name()
            )));
        }
        if density.is_lattice() {
            let atoms = density.atoms()?;
            if atoms.is_empty() {
                return Err(LabError::domain(format!("{} has no mass", density.name())));
            }
            let (points, weights): (Vec<_>, Vec<_>) = atoms.into_iter().unzip();
            let alias = WeightedAliasIndex::new(weights).map_err(|e| LabError::domain(e.to_string()))?;
            return Ok(Sampler::Atoms { points, alias });
        }
        if density.dimension() != 1 {
            return Err(LabError::capability("continuum sampling is one-dimensional only"));
        }
        let (a, b) = density.extent()[0];
        let mut edges: Vec<f64> = density.breaks(0).iter().copied().filter(|x| *x > a && *x < b).collect();
        edges.push(a);
        edges.push(b);
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let gl = GaussLegendre::new(20);
        let mut cells = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        let f = |x: f64| density.density1(x);
        for w in edges.windows(2) {
            let k = ((w[1] - w[0]) / CELL_WIDTH).ceil().max(1.0) as usize;
            for i in 0..k {
                let lo = w[0] + (w[1] - w[0]) * i as f64 / k as f64;
                let hi = if i + 1 == k { w[1] } else { w[0] + (w[1] - w[0]) * (i + 1) as f64 / k as f64 };
                let m = gl.integrate(&f, lo, hi);
                if m > 0.0 {
                    acc += m;
                    cells.push((lo, hi));
                    cumulative.push(acc);
                }
            }
        }
        if cells.is_empty() {
            return Err(LabError::domain(format!("{} has no mass", density.name())));
        }
        Ok(Sampler::Continuum { density: density.clone(), cells, cumulative, gl })
    }

    /// One draw of a one-dimensional density.
    pub fn draw(&self, rng: &mut RngState) -> f64 {
        match self {
            Sampler::Atoms { points, alias } => points[alias.sample(rng)][0],
            Sampler::Continuum { density, cells, cumulative, gl } => {
                let total = *cumulative.last().unwrap();
                let u = rng.random::<f64>() * total;
                let i = cumulative.partition_point(|c| *c <= u).min(cells.len() - 1);
                let before = if i == 0 { 0.0 } else { cumulative[i - 1] };
                let (c0, c1) = cells[i];
                let mass = cumulative[i] - before;
                let r = (u - before).clamp(0.0, mass);
                invert(&|x| density.density1(x), gl, c0, c1, r, mass)
            }
        }
    }

    /// Distribution function of a normalized one-dimensional continuum
    /// law; NaN for atomic laws.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Sampler::Atoms { .. } => f64::NAN,
            Sampler::Continuum { density, cells, cumulative, gl } => {
                let total = *cumulative.last().unwrap();
                let i = cells.partition_point(|c| c.0 <= x);
                if i == 0 {
                    return 0.0;
                }
                let (c0, c1) = cells[i - 1];
                let before = if i == 1 { 0.0 } else { cumulative[i - 2] };
                let within = if x >= c1 { cumulative[i - 1] - before } else { gl.integrate(&|t| density.density1(t), c0, x) };
                ((before + within) / total).clamp(0.0, 1.0)
            }
        }
    }

    pub fn draw_point(&self, rng: &mut RngState) -> Vec<f64> {
        match self {
            Sampler::Atoms { points, alias } => points[alias.sample(rng)].clone(),
            Sampler::Continuum { .. } => vec![self.draw(rng)],
        }
    }
}

/// Solves `∫_{c0}^t f = r` for `t` in `[c0, c1]`.
fn invert<F: Fn(f64) -> f64>(f: &F, gl: &GaussLegendre, c0: f64, c1: f64, r: f64, mass: f64) -> f64 {
    let (mut lo, mut hi) = (c0, c1);
    let mut t = c0 + (c1 - c0) * (r / mass);
    for _ in 0..100 {
        let g = gl.integrate(f, c0, t) - r;
        if g < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let ft = f(t);
        let mut next = if ft > 0.0 { t - g / ft } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= X_TOL * (1.0 + t.abs()) || hi - lo <= X_TOL {
            return next;
        }
        t = next;
    }
    t
}

/// `n` i.i.d. draws.
pub fn sample_from(density: &DensityOnGroup, rng: &mut RngState, n: usize) -> Result<Vec<Vec<f64>>> {
    let s = Sampler::new(density)?;
    Ok((0..n).map(|_| s.draw_point(rng)).collect())
}
