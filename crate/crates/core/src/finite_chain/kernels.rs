//! Induced, entrance and exit kernels by first-passage linear algebra.
//!
//! With `A` and `A^c` ordered by index, `P` splits into blocks
//! `R = P[A,A]`, `U = P[A,A^c]`, `V = P[A^c,A]`, `Q = P[A^c,A^c]`.

use nalgebra::{DMatrix, DVector};

use super::linalg::{solve, solve_left};
use crate::error::{LabError, Result};

/// Support threshold for `A_en` and `A^c_ex`.
pub const SUPPORT_EPS: f64 = 1e-14;

/// A partition of `{0, .., n-1}` into `A` and `A^c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub a: Vec<usize>,
    pub ac: Vec<usize>,
}

impl Partition {
    pub fn new(n: usize, a: &[usize]) -> Result<Partition> {
        let mut mask = vec![false; n];
        for &i in a {
            if i >= n {
                return Err(LabError::config("A", format!("index {i} out of range for {n} states")));
            }
            mask[i] = true;
        }
        Ok(Partition::from_mask(&mask))
    }

    pub fn from_mask(mask: &[bool]) -> Partition {
        let a = (0..mask.len()).filter(|i| mask[*i]).collect();
        let ac = (0..mask.len()).filter(|i| !mask[*i]).collect();
        Partition { a, ac }
    }

    pub fn complement(&self) -> Partition {
        Partition { a: self.ac.clone(), ac: self.a.clone() }
    }

    pub fn is_nontrivial(&self) -> bool {
        !self.a.is_empty() && !self.ac.is_empty()
    }
}

pub fn sub(p: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| p[(rows[i], cols[j])])
}

pub fn sub_vec(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_fn(idx.len(), |i, _| v[idx[i]])
}

/// The four blocks of `P` and the first-passage operators built from them.
#[derive(Debug, Clone)]
pub struct Blocks {
    pub r: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

impl Blocks {
    pub fn new(p: &DMatrix<f64>, part: &Partition) -> Blocks {
        Blocks {
            r: sub(p, &part.a, &part.a),
            u: sub(p, &part.a, &part.ac),
            v: sub(p, &part.ac, &part.a),
            q: sub(p, &part.ac, &part.ac),
        }
    }

    /// `(I − Q)^{-1} V`: law of the first state in `A` from each state of `A^c`.
    pub fn hit_a(&self) -> Result<DMatrix<f64>> {
        let m = DMatrix::identity(self.q.nrows(), self.q.nrows()) - &self.q;
        solve(&m, &self.v).map_err(|_| LabError::structural("A^c contains a closed class: (I − Q) is singular"))
    }

    /// `(I − R)^{-1} U`: law of the first state in `A^c` from each state of `A`.
    pub fn hit_ac(&self) -> Result<DMatrix<f64>> {
        let m = DMatrix::identity(self.r.nrows(), self.r.nrows()) - &self.r;
        solve(&m, &self.u).map_err(|_| LabError::structural("A contains a closed class: (I − R) is singular"))
    }

    /// `G = (I − R)^{-1} U (I − Q)^{-1}`: expected visits to each `w ∈ A^c`
    /// during the first `A^c`-sojourn after leaving `A`.
    pub fn exit_green(&self) -> Result<DMatrix<f64>> {
        let m = DMatrix::identity(self.q.nrows(), self.q.nrows()) - &self.q;
        let h = self.hit_ac()?;
        solve_left(&m, &h).map_err(|_| LabError::structural("A^c contains a closed class: (I − Q) is singular"))
    }

    /// `P_x(Y_1 ∈ A)` for `x ∈ A^c`.
    pub fn step_into_a(&self) -> DVector<f64> {
        DVector::from_fn(self.v.nrows(), |i, _| self.v.row(i).sum())
    }
}

/// `P̂(x,y) = μ(y) P(y,x) / μ(x)`.
pub fn dual(p: &DMatrix<f64>, mu: &DVector<f64>) -> Result<DMatrix<f64>> {
    if let Some(i) = mu.iter().position(|m| !(*m > 0.0)) {
        return Err(LabError::domain(format!("stationary mass of state {i} is zero")));
    }
    let n = p.nrows();
    Ok(DMatrix::from_fn(n, n, |x, y| mu[y] * p[(y, x)] / mu[x]))
}

/// `P_A = R + U (I − Q)^{-1} V`.
pub fn induced_kernel(p: &DMatrix<f64>, part: &Partition) -> Result<DMatrix<f64>> {
    let b = Blocks::new(p, part);
    if part.ac.is_empty() {
        return Ok(b.r);
    }
    Ok(&b.r + &b.u * b.hit_a()?)
}

/// `E_A = (I − R)^{-1} U (I − Q)^{-1} V`, indexed by `A × A`.
pub fn entrance_kernel(p: &DMatrix<f64>, part: &Partition) -> Result<DMatrix<f64>> {
    if !part.is_nontrivial() {
        if part.a.len() == 1 {
            return Ok(DMatrix::from_element(1, 1, 1.0));
        }
        return Err(LabError::structural("the entrance chain needs a nonempty complement"));
    }
    let b = Blocks::new(p, part);
    Ok(b.hit_ac()? * b.hit_a()?)
}

/// Positions in `A^c` (as indices into `part.ac`) with `P_x(Y_1 ∈ A) > 0`.
pub fn exit_support(p: &DMatrix<f64>, part: &Partition) -> Vec<usize> {
    let b = Blocks::new(p, part);
    let s = b.step_into_a();
    (0..s.len()).filter(|i| s[*i] > SUPPORT_EPS).collect()
}

/// Exit kernel on `A^c_ex`, returned with `A^c_ex` as indices into `part.ac`.
///
/// Row `x`: step into `A` conditioned on doing so, then the last `A^c`
/// position before the next entrance,
/// `Σ_y [P(x,y)/p_x] G(y,w) p_w`.
pub fn exit_kernel(p: &DMatrix<f64>, part: &Partition) -> Result<(Vec<usize>, DMatrix<f64>)> {
    if !part.is_nontrivial() {
        return Err(LabError::structural("the exit chain needs A and A^c nonempty"));
    }
    let b = Blocks::new(p, part);
    let ex = exit_support(p, part);
    if ex.is_empty() {
        return Err(LabError::structural("A is not reachable in one step from A^c"));
    }
    let pa = b.step_into_a();
    let g = b.exit_green()?;
    let k = ex.len();
    let mut out = DMatrix::zeros(k, k);
    for (i, &x) in ex.iter().enumerate() {
        for (j, &w) in ex.iter().enumerate() {
            let s: f64 = (0..part.a.len()).map(|y| b.v[(x, y)] * g[(y, w)]).sum();
            out[(i, j)] = s / pa[x] * pa[w];
        }
    }
    Ok((ex, out))
}

/// Exit kernel row for a single `x ∈ A^c` (index into `part.ac`).
pub fn exit_row(p: &DMatrix<f64>, part: &Partition, x: usize) -> Result<DVector<f64>> {
    let (ex, k) = exit_kernel(p, part)?;
    let i = ex
        .iter()
        .position(|e| *e == x)
        .ok_or_else(|| LabError::domain(format!("state {} cannot step into A", part.ac[x])))?;
    Ok(k.row(i).transpose())
}

/// `(μ_A^entr, μ_{A^c}^exit)` and the largest disagreement between the two
/// formulas for `μ_A^entr`.
#[derive(Debug, Clone)]
pub struct EntranceExitMeasures {
    /// On `A`: `P_x(Ŷ_1 ∈ A^c) μ(x)`.
    pub entr: DVector<f64>,
    /// On `A`: `Σ_{y ∈ A^c} μ(y) P(y, x)`.
    pub entr_cross: DVector<f64>,
    /// On `A^c`: `P_x(Y_1 ∈ A) μ(x)`.
    pub exit: DVector<f64>,
    /// `P_{μ|A^c}(Y_1 ∈ A) = Σ_{x ∈ A^c} μ(x) P(x, A)`.
    pub flux: f64,
}

impl EntranceExitMeasures {
    pub fn formula_gap(&self) -> f64 {
        if self.entr.is_empty() {
            return 0.0;
        }
        (&self.entr - &self.entr_cross).amax()
    }

    pub fn mass_gap(&self) -> f64 {
        let (e, x) = (self.entr.sum(), self.exit.sum());
        (e - x).abs().max((e - self.flux).abs()).max((x - self.flux).abs())
    }
}

pub fn entrance_exit_measures(p: &DMatrix<f64>, mu: &DVector<f64>, part: &Partition) -> Result<EntranceExitMeasures> {
    let ph = dual(p, mu)?;
    let entr = DVector::from_fn(part.a.len(), |i, _| {
        let x = part.a[i];
        mu[x] * part.ac.iter().map(|y| ph[(x, *y)]).sum::<f64>()
    });
    let entr_cross =
        DVector::from_fn(part.a.len(), |i, _| part.ac.iter().map(|y| mu[*y] * p[(*y, part.a[i])]).sum::<f64>());
    let exit = DVector::from_fn(part.ac.len(), |i, _| {
        let x = part.ac[i];
        mu[x] * part.a.iter().map(|y| p[(x, *y)]).sum::<f64>()
    });
    let flux = part.ac.iter().map(|x| mu[*x] * part.a.iter().map(|y| p[(*x, *y)]).sum::<f64>()).sum();
    Ok(EntranceExitMeasures { entr, entr_cross, exit, flux })
}

/// Lifts a measure `ν` on `A` (indexed by `part.a`) to all states through
/// expected occupation before returning to `A`: `ν` on `A`, `ν U (I − Q)^{-1}`
/// on `A^c`.
pub fn kac_lift(p: &DMatrix<f64>, part: &Partition, nu: &DVector<f64>) -> Result<DVector<f64>> {
    let n = p.nrows();
    let mut out = DVector::zeros(n);
    for (i, &x) in part.a.iter().enumerate() {
        out[x] = nu[i];
    }
    if part.ac.is_empty() {
        return Ok(out);
    }
    let b = Blocks::new(p, part);
    let m = DMatrix::identity(b.q.nrows(), b.q.nrows()) - &b.q;
    let row = DMatrix::from_row_slice(1, nu.len(), nu.as_slice()) * &b.u;
    let lifted = solve_left(&m, &row).map_err(|_| LabError::structural("A^c contains a closed class"))?;
    for (i, &x) in part.ac.iter().enumerate() {
        out[x] = lifted[(0, i)];
    }
    Ok(out)
}

/// Lifts an entrance measure `η` on `A` through occupation up to the next
/// entrance: `η (I − R)^{-1}` on `A`, `η (I − R)^{-1} U (I − Q)^{-1}` on `A^c`.
pub fn kac_lift_entrance(p: &DMatrix<f64>, part: &Partition, eta: &DVector<f64>) -> Result<DVector<f64>> {
    if !part.is_nontrivial() {
        return Err(LabError::structural("entrance lifting needs A and A^c nonempty"));
    }
    let b = Blocks::new(p, part);
    let ir = DMatrix::identity(b.r.nrows(), b.r.nrows()) - &b.r;
    let on_a = solve_left(&ir, &DMatrix::from_row_slice(1, eta.len(), eta.as_slice())).map_err(|_| LabError::structural("A contains a closed class"))?;
    let g = b.exit_green()?;
    let on_ac = eta.transpose() * g;
    let mut out = DVector::zeros(p.nrows());
    for (i, &x) in part.a.iter().enumerate() {
        out[x] = on_a[(0, i)];
    }
    for (i, &x) in part.ac.iter().enumerate() {
        out[x] = on_ac[(0, i)];
    }
    Ok(out)
}

/// All derived objects of a chain and a set.
#[derive(Debug, Clone)]
pub struct DerivedKernels {
    pub dual: DMatrix<f64>,
    pub induced: DMatrix<f64>,
    pub entrance: DMatrix<f64>,
    /// `A^c_ex` as indices into `part.ac`, and the exit kernel on it.
    pub exit_states: Vec<usize>,
    pub exit: DMatrix<f64>,
    pub measures: EntranceExitMeasures,
    pub mu_a: DVector<f64>,
    /// `A_en` as indices into `part.a`.
    pub entrance_states: Vec<usize>,
}

impl DerivedKernels {
    pub fn compute(p: &DMatrix<f64>, mu: &DVector<f64>, part: &Partition) -> Result<DerivedKernels> {
        let dual = dual(p, mu)?;
        let induced = induced_kernel(p, part)?;
        let entrance = entrance_kernel(p, part)?;
        let (exit_states, exit) = exit_kernel(p, part)?;
        let measures = entrance_exit_measures(p, mu, part)?;
        let entrance_states = (0..part.a.len()).filter(|i| measures.entr_cross[*i] > SUPPORT_EPS).collect();
        Ok(DerivedKernels {
            dual,
            induced,
            entrance,
            exit_states,
            exit,
            measures,
            mu_a: sub_vec(mu, &part.a),
            entrance_states,
        })
    }
}
