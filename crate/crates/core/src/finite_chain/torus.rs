use nalgebra::DMatrix;

use super::kernels::entrance_exit_measures;
use super::verify::IdentityCheck;
use super::FiniteChain;
use crate::error::{LabError, Result};
use crate::increments::{IncrementLaw, Law1};

/// Random walk on `(Z/mZ)^d` with a lattice increment law, states in
/// row-major order, with the uniform law as `μ`. `A` is left empty; set it with [`FiniteChain::with_set`].
///
/// Increments with any unit coordinate of size `≥ m` would wrap onto a
/// different residue ambiguously and are rejected.
pub fn torus_walk(d: usize, m: usize, law: &IncrementLaw) -> Result<FiniteChain> {
    if !(d == 1 || d == 2) {
        return Err(LabError::config("d", "torus dimension must be 1 or 2"));
    }
    if m < 3 {
        return Err(LabError::config("m", "torus side must be at least 3"));
    }
    if law.dimension() != d {
        return Err(LabError::config("law", format!("law has dimension {}, torus has {d}", law.dimension())));
    }
    if !law.is_lattice() {
        return Err(LabError::capability("torus walks need a lattice increment law"));
    }
    let steps = unit_steps(law, m)?;
    let n = m.pow(d as u32);
    let mi = m as i64;
    let mut p = DMatrix::zeros(n, n);
    for s in 0..n {
        let coords: Vec<i64> = if d == 1 { vec![s as i64] } else { vec![(s / m) as i64, (s % m) as i64] };
        for (v, w) in &steps {
            let t = coords.iter().zip(v).fold(0usize, |acc, (c, u)| acc * m + (c + u).rem_euclid(mi) as usize);
            p[(s, t)] += w;
        }
    }
    for i in 0..n {
        let s = p.row(i).sum();
        for j in 0..n {
            p[(i, j)] /= s;
        }
    }
    let states = (0..n)
        .map(|s| if d == 1 { serde_json::json!(s) } else { serde_json::json!([s / m, s % m]) })
        .collect();
    // doubly stochastic, and reducible when increments preserve a parity
    FiniteChain::with_states(states, p, &[])?.with_invariant(nalgebra::DVector::from_element(n, 1.0 / n as f64))
}

/// Joint pmf of the product law on unit vectors.
fn unit_steps(law: &IncrementLaw, m: usize) -> Result<Vec<(Vec<i64>, f64)>> {
    let mut steps: Vec<(Vec<i64>, f64)> = vec![(Vec::new(), 1.0)];
    for c in law.components() {
        let Law1::Lattice(pmf) = c else { unreachable!("lattice law") };
        let mut next = Vec::new();
        for (v, w) in &steps {
            for (u, q) in pmf.units().iter().zip(pmf.weights()) {
                if u.unsigned_abs() as usize >= m {
                    return Err(LabError::domain(format!(
                        "increment unit {u} reaches the torus side {m}: wraparound is ambiguous"
                    )));
                }
                let mut v2 = v.clone();
                v2.push(*u);
                next.push((v2, w * q));
            }
        }
        steps = next;
    }
    Ok(steps)
}

/// Compares the entrance measure of the torus walk into the residue box
/// `lower..=upper` with the tail form `μ(x) P(x − X ∉ A)`.
pub fn torus_tail_form_check(d: usize, m: usize, law: &IncrementLaw, lower: &[usize], upper: &[usize]) -> Result<IdentityCheck> {
    if lower.len() != d || upper.len() != d || lower.iter().zip(upper).any(|(l, u)| l > u || *u >= m) {
        return Err(LabError::config("A", format!("need a box of residues in [0, {m}) with {d} coordinates")));
    }
    let chain = torus_walk(d, m, law)?;
    let index = |c: &[i64]| c.iter().fold(0usize, |acc, x| acc * m + x.rem_euclid(m as i64) as usize);
    let coords = |s: usize| -> Vec<i64> { if d == 1 { vec![s as i64] } else { vec![(s / m) as i64, (s % m) as i64] } };
    let inside = |s: usize| coords(s).iter().zip(lower.iter().zip(upper)).all(|(x, (l, u))| *l as i64 <= *x && *x <= *u as i64);
    let a: Vec<usize> = (0..chain.len()).filter(|s| inside(*s)).collect();
    let chain = chain.with_set(&a)?;
    let mu = chain.mu()?;
    let measures = entrance_exit_measures(chain.p(), mu, chain.partition())?;
    let steps = unit_steps(law, m)?;
    let mut gap = 0.0f64;
    for (k, &s) in chain.partition().a.iter().enumerate() {
        let x = coords(s);
        let out: f64 = steps
            .iter()
            .filter(|(v, _)| !inside(index(&x.iter().zip(v).map(|(c, u)| c - u).collect::<Vec<_>>())))
            .map(|(_, w)| w)
            .sum();
        gap = gap.max((measures.entr[k] - mu[s] * out).abs());
    }
    Ok(IdentityCheck::new("torus_entrance_tail_form", gap, super::verify::TOL_MASS))
}
