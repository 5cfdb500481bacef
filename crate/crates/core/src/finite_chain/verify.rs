//! Exact checks of the invariance, duality, reduction and lifting
//! identities on finite chains.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use super::kernels::{
    entrance_kernel, kac_lift, kac_lift_entrance, sub, sub_vec, Blocks, DerivedKernels, Partition,
};
use super::linalg::{invariance_residual, row_sum_defect, stationary, MAX_STATES};
use crate::error::{LabError, Result};
use crate::rng;

/// Tolerance of invariance, duality and reduction identities.
pub const TOL_IDENTITY: f64 = 1e-10;
/// Tolerance of the Kac lifts.
pub const TOL_KAC: f64 = 1e-11;
/// Tolerance of the two entrance formulas and the mass identity.
pub const TOL_MASS: f64 = 1e-12;
/// Pair-chain size above which the product reduction is skipped.
pub const PRODUCT_CAP: usize = MAX_STATES;

/// One checked identity. `threshold = None` marks an informational value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub residual: f64,
    pub threshold: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

impl IdentityCheck {
    pub(crate) fn new(identity: &str, residual: f64, threshold: f64) -> IdentityCheck {
        IdentityCheck {
            identity: identity.into(),
            residual,
            threshold: Some(threshold),
            pass: residual <= threshold,
            skipped: None,
        }
    }

    fn info(identity: &str, residual: f64) -> IdentityCheck {
        IdentityCheck { identity: identity.into(), residual, threshold: None, pass: true, skipped: None }
    }

    fn skip(identity: &str, reason: impl Into<String>) -> IdentityCheck {
        IdentityCheck { identity: identity.into(), residual: 0.0, threshold: None, pass: true, skipped: Some(reason.into()) }
    }
}

fn max_abs(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    (a - b).amax()
}

fn precondition(p: &DMatrix<f64>, mu: &DVector<f64>, part: &Partition) -> Option<String> {
    if !part.is_nontrivial() {
        return Some("A must be a nonempty proper subset".into());
    }
    let flux: f64 = part.ac.iter().map(|x| mu[*x] * part.a.iter().map(|y| p[(*x, *y)]).sum::<f64>()).sum();
    if !(flux > 0.0) {
        return Some("A is never entered from A^c under μ".into());
    }
    None
}

/// Invariance of `μ_A`, `μ_A^entr` and `μ_{A^c}^exit` under the induced,
/// entrance and exit kernels, plus row-stochasticity of all three.
pub fn verify_invariance(p: &DMatrix<f64>, mu: &DVector<f64>, part: &Partition) -> Result<Vec<IdentityCheck>> {
    let names = ["induced_invariance", "entrance_invariance", "exit_invariance", "kernels_row_stochastic"];
    if let Some(why) = precondition(p, mu, part) {
        return Ok(names.iter().map(|n| IdentityCheck::skip(n, why.clone())).collect());
    }
    let k = DerivedKernels::compute(p, mu, part)?;
    let mu_exit = sub_vec(&k.measures.exit, &k.exit_states);
    let stoch = row_sum_defect(&k.induced).max(row_sum_defect(&k.entrance)).max(row_sum_defect(&k.exit));
    Ok(vec![
        IdentityCheck::new(names[0], invariance_residual(&k.mu_a, &k.induced), TOL_IDENTITY),
        IdentityCheck::new(names[1], invariance_residual(&k.measures.entr, &k.entrance), TOL_IDENTITY),
        IdentityCheck::new(names[2], invariance_residual(&mu_exit, &k.exit), TOL_IDENTITY),
        IdentityCheck::new(names[3], stoch, TOL_IDENTITY),
    ])
}

/// The two formulas for `μ_A^entr` and the common mass of the entrance and
/// exit measures.
pub fn verify_measures(p: &DMatrix<f64>, mu: &DVector<f64>, part: &Partition) -> Result<Vec<IdentityCheck>> {
    if let Some(why) = precondition(p, mu, part) {
        return Ok(vec![IdentityCheck::skip("entrance_two_formulas", why.clone()), IdentityCheck::skip("mass_identity", why)]);
    }
    let m = super::kernels::entrance_exit_measures(p, mu, part)?;
    Ok(vec![
        IdentityCheck::new("entrance_two_formulas", m.formula_gap(), TOL_MASS),
        IdentityCheck::new("mass_identity", m.mass_gap(), TOL_MASS),
    ])
}

/// Exit chain of `Y` from `A^c` against the entrance chain of the dual `Ŷ`
/// into `A^c`, both on `A^c_ex` and started from `μ_{A^c}^exit`.
///
/// The asserted identity is the time-reversal form
/// `μ^exit(x) X(x,y) = μ^exit(y) Ê(y,x)`: the stationary exit chain run
/// forward has the law of the stationary dual entrance chain run backward.
/// The forward kernel gap `max |X − Ê|` is reported without a threshold;
/// it vanishes for reversible chains but not in general.
pub fn verify_duality(p: &DMatrix<f64>, mu: &DVector<f64>, part: &Partition) -> Result<Vec<IdentityCheck>> {
    if let Some(why) = precondition(p, mu, part) {
        return Ok(vec![IdentityCheck::skip("duality_time_reversal", why)]);
    }
    let k = DerivedKernels::compute(p, mu, part)?;
    let comp = part.complement();
    let eh_full = entrance_kernel(&k.dual, &comp)?;
    let ex = &k.exit_states;
    let eh = sub(&eh_full, ex, ex);
    let w = sub_vec(&k.measures.exit, ex);
    let n = ex.len();
    let mut reversal: f64 = 0.0;
    let mut forward: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            reversal = reversal.max((w[i] * k.exit[(i, j)] - w[j] * eh[(j, i)]).abs());
            forward = forward.max((k.exit[(i, j)] - eh[(i, j)]).abs());
        }
    }
    let leak = row_sum_defect(&eh);
    Ok(vec![
        IdentityCheck::new("duality_time_reversal", reversal.max(leak), TOL_IDENTITY),
        IdentityCheck::info("duality_forward_kernel_gap", forward),
    ])
}

/// Pair chain `Z((x,y),(y,z)) = P(y,z)` on support pairs, induced on
/// `A^c × A`: its stationary law must be the stationary (exit, entrance) law
/// `∝ μ(w) P(w,z)` and its kernel `G(z,w') P(w',z')`.
pub fn verify_product_reduction(p: &DMatrix<f64>, mu: &DVector<f64>, part: &Partition) -> Result<Vec<IdentityCheck>> {
    let names = ["product_reduction_law", "product_reduction_kernel"];
    if let Some(why) = precondition(p, mu, part) {
        return Ok(names.iter().map(|n| IdentityCheck::skip(n, why.clone())).collect());
    }
    let n = p.nrows();
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).filter(|(x, y)| p[(*x, *y)] > 0.0).collect();
    if pairs.len() > PRODUCT_CAP {
        return Ok(names
            .iter()
            .map(|nm| IdentityCheck::skip(nm, format!("{} pair states exceed the cap {PRODUCT_CAP}", pairs.len())))
            .collect());
    }
    let m = pairs.len();
    let mut index = BTreeMap::new();
    for (i, pr) in pairs.iter().enumerate() {
        index.insert(*pr, i);
    }
    let mut z = DMatrix::zeros(m, m);
    for (i, &(_, y)) in pairs.iter().enumerate() {
        for zz in 0..n {
            if let Some(&j) = index.get(&(y, zz)) {
                z[(i, j)] = p[(y, zz)];
            }
        }
    }
    let in_a: Vec<bool> = (0..n).map(|i| part.a.binary_search(&i).is_ok()).collect();
    let mask: Vec<bool> = pairs.iter().map(|(x, y)| !in_a[*x] && in_a[*y]).collect();
    let zpart = Partition::from_mask(&mask);
    let zind = super::kernels::induced_kernel(&z, &zpart)?;
    let law = stationary(&zind)?;
    let target = DVector::from_fn(zpart.a.len(), |i, _| {
        let (w, zz) = pairs[zpart.a[i]];
        mu[w] * p[(w, zz)]
    });
    let target = &target / target.sum();
    // kernel (w,z) -> (w',z') = G(z,w') P(w',z')
    let g = Blocks::new(p, part).exit_green()?;
    let pos_a = |s: usize| part.a.binary_search(&s).unwrap();
    let pos_ac = |s: usize| part.ac.binary_search(&s).unwrap();
    let mut kgap: f64 = 0.0;
    for (i, &si) in zpart.a.iter().enumerate() {
        let (_, zz) = pairs[si];
        for (j, &sj) in zpart.a.iter().enumerate() {
            let (w2, z2) = pairs[sj];
            let want = g[(pos_a(zz), pos_ac(w2))] * p[(w2, z2)];
            kgap = kgap.max((zind[(i, j)] - want).abs());
        }
    }
    Ok(vec![IdentityCheck::new(names[0], max_abs(&law, &target), TOL_IDENTITY), IdentityCheck::new(names[1], kgap, TOL_IDENTITY)])
}

/// Lifting `μ_A` and `μ_A^entr` reproduces `μ`.
pub fn verify_kac(p: &DMatrix<f64>, mu: &DVector<f64>, part: &Partition) -> Result<Vec<IdentityCheck>> {
    if let Some(why) = precondition(p, mu, part) {
        return Ok(vec![IdentityCheck::skip("kac_lift", why.clone()), IdentityCheck::skip("kac_lift_entrance", why)]);
    }
    let m = super::kernels::entrance_exit_measures(p, mu, part)?;
    let lifted = kac_lift(p, part, &sub_vec(mu, &part.a))?;
    let lifted_entr = kac_lift_entrance(p, part, &m.entr)?;
    Ok(vec![
        IdentityCheck::new("kac_lift", max_abs(&lifted, mu), TOL_KAC),
        IdentityCheck::new("kac_lift_entrance", max_abs(&lifted_entr, mu), TOL_KAC),
    ])
}

/// The invariant vector of the induced chain (resp. the entrance chain on
/// `A_en`), lifted and normalized, is `μ`.
pub fn verify_bijection(p: &DMatrix<f64>, part: &Partition) -> Result<Vec<IdentityCheck>> {
    let mu = stationary(p)?;
    if let Some(why) = precondition(p, &mu, part) {
        return Ok(vec![IdentityCheck::skip("lift_proportional_induced", why.clone()), IdentityCheck::skip("lift_proportional_entrance", why)]);
    }
    let k = DerivedKernels::compute(p, &mu, part)?;
    let nu = stationary(&k.induced)?;
    let lifted = kac_lift(p, part, &nu)?;
    let induced_gap = max_abs(&(&lifted / lifted.sum()), &mu);
    let en = &k.entrance_states;
    let e_en = sub(&k.entrance, en, en);
    let eta_en = stationary(&e_en)?;
    let mut eta = DVector::zeros(part.a.len());
    for (i, &s) in en.iter().enumerate() {
        eta[s] = eta_en[i];
    }
    let lifted = kac_lift_entrance(p, part, &eta)?;
    let entrance_gap = max_abs(&(&lifted / lifted.sum()), &mu);
    Ok(vec![
        IdentityCheck::new("lift_proportional_induced", induced_gap, TOL_IDENTITY),
        IdentityCheck::new("lift_proportional_entrance", entrance_gap, TOL_IDENTITY),
    ])
}

/// Every check for one chain and set. The product reduction runs only when
/// the chain has at most `product_max_states` states.
pub fn verify_all(p: &DMatrix<f64>, part: &Partition, product_max_states: usize) -> Result<Vec<IdentityCheck>> {
    let mu = stationary(p)?;
    let mut out = vec![IdentityCheck::new("stationary_residual", invariance_residual(&mu, p), 1e-12)];
    out.extend(verify_invariance(p, &mu, part)?);
    out.extend(verify_measures(p, &mu, part)?);
    out.extend(verify_duality(p, &mu, part)?);
    if p.nrows() <= product_max_states {
        out.extend(verify_product_reduction(p, &mu, part)?);
    }
    out.extend(verify_kac(p, &mu, part)?);
    out.extend(verify_bijection(p, part)?);
    Ok(out)
}

/// Seeded random irreducible chain and nontrivial `A`.
///
/// Each row puts Dirichlet(1, …, 1) weights on a random support of at most
/// four states plus the forced cycle edge `i → i+1 mod n`.
pub fn random_chain(seed: u64, index: u64, min_states: usize, max_states: usize) -> (DMatrix<f64>, Partition) {
    let mut r = rng::stream(seed, index);
    let n = r.random_range(min_states..=max_states);
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let k = r.random_range(1..=n.min(4));
        let mut support: Vec<usize> = (0..k).map(|_| r.random_range(0..n)).collect();
        support.push((i + 1) % n);
        support.sort_unstable();
        support.dedup();
        let w: Vec<f64> = support.iter().map(|_| Exp1.sample(&mut r)).collect();
        let total: f64 = w.iter().sum();
        for (j, wj) in support.iter().zip(&w) {
            p[(i, *j)] = wj / total;
        }
    }
    let size = r.random_range(1..n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..size {
        let j = r.random_range(i..n);
        idx.swap(i, j);
    }
    let part = Partition::new(n, &idx[..size]).expect("indices in range");
    (p, part)
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub chains: usize,
    pub seed: u64,
    /// Largest residual per identity over the suite.
    pub maxima: BTreeMap<String, f64>,
    pub thresholds: BTreeMap<String, f64>,
    pub failures: Vec<String>,
    pub pass: bool,
}

/// Runs [`verify_all`] on `count` random chains in parallel.
pub fn run_suite(seed: u64, count: usize, min_states: usize, max_states: usize, product_max_states: usize) -> Result<SuiteReport> {
    if min_states < 2 || min_states > max_states || max_states > MAX_STATES {
        return Err(LabError::config("states", "need 2 ≤ min_states ≤ max_states ≤ 2000"));
    }
    let results: Vec<Result<Vec<IdentityCheck>>> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let (p, part) = random_chain(seed, i, min_states, max_states);
            verify_all(&p, &part, product_max_states)
        })
        .collect();
    let mut maxima = BTreeMap::new();
    let mut thresholds = BTreeMap::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let checks = r.map_err(|e| LabError::structural(format!("chain {i}: {e}")))?;
        for c in checks {
            if c.skipped.is_some() {
                continue;
            }
            let e = maxima.entry(c.identity.clone()).or_insert(0.0f64);
            *e = e.max(c.residual);
            if let Some(t) = c.threshold {
                thresholds.insert(c.identity.clone(), t);
            }
            if !c.pass {
                failures.push(format!("chain {i}: {} residual {:e}", c.identity, c.residual));
            }
        }
    }
    Ok(SuiteReport { chains: count, seed, maxima, thresholds, pass: failures.is_empty(), failures })
}
