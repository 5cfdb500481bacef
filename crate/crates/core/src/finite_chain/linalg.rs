//! Dense linear algebra for finite chains.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{LabError, Result};

/// Largest state space handled densely.
pub const MAX_STATES: usize = 2000;

/// Solves `M X = B` by LU with partial pivoting and two rounds of iterative
/// refinement.
pub fn solve(m: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() == 0 {
        return Ok(DMatrix::zeros(0, b.ncols()));
    }
    let lu = m.clone().lu();
    let mut x = lu.solve(b).ok_or_else(|| LabError::structural("singular linear system"))?;
    for _ in 0..2 {
        let r = b - m * &x;
        match lu.solve(&r) {
            Some(dx) => x += dx,
            None => break,
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LabError::structural("singular linear system"));
    }
    Ok(x)
}

/// `X` with `X M = B`, i.e. row-vector solves.
pub fn solve_left(m: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(solve(&m.transpose(), &b.transpose())?.transpose())
}

/// Strongly connected components of the support graph `{(i, j) : P(i,j) > 0}`.
pub fn components(p: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = p.nrows();
    let mut g = DiGraph::<(), ()>::with_capacity(n, n * 4);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if p[(i, j)] > 0.0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut comps: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|x| x.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    comps.sort();
    comps
}

pub fn check_irreducible(p: &DMatrix<f64>) -> Result<()> {
    let comps = components(p);
    if comps.len() > 1 {
        let list: Vec<String> = comps.iter().map(|c| format!("{c:?}")).collect();
        return Err(LabError::structural(format!("chain is reducible; components: {}", list.join(", "))));
    }
    Ok(())
}

/// Stationary law of an irreducible stochastic matrix by the
/// Grassmann–Taksar–Heyman elimination, which involves no subtractions.
pub fn stationary(p: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = p.nrows();
    if n == 0 {
        return Err(LabError::domain("empty chain"));
    }
    check_irreducible(p)?;
    let mut a = p.clone();
    for k in (1..n).rev() {
        let s: f64 = (0..k).map(|j| a[(k, j)]).sum();
        if !(s > 0.0) {
            return Err(LabError::structural("elimination met a closed class"));
        }
        for i in 0..k {
            a[(i, k)] /= s;
        }
        for i in 0..k {
            let aik = a[(i, k)];
            if aik != 0.0 {
                for j in 0..k {
                    a[(i, j)] += aik * a[(k, j)];
                }
            }
        }
    }
    let mut x = DVector::zeros(n);
    x[0] = 1.0;
    for j in 1..n {
        x[j] = (0..j).map(|i| x[i] * a[(i, j)]).sum();
    }
    let total = x.sum();
    Ok(x / total)
}

/// `‖μP − μ‖∞`.
pub fn invariance_residual(mu: &DVector<f64>, p: &DMatrix<f64>) -> f64 {
    if mu.is_empty() {
        return 0.0;
    }
    (p.tr_mul(mu) - mu).amax()
}

/// Largest `|row sum − 1|` over the given rows.
pub fn row_sum_defect(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max)
}
