//! Finite-state chains: stationary law, dual, induced, entrance and exit
//! kernels, and exact checks of the identities relating them.

pub mod kernels;
pub mod linalg;
mod torus;
pub mod verify;

use std::path::Path;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub use kernels::{
    dual, entrance_exit_measures, entrance_kernel, exit_kernel, exit_row, induced_kernel, kac_lift,
    kac_lift_entrance, Blocks, DerivedKernels, EntranceExitMeasures, Partition,
};
pub use linalg::{check_irreducible, components, stationary, MAX_STATES};
pub use torus::{torus_tail_form_check, torus_walk};
pub use verify::{
    random_chain, run_suite, verify_all, verify_bijection, verify_duality, verify_invariance, verify_kac,
    verify_measures, verify_product_reduction, IdentityCheck, SuiteReport,
};

/// Largest row-sum defect accepted for `P`.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// JSON form `{"states": [...], "P": [[...]], "A": [indices]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    #[serde(default)]
    pub states: Vec<serde_json::Value>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    pub a: Vec<usize>,
}

/// A validated row-stochastic matrix with labels and a marked set `A`.
#[derive(Debug, Clone)]
pub struct FiniteChain {
    states: Vec<serde_json::Value>,
    p: DMatrix<f64>,
    part: Partition,
    mu: OnceLock<std::result::Result<DVector<f64>, String>>,
}

impl FiniteChain {
    pub fn new(p: DMatrix<f64>, a: &[usize]) -> Result<FiniteChain> {
        let n = p.nrows();
        let states = (0..n).map(serde_json::Value::from).collect();
        FiniteChain::with_states(states, p, a)
    }

    pub fn with_states(states: Vec<serde_json::Value>, p: DMatrix<f64>, a: &[usize]) -> Result<FiniteChain> {
        let n = p.nrows();
        if n == 0 || p.ncols() != n {
            return Err(LabError::config("P", format!("must be a nonempty square matrix, got {}×{}", n, p.ncols())));
        }
        if n > MAX_STATES {
            return Err(LabError::config("P", format!("{n} states exceed the dense limit {MAX_STATES}")));
        }
        if states.len() != n {
            return Err(LabError::config("states", format!("{} labels for {n} states", states.len())));
        }
        for i in 0..n {
            let row = p.row(i);
            if let Some(v) = row.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(LabError::config("P", format!("row {i} has invalid entry {v}")));
            }
            let s = row.sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(LabError::config("P", format!("row {i} sums to {s}")));
            }
        }
        let part = Partition::new(n, a)?;
        Ok(FiniteChain { states, p, part, mu: OnceLock::new() })
    }

    pub fn from_spec(spec: ChainSpec) -> Result<FiniteChain> {
        let n = spec.p.len();
        if spec.p.iter().any(|r| r.len() != n) {
            return Err(LabError::config("P", "rows must all have length equal to the number of rows"));
        }
        let p = DMatrix::from_fn(n, n, |i, j| spec.p[i][j]);
        let states = if spec.states.is_empty() { (0..n).map(serde_json::Value::from).collect() } else { spec.states };
        FiniteChain::with_states(states, p, &spec.a)
    }

    pub fn from_json(text: &str) -> Result<FiniteChain> {
        let spec: ChainSpec = serde_json::from_str(text).map_err(|e| LabError::config("chain", e.to_string()))?;
        FiniteChain::from_spec(spec)
    }

    pub fn load(path: &Path) -> Result<FiniteChain> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::config("chain", format!("{}: {e}", path.display())))?;
        FiniteChain::from_json(&text)
    }

    pub fn len(&self) -> usize {
        self.p.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.p.nrows() == 0
    }

    pub fn states(&self) -> &[serde_json::Value] {
        &self.states
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn partition(&self) -> &Partition {
        &self.part
    }

    /// Same chain with `μ` supplied instead of solved for, for chains whose
    /// invariant law is known but not unique.
    pub fn with_invariant(mut self, mu: DVector<f64>) -> Result<FiniteChain> {
        if mu.len() != self.len() || mu.iter().any(|v| !(*v >= 0.0)) || (mu.sum() - 1.0).abs() > ROW_SUM_TOL {
            return Err(LabError::config("mu", "must be a probability vector over the states"));
        }
        let r = linalg::invariance_residual(&mu, &self.p);
        if r > ROW_SUM_TOL {
            return Err(LabError::domain(format!("supplied law is not invariant: residual {r:e}")));
        }
        self.mu = OnceLock::from(Ok(mu));
        Ok(self)
    }

    /// Same matrix with a different marked set.
    pub fn with_set(&self, a: &[usize]) -> Result<FiniteChain> {
        let part = Partition::new(self.len(), a)?;
        Ok(FiniteChain { states: self.states.clone(), p: self.p.clone(), part, mu: self.mu.clone() })
    }

    /// Stationary law, computed once.
    pub fn mu(&self) -> Result<&DVector<f64>> {
        self.mu
            .get_or_init(|| stationary(&self.p).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| LabError::structural(e.clone()))
    }

    pub fn derived(&self) -> Result<DerivedKernels> {
        DerivedKernels::compute(&self.p, self.mu()?, &self.part)
    }

    pub fn verify(&self, product_max_states: usize) -> Result<Vec<IdentityCheck>> {
        verify_all(&self.p, &self.part, product_max_states)
    }
}

#[cfg(test)]
mod tests;
