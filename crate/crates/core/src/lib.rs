//! Verification laboratory for entrance, exit and induced Markov chains and
//! for zero-level crossings of random walks.
//!
//! * [`finite_chain`] computes every derived kernel of a finite chain by
//!   first-passage linear algebra and checks the invariance and lifting
//!   identities to machine precision.
//! * [`walk`], [`closed_form`] and [`stats`] form the Monte Carlo side:
//!   streamed walks, closed-form invariant densities, and statistical
//!   verdicts against them.

pub mod closed_form;
pub mod error;
pub mod finite_chain;
pub mod increments;
pub mod parallel;
pub mod rng;
pub mod stats;
pub mod walk;

pub use error::{LabError, Result};
pub use increments::{Family, IncrementLaw, LawSpec};
