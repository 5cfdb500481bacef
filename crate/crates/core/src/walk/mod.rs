//! Streaming random walks and the event sequences read off them.
//!
//! Nothing here stores a trajectory: every extractor consumes an iterator
//! of positions and keeps O(1) state besides its output.

pub mod dump;
mod events;
pub mod set;
mod window;

pub use events::{
    crossings, entrance_exit_events, entrance_exit_events_in, level_crossing_count, occupation_until_t,
    upcrossings_of_level, Budgeted, CrossingEvent, CycleEnd, Direction, EntranceEvent, EventRun, RealPoint,
    DEFAULT_MAX_STEPS,
};
pub use set::SetSpec;
pub use window::{ladder_law, windowed_stream, Collapse, Pos, WindowCoord, WindowSpec, WindowedWalk};

use crate::error::{LabError, Result};
use crate::increments::{Coord, IncrementLaw, Stepper, Stepper1};
use crate::rng::RngState;

/// Sign information shared by raw coordinates and collapsed positions.
pub trait Site: Copy + std::fmt::Debug {
    type Coord: Coord;

    /// `S ≥ 0`; zero belongs to the nonnegative side.
    fn is_nonneg(&self) -> bool;

    /// `S < level`.
    fn below(&self, level: Self::Coord) -> bool;

    /// Exact coordinate when known.
    fn coord(&self) -> Option<Self::Coord>;
}

impl<C: Coord> Site for C {
    type Coord = C;

    #[inline]
    fn is_nonneg(&self) -> bool {
        Coord::is_nonneg(*self)
    }

    #[inline]
    fn below(&self, level: C) -> bool {
        *self < level
    }

    #[inline]
    fn coord(&self) -> Option<C> {
        Some(*self)
    }
}

/// Lazily generated positions `S_0, S_1, ...` in the stepper's coordinates.
#[derive(Debug, Clone)]
pub struct WalkStream<S: Stepper> {
    stepper: S,
    rng: RngState,
    pos: S::Coord,
    started: bool,
}

impl<S: Stepper> WalkStream<S> {
    pub fn new(stepper: S, start: S::Coord, rng: RngState) -> Self {
        WalkStream { stepper, rng, pos: start, started: false }
    }

    pub fn position(&self) -> S::Coord {
        self.pos
    }
}

impl<S: Stepper> Iterator for WalkStream<S> {
    type Item = S::Coord;

    #[inline]
    fn next(&mut self) -> Option<S::Coord> {
        if self.started {
            self.pos = self.pos + self.stepper.step(&mut self.rng);
        } else {
            self.started = true;
        }
        Some(self.pos)
    }
}

/// One-dimensional walk from a real starting point, yielding real positions.
/// Lattice positions are accumulated as exact integers and scaled on output.
pub fn walk_stream(law: &IncrementLaw, start: f64, rng: RngState) -> Result<Box<dyn Iterator<Item = f64> + Send>> {
    let one = law.one()?;
    Ok(match one.stepper() {
        Stepper1::Lattice(s) => {
            let span = s.span();
            let u = i64::from_real(start, span)?;
            Box::new(WalkStream::new(s, u, rng).map(move |k| k as f64 * span))
        }
        Stepper1::Real(s) => Box::new(WalkStream::new(s, f64::from_real(start, 0.0)?, rng)),
    })
}

/// Walk in `R^d` (any dimension), yielding real points.
pub fn walk_stream_points(
    law: &IncrementLaw,
    start: &[f64],
    mut rng: RngState,
) -> Result<Box<dyn Iterator<Item = Vec<f64>> + Send>> {
    if start.len() != law.dimension() {
        return Err(LabError::domain(format!(
            "start has dimension {}, law has dimension {}",
            start.len(),
            law.dimension()
        )));
    }
    let steppers: Vec<Stepper1> = law.components().iter().map(|c| c.stepper()).collect();
    let spans = law.lattice_spans();
    if law.is_lattice() {
        let mut units: Vec<i64> = start
            .iter()
            .zip(&spans)
            .map(|(x, h)| i64::from_real(*x, *h))
            .collect::<Result<_>>()?;
        let mut started = false;
        Ok(Box::new(std::iter::from_fn(move || {
            if started {
                for (u, s) in units.iter_mut().zip(&steppers) {
                    if let Stepper1::Lattice(l) = s {
                        *u += l.step(&mut rng);
                    }
                }
            }
            started = true;
            Some(units.iter().zip(&spans).map(|(u, h)| *u as f64 * h).collect())
        })))
    } else {
        let mut pos = start.to_vec();
        let mut started = false;
        Ok(Box::new(std::iter::from_fn(move || {
            if started {
                for (x, s) in pos.iter_mut().zip(&steppers) {
                    if let Stepper1::Real(r) = s {
                        *x += r.step(&mut rng);
                    }
                }
            }
            started = true;
            Some(pos.clone())
        })))
    }
}
