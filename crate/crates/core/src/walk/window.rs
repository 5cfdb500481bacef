//! Excursion collapsing for mean-zero walks.
//!
//! A cycle between zero crossings has infinite mean length, so long
//! experiments spend almost all their steps on excursions far from the
//! origin that no event can see. When the increment law makes the first
//! re-entry point of such an excursion explicit, the whole excursion is
//! replaced by one [`Pos::Above`] or [`Pos::Below`] marker followed by the
//! exact re-entry point, drawn from its law.
//!
//! Events read off a windowed stream are exact provided every level and set
//! they involve lies in `[lo, hi]`. Overshoots are always exact; an
//! undershoot may be a marker. Stream indices no longer equal walk times.

use std::fmt;
use std::sync::Arc;

use rand::distr::Distribution;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::set::SetSpec;
use super::Site;
use crate::error::{LabError, Result};
use crate::increments::{Coord, IncrementLaw, Law1, LatticePmf, Stepper, Stepper1};
use crate::rng::RngState;

/// A position of a windowed walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pos<C> {
    At(C),
    /// One or more positions above the window.
    Above,
    /// One or more positions below the window.
    Below,
}

impl<C: Coord> Site for Pos<C> {
    type Coord = C;

    #[inline]
    fn is_nonneg(&self) -> bool {
        match self {
            Pos::At(c) => c.is_nonneg(),
            Pos::Above => true,
            Pos::Below => false,
        }
    }

    #[inline]
    fn below(&self, level: C) -> bool {
        match self {
            Pos::At(c) => *c < level,
            Pos::Above => false,
            Pos::Below => true,
        }
    }

    #[inline]
    fn coord(&self) -> Option<C> {
        match self {
            Pos::At(c) => Some(*c),
            _ => None,
        }
    }
}

impl<C: Coord> Pos<C> {
    /// Membership in a one-dimensional set the window covers.
    pub fn in_set(&self, set: &SetSpec, span: f64) -> bool {
        match self {
            Pos::At(c) => set.contains1(c.to_real(span)),
            Pos::Above => set.contains1(f64::INFINITY),
            Pos::Below => set.contains1(f64::NEG_INFINITY),
        }
    }

    pub fn map<D>(self, f: impl FnOnce(C) -> D) -> Pos<D> {
        match self {
            Pos::At(c) => Pos::At(f(c)),
            Pos::Above => Pos::Above,
            Pos::Below => Pos::Below,
        }
    }
}

/// Real interval `[lo, hi]` with `lo < 0 ≤ hi` outside which excursions are
/// collapsed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub lo: f64,
    pub hi: f64,
}

impl WindowSpec {
    pub fn new(lo: f64, hi: f64) -> Result<WindowSpec> {
        if !(lo < 0.0 && 0.0 <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(LabError::config("window", format!("need finite lo < 0 ≤ hi, got [{lo}, {hi}]")));
        }
        Ok(WindowSpec { lo, hi })
    }

    /// Whether collapsing is invisible to membership in `set`.
    pub fn covers(&self, set: &SetSpec) -> bool {
        match set {
            SetSpec::HalfLineNonneg | SetSpec::HalfLineNeg => true,
            SetSpec::OrthantNonneg { dim } | SetSpec::OrthantNeg { dim } => *dim == 1,
            SetSpec::Complement { of } => self.covers(of),
            other => match (other.dimension(), other.bounds_1d()) {
                (Some(1), Some((a, b))) => self.lo <= a && b <= self.hi,
                _ => false,
            },
        }
    }

    pub fn covers_level(&self, a: f64) -> bool {
        self.lo <= a && a <= self.hi
    }
}

#[derive(Clone)]
enum Trigger<C> {
    Beyond(C),
    Exactly(C),
}

/// One collapse rule: when the trigger fires, the excursion is replaced by
/// a marker and a re-entry point drawn by `land`.
#[derive(Clone)]
pub struct Collapse<C> {
    trigger: Trigger<C>,
    land: Arc<dyn Fn(&mut RngState) -> C + Send + Sync>,
}

impl<C: fmt::Debug> fmt::Debug for Collapse<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.trigger {
            Trigger::Beyond(c) => write!(f, "Collapse(beyond {c:?})"),
            Trigger::Exactly(c) => write!(f, "Collapse(at {c:?})"),
        }
    }
}

/// Coordinates for which collapse rules exist.
pub trait WindowCoord: Coord {
    /// Rules for leaving above `hi` and below `lo`. Either is `None` when
    /// the law gives no explicit re-entry law on that side.
    fn rules(law: &Law1, window: &WindowSpec) -> Result<(Option<Collapse<Self>>, Option<Collapse<Self>>)>;
}

impl WindowCoord for f64 {
    fn rules(law: &Law1, w: &WindowSpec) -> Result<(Option<Collapse<f64>>, Option<Collapse<f64>>)> {
        if !law.is_mean_zero() {
            return Ok((None, None));
        }
        let (lo, hi) = (w.lo, w.hi);
        let above = law.has_exponential_down_jumps().then(|| Collapse {
            trigger: Trigger::Beyond(hi),
            land: Arc::new(move |rng: &mut RngState| {
                let e: f64 = Exp1.sample(rng);
                hi - e
            }) as Arc<dyn Fn(&mut RngState) -> f64 + Send + Sync>,
        });
        let below = law.has_exponential_up_jumps().then(|| Collapse {
            trigger: Trigger::Beyond(lo),
            land: Arc::new(move |rng: &mut RngState| {
                let e: f64 = Exp1.sample(rng);
                lo + e
            }) as Arc<dyn Fn(&mut RngState) -> f64 + Send + Sync>,
        });
        Ok((above, below))
    }
}

impl WindowCoord for i64 {
    fn rules(law: &Law1, w: &WindowSpec) -> Result<(Option<Collapse<i64>>, Option<Collapse<i64>>)> {
        let Law1::Lattice(pmf) = law else {
            return Err(LabError::capability("integer coordinates need a lattice law"));
        };
        if !law.is_mean_zero() {
            return Ok((None, None));
        }
        let h = pmf.span();
        let hi = (w.hi / h + 1e-9).floor() as i64;
        let lo = (w.lo / h - 1e-9).ceil() as i64;
        if !(lo < 0 && 0 <= hi) {
            return Err(LabError::config("window", "window holds no lattice point on one side of 0"));
        }
        let above = if pmf.min_unit() == -1 {
            Some(fixed(Trigger::Beyond(hi), hi))
        } else if pmf.max_unit() == 1 {
            Some(ladder(Trigger::Exactly(hi + 1), hi + 1, ladder_law(pmf, false).expect("max unit is 1")))
        } else {
            None
        };
        let below = if pmf.max_unit() == 1 {
            Some(fixed(Trigger::Beyond(lo), lo))
        } else if pmf.min_unit() == -1 {
            Some(ladder(Trigger::Exactly(lo - 1), lo - 1, ladder_law(pmf, true).expect("min unit is -1")))
        } else {
            None
        };
        Ok((above, below))
    }
}

fn fixed(trigger: Trigger<i64>, at: i64) -> Collapse<i64> {
    Collapse { trigger, land: Arc::new(move |_: &mut RngState| at) }
}

fn ladder(trigger: Trigger<i64>, base: i64, law: Vec<(i64, f64)>) -> Collapse<i64> {
    let (offsets, weights): (Vec<i64>, Vec<f64>) = law.into_iter().unzip();
    let alias = WeightedAliasIndex::new(weights).expect("ladder weights are positive");
    Collapse { trigger, land: Arc::new(move |rng: &mut RngState| base + offsets[alias.sample(rng)]) }
}

/// Law of the first strict ladder height of a skip-free mean-zero lattice
/// walk, in span units.
///
/// With `ascending = false` the walk must have `max_unit = 1`; the result is
/// the law of the first position below 0 for a walk started at 0, namely
/// `P(H = -j) = P(X ≤ -j) / P(X = 1)`. With `ascending = true` the mirrored
/// law for `min_unit = -1`. Returns `None` when the skip-free condition
/// fails.
pub fn ladder_law(pmf: &LatticePmf, ascending: bool) -> Option<Vec<(i64, f64)>> {
    let sign = if ascending { -1 } else { 1 };
    let extreme = if ascending { pmf.min_unit() } else { pmf.max_unit() };
    if extreme != sign {
        return None;
    }
    let p1 = pmf.mass_at_unit(sign);
    let far = if ascending { pmf.max_unit() } else { -pmf.min_unit() };
    let mut out = Vec::new();
    for j in 1..=far {
        let tail: f64 = pmf
            .units()
            .iter()
            .zip(pmf.weights())
            .filter(|(u, _)| sign * **u <= -j)
            .map(|(_, w)| *w)
            .sum();
        if tail > 0.0 {
            out.push((-sign * j, tail / p1));
        }
    }
    Some(out)
}

#[derive(Clone, Copy)]
enum Phase<C> {
    Start,
    Free,
    Landing(C),
}

/// A walk whose excursions outside a window are collapsed.
#[derive(Clone)]
pub struct WindowedWalk<S: Stepper> {
    stepper: S,
    rng: RngState,
    pos: S::Coord,
    phase: Phase<S::Coord>,
    above: Option<Collapse<S::Coord>>,
    below: Option<Collapse<S::Coord>>,
}

impl<S> WindowedWalk<S>
where
    S: Stepper,
    S::Coord: WindowCoord,
{
    /// Requires `law` to be the law `stepper` samples.
    pub fn new(stepper: S, law: &Law1, window: &WindowSpec, start: S::Coord, rng: RngState) -> Result<Self> {
        let (above, below) = S::Coord::rules(law, window)?;
        Ok(WindowedWalk { stepper, rng, pos: start, phase: Phase::Start, above, below })
    }

    /// Same stream with collapsing disabled.
    pub fn plain(stepper: S, start: S::Coord, rng: RngState) -> Self {
        WindowedWalk { stepper, rng, pos: start, phase: Phase::Start, above: None, below: None }
    }

    pub fn collapses(&self) -> (bool, bool) {
        (self.above.is_some(), self.below.is_some())
    }
}

impl<S: Stepper> Iterator for WindowedWalk<S> {
    type Item = Pos<S::Coord>;

    #[inline]
    fn next(&mut self) -> Option<Pos<S::Coord>> {
        match self.phase {
            Phase::Start => {
                self.phase = Phase::Free;
                return Some(Pos::At(self.pos));
            }
            Phase::Landing(l) => {
                self.pos = l;
                self.phase = Phase::Free;
                return Some(Pos::At(l));
            }
            Phase::Free => {}
        }
        if let Some(c) = &self.above {
            let fire = match c.trigger {
                Trigger::Beyond(e) => self.pos > e,
                Trigger::Exactly(e) => self.pos == e,
            };
            if fire {
                self.phase = Phase::Landing((c.land)(&mut self.rng));
                return Some(Pos::Above);
            }
        }
        if let Some(c) = &self.below {
            let fire = match c.trigger {
                Trigger::Beyond(e) => self.pos < e,
                Trigger::Exactly(e) => self.pos == e,
            };
            if fire {
                self.phase = Phase::Landing((c.land)(&mut self.rng));
                return Some(Pos::Below);
            }
        }
        self.pos = self.pos + self.stepper.step(&mut self.rng);
        Some(Pos::At(self.pos))
    }
}

/// Windowed one-dimensional walk yielding real positions.
pub fn windowed_stream(
    law: &IncrementLaw,
    window: &WindowSpec,
    start: f64,
    rng: RngState,
) -> Result<Box<dyn Iterator<Item = Pos<f64>> + Send>> {
    let one = law.one()?;
    Ok(match one.stepper() {
        Stepper1::Lattice(s) => {
            let span = s.span();
            let u = i64::from_real(start, span)?;
            Box::new(WindowedWalk::new(s, one, window, u, rng)?.map(move |p| p.map(|k| k as f64 * span)))
        }
        Stepper1::Real(s) => Box::new(WindowedWalk::new(s, one, window, start, rng)?),
    })
}
