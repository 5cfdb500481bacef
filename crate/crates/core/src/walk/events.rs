use serde::Serialize;

use super::set::SetSpec;
use super::Site;

/// Default cap on the time index of a single extraction call.
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000_000;

/// A point in `R^d`.
pub type RealPoint = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }
}

/// The n-th crossing of level zero: `undershoot = S_{T_n - 1}`,
/// `overshoot = S_{T_n}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingEvent<P> {
    pub index: u64,
    pub time: u64,
    pub undershoot: P,
    pub overshoot: P,
    pub direction: Direction,
}

/// Entry of the walk into `A` at `time`, from `exit` in `A^c` to `entrance` in `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntranceEvent<P> {
    pub exit: P,
    pub entrance: P,
    pub time: u64,
}

/// Result of a step-budgeted extraction. `steps` is the last time index read.
#[derive(Debug, Clone, PartialEq)]
pub struct Budgeted<T> {
    pub value: T,
    pub steps: u64,
    pub budget_exhausted: bool,
}

/// Lazily extracted zero-level crossings. Ends when the position stream
/// ends or the time index would pass `max_steps`; check
/// [`budget_exhausted`](Self::budget_exhausted) afterwards.
pub struct EventRun<I: Iterator> {
    positions: I,
    prev: Option<I::Item>,
    time: u64,
    count: u64,
    max_steps: u64,
    exhausted: bool,
}

impl<I> EventRun<I>
where
    I: Iterator,
    I::Item: Site,
{
    pub fn new(positions: I, max_steps: u64) -> Self {
        EventRun { positions, prev: None, time: 0, count: 0, max_steps, exhausted: false }
    }

    /// Time index of the last position read.
    pub fn steps(&self) -> u64 {
        self.time
    }

    pub fn budget_exhausted(&self) -> bool {
        self.exhausted
    }

    /// Last position read.
    pub fn current(&self) -> Option<I::Item> {
        self.prev
    }
}

impl<I> Iterator for EventRun<I>
where
    I: Iterator,
    I::Item: Site,
{
    type Item = CrossingEvent<I::Item>;

    #[inline]
    fn next(&mut self) -> Option<Self::Item> {
        let mut prev = match self.prev {
            Some(p) => p,
            None => {
                let p = self.positions.next()?;
                self.prev = Some(p);
                p
            }
        };
        let mut prev_nonneg = prev.is_nonneg();
        loop {
            if self.time >= self.max_steps {
                self.exhausted = true;
                return None;
            }
            let Some(cur) = self.positions.next() else {
                return None;
            };
            self.time += 1;
            self.prev = Some(cur);
            let nonneg = cur.is_nonneg();
            if nonneg != prev_nonneg {
                self.count += 1;
                return Some(CrossingEvent {
                    index: self.count,
                    time: self.time,
                    undershoot: prev,
                    overshoot: cur,
                    direction: if nonneg { Direction::Up } else { Direction::Down },
                });
            }
            prev = cur;
            prev_nonneg = nonneg;
        }
    }
}

/// The first `max_events` crossings of level zero. `S_k = 0` counts as
/// nonnegative.
pub fn crossings<I>(positions: I, max_events: usize, max_steps: u64) -> Budgeted<Vec<CrossingEvent<I::Item>>>
where
    I: Iterator,
    I::Item: Site,
{
    let mut run = EventRun::new(positions, max_steps);
    let value: Vec<_> = run.by_ref().take(max_events).collect();
    let budget_exhausted = run.budget_exhausted() || value.len() < max_events;
    Budgeted { value, steps: run.steps(), budget_exhausted }
}

/// `L_n`: number of crossings at times `k ≤ n`.
pub fn level_crossing_count<I>(positions: I, n: u64) -> u64
where
    I: Iterator,
    I::Item: Site,
{
    EventRun::new(positions, n).count() as u64
}

/// Entrances into a set given by a membership predicate.
pub fn entrance_exit_events_in<I, F>(
    positions: I,
    member: F,
    max_events: usize,
    max_steps: u64,
) -> Budgeted<Vec<EntranceEvent<I::Item>>>
where
    I: Iterator,
    I::Item: Clone,
    F: Fn(&I::Item) -> bool,
{
    let mut it = positions;
    let mut value = Vec::new();
    let Some(mut prev) = it.next() else {
        return Budgeted { value, steps: 0, budget_exhausted: true };
    };
    let mut prev_in = member(&prev);
    let mut time = 0u64;
    while value.len() < max_events {
        if time >= max_steps {
            return Budgeted { value, steps: time, budget_exhausted: true };
        }
        let Some(cur) = it.next() else {
            return Budgeted { value, steps: time, budget_exhausted: true };
        };
        time += 1;
        let cur_in = member(&cur);
        if cur_in && !prev_in {
            value.push(EntranceEvent { exit: prev, entrance: cur.clone(), time });
        }
        prev = cur;
        prev_in = cur_in;
    }
    Budgeted { value, steps: time, budget_exhausted: false }
}

/// Entrances into `a` along a walk in `R^d`.
pub fn entrance_exit_events<I>(
    positions: I,
    a: &SetSpec,
    max_events: usize,
    max_steps: u64,
) -> Budgeted<Vec<EntranceEvent<RealPoint>>>
where
    I: Iterator<Item = RealPoint>,
{
    entrance_exit_events_in(positions, |x: &RealPoint| a.contains(x), max_events, max_steps)
}

/// `L_T^↑(a)`: up-crossings of level `a` at steps `0..T`, where `T` is the
/// first up-crossing of zero.
pub fn upcrossings_of_level<I>(positions: I, a: <I::Item as Site>::Coord, max_steps: u64) -> Budgeted<u64>
where
    I: Iterator,
    I::Item: Site,
{
    let mut it = positions;
    let Some(mut prev) = it.next() else {
        return Budgeted { value: 0, steps: 0, budget_exhausted: true };
    };
    let mut count = 0u64;
    let mut time = 0u64;
    loop {
        if time >= max_steps {
            return Budgeted { value: count, steps: time, budget_exhausted: true };
        }
        let Some(cur) = it.next() else {
            return Budgeted { value: count, steps: time, budget_exhausted: true };
        };
        time += 1;
        if prev.below(a) && !cur.below(a) {
            count += 1;
        }
        if !prev.is_nonneg() && cur.is_nonneg() {
            return Budgeted { value: count, steps: time, budget_exhausted: false };
        }
        prev = cur;
    }
}

/// Which crossing ends an occupation cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleEnd {
    /// `T`: first up-crossing.
    Up,
    /// `T↓`: first down-crossing.
    Down,
    /// `min(T, T↓)`.
    First,
}

/// Number of `k` in `[0, τ)` with `S_k ∈ B`, for the stopping time `τ`
/// chosen by `end`.
pub fn occupation_until_t<I, F>(positions: I, in_b: F, end: CycleEnd, max_steps: u64) -> Budgeted<u64>
where
    I: Iterator,
    I::Item: Site,
    F: Fn(&I::Item) -> bool,
{
    let mut it = positions;
    let Some(mut prev) = it.next() else {
        return Budgeted { value: 0, steps: 0, budget_exhausted: true };
    };
    let mut count = 0u64;
    let mut time = 0u64;
    loop {
        if in_b(&prev) {
            count += 1;
        }
        if time >= max_steps {
            return Budgeted { value: count, steps: time, budget_exhausted: true };
        }
        let Some(cur) = it.next() else {
            return Budgeted { value: count, steps: time, budget_exhausted: true };
        };
        time += 1;
        let (p, c) = (prev.is_nonneg(), cur.is_nonneg());
        let stop = match end {
            CycleEnd::Up => !p && c,
            CycleEnd::Down => p && !c,
            CycleEnd::First => p != c,
        };
        if stop {
            return Budgeted { value: count, steps: time, budget_exhausted: false };
        }
        prev = cur;
    }
}
