use std::collections::HashMap;

use serde::Serialize;

use crate::dyadic::DyadicPoint;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dyadic interval `[k / 2^h, (k + 1) / 2^h]` of epoch `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct IntervalRec {
    lo: DyadicPoint,
    hi: DyadicPoint,
    epoch: u32,
}

impl IntervalRec {
    pub fn unit() -> Self {
        Self {
            lo: DyadicPoint::ZERO,
            hi: DyadicPoint::ONE,
            epoch: 0,
        }
    }

    /// `I_{h,k}`; `k` must satisfy `k < 2^h`.
    pub fn new(epoch: u32, k: u64) -> Result<Self> {
        if k >= 1u64.checked_shl(epoch).unwrap_or(0) {
            return Err(Error::InvalidPoint {
                depth: epoch,
                index: k as i64,
            });
        }
        Ok(Self {
            lo: DyadicPoint::new(epoch, k)?,
            hi: DyadicPoint::new(epoch, k + 1)?,
            epoch,
        })
    }

    #[inline]
    pub fn lo(&self) -> DyadicPoint {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> DyadicPoint {
        self.hi
    }

    #[inline]
    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    /// `2^-epoch`.
    #[inline]
    pub fn width<S: Scalar>(&self) -> S {
        S::lit(0.5f64.powi(self.epoch as i32))
    }

    /// Index `k` of the interval within its level.
    pub fn k(&self) -> u64 {
        self.lo.numerator_at(self.epoch).expect("lo lies on the epoch grid") as u64
    }

    pub fn halves(&self) -> Result<(IntervalRec, IntervalRec)> {
        let k = self.k();
        Ok((
            IntervalRec::new(self.epoch + 1, 2 * k)?,
            IntervalRec::new(self.epoch + 1, 2 * k + 1)?,
        ))
    }

    pub fn contains(&self, p: DyadicPoint) -> bool {
        self.lo <= p && p <= self.hi
    }
}

/// Running sum and count of the observations at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointStats<S> {
    pub sum: S,
    pub count: u64,
    /// Exact value known in advance; `sum` holds it and `count` is ignored.
    pub known: bool,
}

impl<S: Scalar> PointStats<S> {
    pub fn mean(&self) -> Option<S> {
        if self.known {
            Some(self.sum)
        } else if self.count == 0 {
            None
        } else {
            Some(self.sum / S::lit(self.count as f64))
        }
    }
}

/// Per-point averages of every observation made so far.
#[derive(Debug, Clone, Default)]
pub struct Averages<S> {
    stats: HashMap<DyadicPoint, PointStats<S>>,
}

impl<S: Scalar> Averages<S> {
    pub fn new() -> Self {
        Self {
            stats: HashMap::new(),
        }
    }

    /// Registers a noiseless, exactly known value.
    pub fn insert_known(&mut self, p: DyadicPoint, value: S) {
        self.stats.insert(
            p,
            PointStats {
                sum: value,
                count: 0,
                known: true,
            },
        );
    }

    pub fn record(&mut self, p: DyadicPoint, y: S) {
        let e = self.stats.entry(p).or_insert(PointStats {
            sum: S::zero(),
            count: 0,
            known: false,
        });
        if !e.known {
            e.sum = e.sum + y;
            e.count += 1;
        }
    }

    pub fn get(&self, p: DyadicPoint) -> Option<PointStats<S>> {
        self.stats.get(&p).copied()
    }

    pub fn mean(&self, p: DyadicPoint) -> Option<S> {
        self.stats.get(&p).and_then(PointStats::mean)
    }

    /// Observation count; `u64::MAX` for exactly known points.
    pub fn count(&self, p: DyadicPoint) -> u64 {
        match self.stats.get(&p) {
            Some(s) if s.known => u64::MAX,
            Some(s) => s.count,
            None => 0,
        }
    }

    pub fn is_known(&self, p: DyadicPoint) -> bool {
        self.stats.get(&p).is_some_and(|s| s.known)
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }
}

/// Live state of the algorithm between epochs.
#[derive(Debug, Clone)]
pub struct EpochState<S> {
    /// Epoch counter; current intervals have width `2^-h`.
    pub h: u32,
    pub intervals: Vec<IntervalRec>,
    pub averages: Averages<S>,
    /// Queries spent so far.
    pub t: u64,
    pub epochs_completed: u32,
}

impl<S: Scalar> EpochState<S> {
    pub fn initial() -> Self {
        Self {
            h: 0,
            intervals: vec![IntervalRec::unit()],
            averages: Averages::new(),
            t: 0,
            epochs_completed: 0,
        }
    }
}

/// What one completed epoch produced: the intervals of width `2^-depth`,
/// their endpoints and midpoints, and the averages at those points once the
/// epoch's sampling finished.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord<S> {
    pub depth: u32,
    /// Per-point sample target used for this epoch.
    pub target: u64,
    pub intervals: Vec<IntervalRec>,
    pub points: Vec<DyadicPoint>,
    pub stats: Vec<PointStats<S>>,
}

impl<S: Scalar> EpochRecord<S> {
    pub(crate) fn snapshot(
        depth: u32,
        target: u64,
        intervals: Vec<IntervalRec>,
        points: Vec<DyadicPoint>,
        averages: &Averages<S>,
    ) -> Self {
        let stats = points
            .iter()
            .map(|&p| averages.get(p).expect("epoch point was observed"))
            .collect();
        Self {
            depth,
            target,
            intervals,
            points,
            stats,
        }
    }

    /// Averages restricted to this epoch's points.
    pub fn averages(&self) -> Averages<S> {
        Averages {
            stats: self.points.iter().copied().zip(self.stats.iter().copied()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QueryRecord {
    pub point: DyadicPoint,
    /// Epoch counter `h` during which the query was made (its bounds used
    /// width `2^-h`); `None` for the initial samples at `x = 1`.
    pub epoch: Option<u32>,
}

/// Everything a run produced, in query order.
#[derive(Debug, Clone)]
pub struct RunTrace<S> {
    pub queries: Vec<QueryRecord>,
    pub epochs: Vec<EpochRecord<S>>,
    pub epochs_completed: u32,
    pub truncated: bool,
    pub depth_capped: bool,
    pub delta: Option<S>,
    pub budget: u64,
    pub final_state: Option<EpochState<S>>,
}

impl<S> RunTrace<S> {
    /// Trace of an optimizer without epochs.
    pub fn flat(queries: Vec<QueryRecord>, budget: u64) -> Self {
        Self {
            queries,
            epochs: Vec::new(),
            epochs_completed: 0,
            truncated: false,
            depth_capped: false,
            delta: None,
            budget,
            final_state: None,
        }
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = DyadicPoint> + '_ {
        self.queries.iter().map(|q| q.point)
    }

    pub fn distinct_points(&self) -> Vec<DyadicPoint> {
        let mut v: Vec<_> = self.points().collect();
        v.sort();
        v.dedup();
        v
    }

    /// Deepest canonical depth among the queried points.
    pub fn max_query_depth(&self) -> u32 {
        self.points().map(DyadicPoint::depth).max().unwrap_or(0)
    }

    /// Deepest epoch counter reached while querying.
    pub fn deepest_epoch(&self) -> u32 {
        self.queries.iter().filter_map(|q| q.epoch).max().unwrap_or(0)
    }
}
