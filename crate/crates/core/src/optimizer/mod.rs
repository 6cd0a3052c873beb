//! Epoch-based interval elimination with interval confidence bounds.
//!
//! Epoch `h` works on a set of intervals of width `2^-h`. Each interval gets
//! an upper bound `max(ybar_a, ybar_b) + eta(w) + alpha(w)` and a lower bound
//! `min(ybar_a, ybar_b) - eta(w) - alpha(w)`; intervals whose upper bound is
//! below the best lower bound are discarded, the survivors are halved, and
//! every endpoint and midpoint is sampled until it holds
//! `n_h = ceil(sigma2 * 2^(h+1))` observations. Averages pool every
//! observation of a point across epochs.
//!
//! `W_0 = 0` is known exactly, so the origin is registered as an exact
//! observation and never queried.

mod baselines;
mod state;

use crate::bounds::{alpha, eta};
use crate::dyadic::DyadicPoint;
use crate::error::{Error, Result};
use crate::oracle::{NoisyOracle, Objective};
use crate::rng::CounterRng;
use crate::scalar::Scalar;

pub use baselines::{RandomSearch, UniformGrid};
pub use state::{Averages, EpochRecord, EpochState, IntervalRec, PointStats, QueryRecord, RunTrace};

/// Epochs deeper than this stop splitting and spend the rest of the budget
/// re-sampling the last point set. Only reachable with (near) zero noise.
pub const MAX_EPOCH_DEPTH: u32 = 48;

/// Failure probability and noise level for the confidence bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceParams<S> {
    delta: S,
    sigma2: S,
}

impl<S: Scalar> ConfidenceParams<S> {
    /// `delta` must lie strictly below 1: the first epoch uses width 1 and
    /// `alpha(1, delta)` needs `ln(1 / delta) > 0`.
    pub fn new(delta: S, sigma2: S) -> Result<Self> {
        if !(delta > S::zero() && delta < S::one()) {
            return Err(Error::InvalidParam(format!("delta {delta} not in (0, 1)")));
        }
        if !(sigma2 >= S::zero()) || !sigma2.is_finite() {
            return Err(Error::InvalidParam(format!("sigma2 {sigma2} must be >= 0")));
        }
        Ok(Self { delta, sigma2 })
    }

    /// `delta = T^(-1/2)`, capped at 1/2 so budgets below 4 stay usable.
    pub fn for_budget(budget: u64, sigma2: S) -> Result<Self> {
        let delta = S::lit((budget.max(1) as f64).powf(-0.5).min(0.5));
        Self::new(delta, sigma2)
    }

    #[inline]
    pub fn delta(&self) -> S {
        self.delta
    }

    #[inline]
    pub fn sigma2(&self) -> S {
        self.sigma2
    }
}

/// Samples per point in epoch `h`: `ceil(sigma2 * 2^(h+1))`, at least one.
pub fn n_samples<S: Scalar>(h: u32, sigma2: S) -> u64 {
    let n = (sigma2.as_f64() * 2f64.powi(h as i32 + 1)).ceil();
    if n >= u64::MAX as f64 {
        u64::MAX
    } else {
        (n as u64).max(1)
    }
}

/// Observations spent on `x = 1` before the first epoch: `ceil(sigma2)`, at
/// least one.
pub fn init_samples<S: Scalar>(sigma2: S) -> u64 {
    (sigma2.as_f64().ceil() as u64).max(1)
}

/// Per-epoch regret scale `5/2 alpha(2^-h) + eta(2^-h)`.
pub fn kappa<S: Scalar>(h: u32, delta: S) -> Result<S> {
    let w = S::lit(0.5f64.powi(h as i32));
    Ok(S::lit(2.5) * alpha(w, delta)? + eta(w, delta)?)
}

fn endpoint_means<S: Scalar>(interval: &IntervalRec, averages: &Averages<S>) -> Result<(S, S)> {
    let get = |p: DyadicPoint| {
        averages
            .mean(p)
            .ok_or_else(|| Error::State(format!("endpoint {p} has no observations")))
    };
    Ok((get(interval.lo())?, get(interval.hi())?))
}

fn slack<S: Scalar>(interval: &IntervalRec, params: &ConfidenceParams<S>) -> Result<S> {
    let w = interval.width::<S>();
    Ok(eta(w, params.delta)? + alpha(w, params.delta)?)
}

/// Upper confidence bound on the maximum over `interval`.
pub fn ucb<S: Scalar>(
    interval: &IntervalRec,
    averages: &Averages<S>,
    params: &ConfidenceParams<S>,
) -> Result<S> {
    let (a, b) = endpoint_means(interval, averages)?;
    Ok(a.max(b) + slack(interval, params)?)
}

/// Lower confidence bound on the minimum over `interval`.
pub fn lcb<S: Scalar>(
    interval: &IntervalRec,
    averages: &Averages<S>,
    params: &ConfidenceParams<S>,
) -> Result<S> {
    let (a, b) = endpoint_means(interval, averages)?;
    Ok(a.min(b) - slack(interval, params)?)
}

/// Intervals whose UCB reaches the largest LCB among `intervals`.
pub fn select_candidates<S: Scalar>(
    intervals: &[IntervalRec],
    averages: &Averages<S>,
    params: &ConfidenceParams<S>,
) -> Result<Vec<IntervalRec>> {
    if intervals.is_empty() {
        return Err(Error::State("no intervals to select from".into()));
    }
    let bounds = intervals
        .iter()
        .map(|i| Ok((ucb(i, averages, params)?, lcb(i, averages, params)?)))
        .collect::<Result<Vec<(S, S)>>>()?;
    let best_lcb = bounds
        .iter()
        .fold(S::neg_infinity(), |m, &(_, l)| m.max(l));
    Ok(intervals
        .iter()
        .zip(&bounds)
        .filter(|(_, &(u, _))| u >= best_lcb)
        .map(|(i, _)| *i)
        .collect())
}

/// Halves every candidate; returns the new intervals and the sorted,
/// de-duplicated set of their endpoints and midpoints.
pub fn split(candidates: &[IntervalRec]) -> Result<(Vec<IntervalRec>, Vec<DyadicPoint>)> {
    let mut intervals = Vec::with_capacity(2 * candidates.len());
    let mut points = Vec::with_capacity(3 * candidates.len());
    for c in candidates {
        let (left, right) = c.halves()?;
        points.extend([c.lo(), left.hi(), c.hi()]);
        intervals.push(left);
        intervals.push(right);
    }
    intervals.sort();
    intervals.dedup();
    points.sort();
    points.dedup();
    Ok((intervals, points))
}

/// How the final recommendation is drawn from the queried points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecommendMode {
    /// Uniform over the `T` queries, with multiplicity.
    #[default]
    Multiset,
    /// Uniform over the distinct queried points.
    Distinct,
}

/// Draws the returned point `x^(T)` from the stream `key`.
pub fn recommend<S>(trace: &RunTrace<S>, key: u64, mode: RecommendMode) -> Result<DyadicPoint> {
    if trace.queries.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut rng = CounterRng::new(key);
    match mode {
        RecommendMode::Multiset => {
            let i = rng.below(trace.queries.len() as u64) as usize;
            Ok(trace.queries[i].point)
        }
        RecommendMode::Distinct => {
            let points = trace.distinct_points();
            Ok(points[rng.below(points.len() as u64) as usize])
        }
    }
}

/// Common interface of the optimizers driven by the harness.
pub trait Optimizer<S: Scalar> {
    fn name(&self) -> &'static str;

    fn optimize<F: Objective<S>>(&self, oracle: &mut NoisyOracle<S, F>) -> Result<RunTrace<S>>;
}

/// The epoch-based confidence-bound algorithm.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpochUcb {
    /// Replaces the default `delta = T^(-1/2)`.
    pub delta: Option<f64>,
}

impl EpochUcb {
    pub fn with_delta(delta: Option<f64>) -> Self {
        Self { delta }
    }

    pub fn params<S: Scalar>(&self, budget: u64, sigma2: S) -> Result<ConfidenceParams<S>> {
        match self.delta {
            Some(d) => ConfidenceParams::new(S::lit(d), sigma2),
            None => ConfidenceParams::for_budget(budget, sigma2),
        }
    }
}

impl<S: Scalar> Optimizer<S> for EpochUcb {
    fn name(&self) -> &'static str {
        "epoch-ucb"
    }

    fn optimize<F: Objective<S>>(&self, oracle: &mut NoisyOracle<S, F>) -> Result<RunTrace<S>> {
        let params = self.params(oracle.budget(), oracle.sigma2())?;
        run(oracle, &params)
    }
}

/// Queries `p` until it holds `target` observations or the budget runs out.
/// Returns `false` on budget exhaustion.
fn top_up<S: Scalar, F: Objective<S>>(
    oracle: &mut NoisyOracle<S, F>,
    state: &mut EpochState<S>,
    queries: &mut Vec<QueryRecord>,
    p: DyadicPoint,
    target: u64,
    epoch: Option<u32>,
) -> Result<bool> {
    let have = state.averages.count(p);
    for _ in have..target {
        if oracle.remaining() == 0 {
            return Ok(false);
        }
        let y = oracle.query(p)?;
        state.averages.record(p, y);
        queries.push(QueryRecord { point: p, epoch });
    }
    state.t = oracle.spent();
    Ok(true)
}

/// Runs the algorithm on a fresh oracle until the budget is spent.
///
/// A budget that runs out inside an epoch stops at that exact query; the
/// trace is then flagged as truncated and the partial epoch is not recorded
/// as completed.
pub fn run<S: Scalar, F: Objective<S>>(
    oracle: &mut NoisyOracle<S, F>,
    params: &ConfidenceParams<S>,
) -> Result<RunTrace<S>> {
    if oracle.spent() != 0 {
        return Err(Error::State("optimizer needs a fresh oracle".into()));
    }
    let sigma2 = params.sigma2();
    let mut state = EpochState::initial();
    let mut queries = Vec::with_capacity(oracle.budget().min(1 << 24) as usize);
    let mut epochs = Vec::new();
    let mut truncated = false;
    let mut depth_capped = false;

    state.averages.insert_known(DyadicPoint::ZERO, S::zero());
    let init = init_samples(sigma2);
    if top_up(oracle, &mut state, &mut queries, DyadicPoint::ONE, init, None)? {
        epochs.push(EpochRecord::snapshot(
            0,
            init,
            state.intervals.clone(),
            vec![DyadicPoint::ZERO, DyadicPoint::ONE],
            &state.averages,
        ));
    } else {
        truncated = true;
    }

    let mut last_points = vec![DyadicPoint::ONE];
    while !truncated && oracle.remaining() > 0 {
        let h = state.h;
        let n = n_samples(h, sigma2);
        if h >= MAX_EPOCH_DEPTH {
            depth_capped = true;
            'fill: loop {
                for &p in &last_points {
                    if oracle.remaining() == 0 {
                        break 'fill;
                    }
                    let y = oracle.query(p)?;
                    state.averages.record(p, y);
                    queries.push(QueryRecord {
                        point: p,
                        epoch: Some(h),
                    });
                }
            }
            state.t = oracle.spent();
            break;
        }

        let candidates = select_candidates(&state.intervals, &state.averages, params)?;
        let (next, points) = split(&candidates)?;
        let mut complete = true;
        for &p in &points {
            if state.averages.is_known(p) {
                continue;
            }
            if !top_up(oracle, &mut state, &mut queries, p, n, Some(h))? {
                complete = false;
                break;
            }
        }
        state.intervals = next;
        state.h = h + 1;
        if complete {
            state.epochs_completed += 1;
            epochs.push(EpochRecord::snapshot(
                h + 1,
                n,
                state.intervals.clone(),
                points.clone(),
                &state.averages,
            ));
        } else {
            truncated = true;
        }
        last_points = points
            .into_iter()
            .filter(|&p| !state.averages.is_known(p))
            .collect();
    }
    state.t = oracle.spent();

    Ok(RunTrace {
        queries,
        epochs_completed: state.epochs_completed,
        epochs,
        truncated,
        depth_capped,
        delta: Some(params.delta()),
        budget: oracle.budget(),
        final_state: Some(state),
    })
}
