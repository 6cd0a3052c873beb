//! Ground-truth regret of a completed run.
//!
//! The maximum is taken over the lattice of depth `truth_depth`, so regrets
//! are exact against that discrete truth and never negative. The continuum
//! maximum can exceed it; `discretization_bound` reports the confidence width
//! `eta(2^-truth_depth)` that bounds the gap with the run's failure probability.

use serde::Serialize;

use crate::bounds::eta;
use crate::dyadic::DyadicPoint;
use crate::error::{Error, Result};
use crate::optimizer::RunTrace;
use crate::path::{DyadicPath, Grid, MaxRecord};
use crate::scalar::Scalar;

/// Dense path values and their maximum at one resolution.
#[derive(Debug, Clone)]
pub struct Truth<S> {
    pub grid: Grid<S>,
    pub max: MaxRecord<S>,
}

impl<S: Scalar> Truth<S> {
    pub fn new(path: &DyadicPath<S>, truth_depth: u32) -> Result<Self> {
        if truth_depth == 0 {
            return Err(Error::InvalidParam("truth depth must be at least 1".into()));
        }
        let grid = path.grid(truth_depth)?;
        let max = grid.max_record();
        Ok(Self { grid, max })
    }

    #[inline]
    pub fn depth(&self) -> u32 {
        self.grid.depth()
    }

    /// `max - f(p)`.
    pub fn gap(&self, p: DyadicPoint) -> Result<S> {
        match self.grid.get(p) {
            Some(v) => Ok(self.max.value - v),
            None if p.depth() > self.depth() => Err(Error::TruthTooShallow {
                truth_depth: self.depth(),
                needed: p.depth(),
            }),
            None => Err(Error::OutsideDomain(p)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport<S> {
    /// `R_T`, the sum of `per_query`.
    pub cumulative: S,
    /// `r_T`, the gap at the recommended point.
    pub simple: S,
    pub per_query: Vec<S>,
    pub recommendation: DyadicPoint,
    pub truth: MaxRecord<S>,
    pub truncated: bool,
    pub discretization_bound: S,
}

impl<S: Scalar> RegretReport<S> {
    /// `R_t` over the first `t` queries.
    pub fn cumulative_prefix(&self, t: usize) -> S {
        self.per_query[..t.min(self.per_query.len())]
            .iter()
            .fold(S::zero(), |acc, &r| acc + r)
    }

    pub fn budget(&self) -> usize {
        self.per_query.len()
    }
}

/// Scores `trace` against the depth-`truth_depth` maximum of `path`.
pub fn score<S: Scalar>(
    trace: &RunTrace<S>,
    recommendation: DyadicPoint,
    path: &DyadicPath<S>,
    truth_depth: u32,
) -> Result<RegretReport<S>> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    check_depth(trace, recommendation, truth_depth)?;
    score_with_truth(trace, recommendation, &Truth::new(path, truth_depth)?)
}

fn check_depth<S>(trace: &RunTrace<S>, rec: DyadicPoint, truth_depth: u32) -> Result<()> {
    let needed = trace.max_query_depth().max(rec.depth());
    if needed > truth_depth {
        return Err(Error::TruthTooShallow {
            truth_depth,
            needed,
        });
    }
    Ok(())
}

/// Same as [`score`] with a precomputed truth, for scoring many runs on one
/// path.
pub fn score_with_truth<S: Scalar>(
    trace: &RunTrace<S>,
    recommendation: DyadicPoint,
    truth: &Truth<S>,
) -> Result<RegretReport<S>> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    check_depth(trace, recommendation, truth.depth())?;
    let per_query = trace
        .points()
        .map(|p| truth.gap(p))
        .collect::<Result<Vec<S>>>()?;
    let cumulative = per_query.iter().fold(S::zero(), |acc, &r| acc + r);
    let delta = trace
        .delta
        .unwrap_or_else(|| S::lit((trace.budget.max(1) as f64).powf(-0.5)));
    let width = S::lit(0.5f64.powi(truth.depth() as i32));
    Ok(RegretReport {
        cumulative,
        simple: truth.gap(recommendation)?,
        per_query,
        recommendation,
        truth: truth.max,
        truncated: trace.truncated,
        discretization_bound: eta(width, delta)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{recommend, EpochUcb, Optimizer, QueryRecord, RecommendMode};
    use crate::oracle::NoisyOracle;
    use crate::rng::stream_key;

    fn trace_at(points: &[DyadicPoint]) -> RunTrace<f64> {
        let queries = points
            .iter()
            .map(|&point| QueryRecord { point, epoch: None })
            .collect();
        RunTrace::flat(queries, points.len() as u64)
    }

    #[test]
    fn all_queries_at_argmax_have_zero_regret() {
        let path = DyadicPath::<f64>::standard(3);
        let m = path.max_record(10).unwrap();
        let trace = trace_at(&[m.argmax; 5]);
        let r = score(&trace, m.argmax, &path, 10).unwrap();
        assert_eq!(r.cumulative, 0.0);
        assert_eq!(r.simple, 0.0);
        assert_eq!(r.truth, m);
    }

    #[test]
    fn single_query_gap() {
        let mut path = DyadicPath::<f64>::standard(4);
        let p = DyadicPoint::new(3, 3).unwrap();
        let g = path.max_record(8).unwrap().value - path.value(p).unwrap();
        let r = score(&trace_at(&[p]), p, &path, 8).unwrap();
        assert_eq!(r.cumulative, g);
        assert_eq!(r.simple, g);
        assert_eq!(r.per_query, vec![g]);
    }

    #[test]
    fn shallow_truth_is_rejected() {
        let path = DyadicPath::<f64>::standard(4);
        let p = DyadicPoint::new(6, 1).unwrap();
        assert_eq!(
            score(&trace_at(&[p]), p, &path, 5).unwrap_err(),
            Error::TruthTooShallow {
                truth_depth: 5,
                needed: 6
            }
        );
        assert_eq!(
            score(&trace_at(&[]), DyadicPoint::ONE, &path, 5).unwrap_err(),
            Error::EmptyTrace
        );
    }

    fn algorithm_run(seed: u64, budget: u64) -> (DyadicPath<f64>, RunTrace<f64>) {
        let path = DyadicPath::standard(seed);
        let mut oracle = NoisyOracle::new(path.clone(), 0.5, budget, seed + 1).unwrap();
        let trace = EpochUcb::default().optimize(&mut oracle).unwrap();
        (path, trace)
    }

    #[test]
    fn regrets_nonnegative_and_prefix_monotone() {
        let (path, trace) = algorithm_run(11, 2000);
        let r = score(&trace, DyadicPoint::ONE, &path, 16).unwrap();
        assert!(r.per_query.iter().all(|&x| x >= 0.0));
        let mut prev = 0.0;
        for t in (0..=r.budget()).step_by(50) {
            let c = r.cumulative_prefix(t);
            assert!(c >= prev);
            prev = c;
        }
        assert_eq!(r.cumulative_prefix(r.budget()), r.cumulative);
        assert!(r.discretization_bound > 0.0 && r.discretization_bound < 0.05);
    }

    #[test]
    fn deeper_truth_never_lowers_regret() {
        let (path, trace) = algorithm_run(12, 1000);
        let a = score(&trace, DyadicPoint::ONE, &path, 14).unwrap();
        let b = score(&trace, DyadicPoint::ONE, &path, 15).unwrap();
        let lift = b.truth.value - a.truth.value;
        assert!(lift >= 0.0);
        let diff = b.cumulative - a.cumulative;
        assert!((diff - trace.len() as f64 * lift).abs() < 1e-9);
    }

    #[test]
    fn mean_simple_regret_matches_average_cumulative() {
        let (path, trace) = algorithm_run(13, 3000);
        let truth = Truth::new(&path, 16).unwrap();
        let base = score_with_truth(&trace, DyadicPoint::ONE, &truth).unwrap();
        let draws = 10_000u64;
        let mean = (0..draws)
            .map(|i| {
                let rec = recommend(&trace, stream_key(&[99, i]), RecommendMode::Multiset).unwrap();
                truth.gap(rec).unwrap()
            })
            .sum::<f64>()
            / draws as f64;
        let target = base.cumulative / trace.len() as f64;
        assert!(
            (mean / target - 1.0).abs() < 0.01,
            "mean r_T {mean} vs R_T/T {target}"
        );
    }
}
