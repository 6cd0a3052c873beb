use crate::dyadic::DyadicPoint;
use crate::error::{Error, Result};
use crate::oracle::{NoisyOracle, Objective};
use crate::path::MAX_GRID_DEPTH;
use crate::rng::{stream_key, tag, CounterRng};
use crate::scalar::Scalar;

use super::{Optimizer, QueryRecord, RunTrace};

fn check_depth(depth: u32) -> Result<()> {
    if depth > MAX_GRID_DEPTH {
        return Err(Error::DepthCap {
            requested: depth,
            cap: MAX_GRID_DEPTH,
        });
    }
    Ok(())
}

fn spend<S: Scalar, F: Objective<S>>(
    oracle: &mut NoisyOracle<S, F>,
    mut next: impl FnMut(u64) -> Result<DyadicPoint>,
) -> Result<RunTrace<S>> {
    if oracle.spent() != 0 {
        return Err(Error::State("optimizer needs a fresh oracle".into()));
    }
    let budget = oracle.budget();
    let mut queries = Vec::with_capacity(budget.min(1 << 24) as usize);
    for t in 0..budget {
        let point = next(t)?;
        oracle.query(point)?;
        queries.push(QueryRecord { point, epoch: None });
    }
    Ok(RunTrace::flat(queries, budget))
}

/// Sweeps the lattice `k / 2^d`, `k = 0..=2^d`, left to right and wraps around.
///
/// With no explicit depth, `d = floor(log2(T - 1))` so that one sweep fits in
/// the budget.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UniformGrid {
    pub depth: Option<u32>,
}

impl UniformGrid {
    pub fn depth_for(&self, budget: u64) -> u32 {
        self.depth.unwrap_or_else(|| {
            if budget < 3 {
                0
            } else {
                (63 - (budget - 1).leading_zeros()).min(MAX_GRID_DEPTH)
            }
        })
    }
}

impl<S: Scalar> Optimizer<S> for UniformGrid {
    fn name(&self) -> &'static str {
        "uniform-grid"
    }

    fn optimize<F: Objective<S>>(&self, oracle: &mut NoisyOracle<S, F>) -> Result<RunTrace<S>> {
        let depth = self.depth_for(oracle.budget());
        check_depth(depth)?;
        let n = (1u64 << depth) + 1;
        spend(oracle, |t| DyadicPoint::new(depth, t % n))
    }
}

/// Queries independent uniform draws from the lattice `k / 2^depth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSearch {
    pub depth: u32,
    pub seed: u64,
}

impl<S: Scalar> Optimizer<S> for RandomSearch {
    fn name(&self) -> &'static str {
        "random-search"
    }

    fn optimize<F: Objective<S>>(&self, oracle: &mut NoisyOracle<S, F>) -> Result<RunTrace<S>> {
        check_depth(self.depth)?;
        let mut rng = CounterRng::new(stream_key(&[tag::SEARCH, self.seed]));
        let n = (1u64 << self.depth) + 1;
        spend(oracle, |_| DyadicPoint::new(self.depth, rng.below(n)))
    }
}
