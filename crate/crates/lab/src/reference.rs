//! A second, deliberately plain implementation of the epoch algorithm.
//!
//! It shares nothing with the library optimizer except the oracle: points
//! are integer numerators at a fixed depth, averages live in a `BTreeMap`,
//! and the confidence widths are written out inline. Given the same oracle
//! it must reproduce the library trace query for query.

use std::collections::BTreeMap;

use bmopt::{DyadicPoint, Error, NoisyOracle, Objective, QueryRecord, Result};

/// Depth at which every point is stored as an integer numerator.
const DEPTH: u32 = 50;
const ONE: u64 = 1 << DEPTH;
/// Epochs stop here; the library switches to a fill mode at the same depth.
const LAST_EPOCH: u32 = 48;

/// Sequence of queries and the number of completed epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrace {
    pub queries: Vec<QueryRecord>,
    pub epochs_completed: u32,
    pub truncated: bool,
}

fn point(n: u64) -> DyadicPoint {
    DyadicPoint::new(DEPTH, n).expect("numerator within the unit interval")
}

struct Sums {
    table: BTreeMap<u64, (f64, u64)>,
}

impl Sums {
    fn mean(&self, n: u64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let (s, c) = self.table[&n];
        s / c as f64
    }

    fn count(&self, n: u64) -> u64 {
        self.table.get(&n).map_or(0, |e| e.1)
    }

    fn add(&mut self, n: u64, y: f64) {
        let e = self.table.entry(n).or_insert((0.0, 0));
        e.0 += y;
        e.1 += 1;
    }
}

/// Runs the algorithm with failure probability `delta` on a fresh oracle.
pub fn reference_run<F: Objective<f64>>(
    oracle: &mut NoisyOracle<f64, F>,
    delta: f64,
) -> Result<ReferenceTrace> {
    if oracle.spent() != 0 {
        return Err(Error::State("reference run needs a fresh oracle".into()));
    }
    let sigma2 = oracle.sigma2();
    let mut sums = Sums { table: BTreeMap::new() };
    let mut queries = Vec::new();
    let mut out = ReferenceTrace {
        queries: Vec::new(),
        epochs_completed: 0,
        truncated: false,
    };

    let init = (sigma2.ceil() as u64).max(1);
    for _ in 0..init {
        if oracle.remaining() == 0 {
            out.truncated = true;
            out.queries = queries;
            return Ok(out);
        }
        let y = oracle.query(DyadicPoint::ONE)?;
        sums.add(ONE, y);
        queries.push(QueryRecord {
            point: DyadicPoint::ONE,
            epoch: None,
        });
    }

    // Intervals as (left numerator, epoch).
    let mut live: Vec<u64> = vec![0];
    let mut h = 0u32;
    while oracle.remaining() > 0 {
        if h >= LAST_EPOCH {
            return Err(Error::State("reference run does not cover the depth cap".into()));
        }
        let width = 0.5f64.powi(h as i32);
        let step = ONE >> h;
        let eta = (2.5 * width * (2.0 / (width * delta)).ln()).sqrt();
        let alpha = (6.0 * width * (1.0 / (width * delta)).ln()).sqrt();
        let slack = eta + alpha;

        let mut best_lower = f64::NEG_INFINITY;
        for &lo in &live {
            let (a, b) = (sums.mean(lo), sums.mean(lo + step));
            best_lower = best_lower.max(a.min(b) - slack);
        }
        let mut next = Vec::new();
        for &lo in &live {
            let (a, b) = (sums.mean(lo), sums.mean(lo + step));
            if a.max(b) + slack >= best_lower {
                next.push(lo);
                next.push(lo + step / 2);
            }
        }
        next.sort_unstable();
        next.dedup();

        let mut pts: Vec<u64> = next.iter().flat_map(|&lo| [lo, lo + step / 2]).collect();
        pts.sort_unstable();
        pts.dedup();

        let target = ((sigma2 * 2f64.powi(h as i32 + 1)).ceil() as u64).max(1);
        for &n in pts.iter().filter(|&&n| n != 0) {
            let mut have = sums.count(n);
            while have < target {
                if oracle.remaining() == 0 {
                    out.truncated = true;
                    out.queries = queries;
                    return Ok(out);
                }
                let y = oracle.query(point(n))?;
                sums.add(n, y);
                queries.push(QueryRecord {
                    point: point(n),
                    epoch: Some(h),
                });
                have += 1;
            }
        }
        out.epochs_completed += 1;
        live = next;
        h += 1;
    }
    out.queries = queries;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bmopt::{EpochUcb, Optimizer, Path};

    #[test]
    fn matches_library_on_small_runs() {
        for seed in 0..30u64 {
            let budget = 200 + 137 * seed;
            let sigma2 = [0.0, 0.3, 1.0, 2.5][seed as usize % 4];
            let delta = (budget as f64).powf(-0.5);
            let mut a = NoisyOracle::new(Path::standard(seed), sigma2, budget, seed).unwrap();
            let mut b = NoisyOracle::new(Path::standard(seed), sigma2, budget, seed).unwrap();
            let lib = EpochUcb::default().optimize(&mut a).unwrap();
            let r = reference_run(&mut b, delta).unwrap();
            assert_eq!(lib.queries, r.queries, "seed {seed}");
            assert_eq!(lib.epochs_completed, r.epochs_completed);
            assert_eq!(lib.truncated, r.truncated);
        }
    }
}
