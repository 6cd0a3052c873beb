//! Truncated checks of the high-probability event behind the regret bound.
//!
//! Every sub-event is evaluated on a dense grid of path values. A supremum
//! over a dyadic interval is replaced by the maximum over the grid points
//! inside it, which can only be smaller, so the checker may certify a run
//! that the continuum event would reject but never the other way round.
//! Levels deeper than `h_check` are ignored for the same reason.

use bmopt::{alpha, eta, kappa, lcb, ucb, Error, Params, Path, PathGrid, Result, Trace, Truth};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventMReport {
    /// Increments between neighbouring dyadic points stay within `alpha`.
    pub m1: bool,
    /// Epoch averages stay within `alpha` of the path.
    pub m2: bool,
    /// Path maximum over each live interval stays below its UCB.
    pub m3: bool,
    /// Path minimum over each live interval stays above its LCB.
    pub m4: bool,
    /// Noise-free envelope from above: `max <= max(ends) + eta`.
    pub c_event: bool,
    /// Noise-free envelope from below: `min >= min(ends) - eta`.
    pub c_prime: bool,
    pub delta: f64,
    pub h_check: u32,
    pub resolution: u32,
    /// Number of recorded epochs at depth `<= h_check`.
    pub epochs_checked: u32,
}

impl EventMReport {
    pub fn m(&self) -> bool {
        self.m1 && self.m2 && self.m3 && self.m4
    }

    /// The probability bound only covers `delta < 1/3`.
    pub fn delta_warning(&self) -> bool {
        self.delta >= 1.0 / 3.0
    }
}

/// Per-level maxima and minima of the grid over the dyadic blocks
/// `[k / 2^h, (k + 1) / 2^h]`, for `h = 0..=levels`.
struct BlockExtrema {
    max: Vec<Vec<f64>>,
    min: Vec<Vec<f64>>,
}

impl BlockExtrema {
    fn new(values: &[f64], resolution: u32, levels: u32) -> Self {
        let stride = 1usize << (resolution - levels);
        let blocks = 1usize << levels;
        let mut max = vec![Vec::with_capacity(blocks)];
        let mut min = vec![Vec::with_capacity(blocks)];
        for k in 0..blocks {
            let block = &values[k * stride..=(k + 1) * stride];
            max[0].push(block.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            min[0].push(block.iter().copied().fold(f64::INFINITY, f64::min));
        }
        while max.last().unwrap().len() > 1 {
            let (hi, lo) = (max.last().unwrap(), min.last().unwrap());
            let next_max = hi.chunks(2).map(|c| c[0].max(c[1])).collect();
            let next_min = lo.chunks(2).map(|c| c[0].min(c[1])).collect();
            max.push(next_max);
            min.push(next_min);
        }
        max.reverse();
        min.reverse();
        Self { max, min }
    }
}

fn unit_grid_depth(grid: &PathGrid) -> Result<u32> {
    let d = grid.depth();
    if grid.start() != 0 || grid.len() != (1usize << d) + 1 {
        return Err(Error::InvalidParam("event checks need a grid over [0, 1]".into()));
    }
    Ok(d)
}

/// Evaluates the truncated event for one run.
pub fn check_event_m(
    path: &Path,
    trace: &Trace,
    delta: f64,
    h_check: u32,
    resolution: u32,
) -> Result<EventMReport> {
    check_event_m_on_grid(&path.grid(resolution)?, trace, delta, h_check)
}

/// Same as [`check_event_m`] on precomputed path values.
pub fn check_event_m_on_grid(
    grid: &PathGrid,
    trace: &Trace,
    delta: f64,
    h_check: u32,
) -> Result<EventMReport> {
    let resolution = unit_grid_depth(grid)?;
    if h_check > resolution {
        return Err(Error::TruthTooShallow {
            truth_depth: resolution,
            needed: h_check,
        });
    }
    let params = Params::new(delta, 0.0)?;
    let values = grid.values();
    let blocks = BlockExtrema::new(values, resolution, h_check);

    let (mut m1, mut c_event, mut c_prime) = (true, true, true);
    for h in 0..=h_check {
        let w = 0.5f64.powi(h as i32);
        let (a, e) = (alpha(w, delta)?, eta(w, delta)?);
        let stride = 1usize << (resolution - h);
        for k in 0..(1usize << h) {
            let (left, right) = (values[k * stride], values[(k + 1) * stride]);
            m1 &= (right - left).abs() <= a;
            c_event &= blocks.max[h as usize][k] <= left.max(right) + e;
            c_prime &= blocks.min[h as usize][k] >= left.min(right) - e;
        }
    }

    let (mut m2, mut m3, mut m4) = (true, true, true);
    let mut epochs_checked = 0;
    for rec in trace.epochs.iter().filter(|r| r.depth <= h_check) {
        epochs_checked += 1;
        let a = alpha(0.5f64.powi(rec.depth as i32), delta)?;
        for (p, s) in rec.points.iter().zip(&rec.stats) {
            if s.known {
                continue;
            }
            let truth = grid.get(*p).ok_or(Error::TruthTooShallow {
                truth_depth: resolution,
                needed: p.depth(),
            })?;
            let mean = s.mean().expect("recorded points have observations");
            m2 &= (mean - truth).abs() <= a;
        }
        let averages = rec.averages();
        for iv in &rec.intervals {
            let k = iv.k() as usize;
            let level = iv.epoch() as usize;
            m3 &= blocks.max[level][k] <= ucb(iv, &averages, &params)?;
            m4 &= blocks.min[level][k] >= lcb(iv, &averages, &params)?;
        }
    }

    Ok(EventMReport {
        m1,
        m2,
        m3,
        m4,
        c_event,
        c_prime,
        delta,
        h_check,
        resolution,
        epochs_checked,
    })
}

/// Largest regret of the queries made in each epoch relative to `4 kappa_h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRegretCheck {
    pub checked: usize,
    pub violations: usize,
    /// `max regret / (4 kappa_h)` over the checked queries.
    pub worst_ratio: f64,
}

impl EpochRegretCheck {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Compares every epoch query against `4 kappa_h`, where `h` is the epoch
/// counter the query was made under. The initial samples at `x = 1` carry
/// no epoch and are skipped.
pub fn check_epoch_regret(truth: &Truth<f64>, trace: &Trace, delta: f64) -> Result<EpochRegretCheck> {
    let deepest = trace.deepest_epoch();
    let bounds = (0..=deepest)
        .map(|h| Ok(4.0 * kappa(h, delta)?))
        .collect::<Result<Vec<f64>>>()?;
    let mut out = EpochRegretCheck {
        checked: 0,
        violations: 0,
        worst_ratio: 0.0,
    };
    for q in &trace.queries {
        let Some(h) = q.epoch else { continue };
        let ratio = truth.gap(q.point)? / bounds[h as usize];
        out.checked += 1;
        out.worst_ratio = out.worst_ratio.max(ratio);
        if ratio > 1.0 {
            out.violations += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bmopt::{EpochUcb, NoisyOracle, Optimizer};

    fn run(seed: u64, sigma2: f64, budget: u64, delta: f64) -> (Path, Trace) {
        let path = Path::standard(seed);
        let mut oracle = NoisyOracle::new(path.clone(), sigma2, budget, seed).unwrap();
        let trace = EpochUcb::with_delta(Some(delta)).optimize(&mut oracle).unwrap();
        (path, trace)
    }

    #[test]
    fn zero_noise_keeps_averages_exact() {
        for seed in 0..20 {
            let (path, trace) = run(seed, 0.0, 400, 0.3);
            let r = check_event_m(&path, &trace, 0.3, 6, 10).unwrap();
            assert!(r.m2, "seed {seed}");
            assert!(r.epochs_checked >= 4);
            assert!(!r.delta_warning());
        }
    }

    #[test]
    fn envelope_and_averages_imply_bound_events() {
        for seed in 0..200 {
            let (path, trace) = run(seed, 0.5, 3000, 0.2);
            let r = check_event_m(&path, &trace, 0.2, 6, 10).unwrap();
            if r.c_event && r.m2 {
                assert!(r.m3, "seed {seed}");
            }
            if r.c_prime && r.m2 {
                assert!(r.m4, "seed {seed}");
            }
        }
    }

    #[test]
    fn block_extrema_match_brute_force() {
        let g = Path::standard(4).grid(8).unwrap();
        let b = BlockExtrema::new(g.values(), 8, 5);
        for h in 0..=5u32 {
            let stride = 1usize << (8 - h);
            for k in 0..(1usize << h) {
                let range = k * stride..=(k + 1) * stride;
                assert_eq!(b.max[h as usize][k], g.max_in(range.clone()));
                assert_eq!(b.min[h as usize][k], g.min_in(range));
            }
        }
    }

    #[test]
    fn rejects_bad_grids_and_depths() {
        let (path, trace) = run(1, 0.5, 100, 0.2);
        assert!(check_event_m(&path, &trace, 0.2, 11, 10).is_err());
        let wide = bmopt::Domain::extended(bmopt::DyadicPoint::new(2, 1).unwrap()).unwrap();
        let g = bmopt::DyadicPath::<f64>::new(1, wide, 0.0).unwrap().grid(6).unwrap();
        assert!(check_event_m_on_grid(&g, &trace, 0.2, 4).is_err());
    }

    #[test]
    fn flags_large_delta() {
        let (path, trace) = run(2, 0.5, 200, 0.5);
        assert!(check_event_m(&path, &trace, 0.5, 4, 8).unwrap().delta_warning());
    }

    #[test]
    fn epoch_regret_on_certified_runs() {
        for seed in 0..50 {
            let (path, trace) = run(seed, 0.5, 5000, 0.05);
            let truth = Truth::new(&path, 12).unwrap();
            let m = check_event_m_on_grid(&truth.grid, &trace, 0.05, trace.deepest_epoch())
                .unwrap();
            let reg = check_epoch_regret(&truth, &trace, 0.05).unwrap();
            assert!(reg.checked > 0);
            if m.m() {
                assert!(reg.holds(), "seed {seed}: ratio {}", reg.worst_ratio);
            }
        }
    }
}
