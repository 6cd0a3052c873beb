//! Near-optimal point counts and the range of a path.

use bmopt::{Path, PathGrid, Result};
use serde::Serialize;

use crate::stats::{linear_fit, MeanEstimate};

/// Number of grid points within `gap` of the grid maximum.
pub fn count_near_optimal_on_grid(grid: &PathGrid, gap: f64) -> usize {
    let max = grid.max_record().value;
    grid.values().iter().filter(|&&v| v >= max - gap).count()
}

/// Number of depth-`depth` lattice points of `path` within `gap` of the
/// depth-`depth` maximum.
pub fn count_near_optimal(path: &Path, depth: u32, gap: f64) -> Result<usize> {
    Ok(count_near_optimal_on_grid(&path.grid(depth)?, gap))
}

/// Expected-count bound `6 gap^2 2^depth`.
pub fn near_optimal_bound(depth: u32, gap: f64) -> f64 {
    6.0 * gap * gap * 2f64.powi(depth as i32)
}

/// `max - min` over the grid.
pub fn path_range(grid: &PathGrid) -> f64 {
    grid.range()
}

/// `E[range | range > q-quantile]` for one `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailLevel {
    pub q: f64,
    pub threshold: f64,
    /// Empirical probability of the conditioning event.
    pub probability: f64,
    /// `sqrt(ln(1 / probability))`.
    pub log_factor: f64,
    pub conditional: MeanEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapBoundReport {
    pub unconditional: MeanEstimate,
    pub levels: Vec<TailLevel>,
    /// Slope of the conditional means against `log_factor` (affine fit).
    pub growth_slope: f64,
    pub growth_intercept: f64,
    pub growth_r_squared: f64,
    /// Slope of `ln E[range | A]` against `ln log_factor`.
    pub loglog_exponent: f64,
}

/// Conditions the sample of ranges on exceeding each empirical quantile in
/// `qs` and regresses the conditional means on `sqrt(ln(1 / P[A]))`.
pub fn check_gap_bound(ranges: &[f64], qs: &[f64]) -> GapBoundReport {
    let mut sorted = ranges.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let levels: Vec<TailLevel> = qs
        .iter()
        .map(|&q| {
            let cut = ((q * n as f64).floor() as usize).min(n - 1);
            let tail = &sorted[cut..];
            let threshold = if cut == 0 { f64::NEG_INFINITY } else { sorted[cut - 1] };
            let probability = tail.len() as f64 / n as f64;
            TailLevel {
                q,
                threshold,
                probability,
                log_factor: (1.0 / probability).ln().sqrt(),
                conditional: MeanEstimate::from_samples(tail),
            }
        })
        .collect();
    let xs: Vec<f64> = levels.iter().map(|l| l.log_factor).collect();
    let ys: Vec<f64> = levels.iter().map(|l| l.conditional.mean).collect();
    let affine = linear_fit(&xs, &ys);
    let loglog = if xs.iter().all(|&x| x > 0.0) {
        let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
        linear_fit(&lx, &ly).slope
    } else {
        f64::NAN
    };
    GapBoundReport {
        unconditional: MeanEstimate::from_samples(ranges),
        levels,
        growth_slope: affine.slope,
        growth_intercept: affine.intercept,
        growth_r_squared: affine.r_squared,
        loglog_exponent: loglog,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_edge_cases() {
        let g = Path::standard(5).grid(6).unwrap();
        assert!(count_near_optimal_on_grid(&g, 0.0) >= 1);
        assert_eq!(count_near_optimal_on_grid(&g, f64::INFINITY), 65);
        assert_eq!(count_near_optimal(&Path::standard(5), 6, 0.0).unwrap(), 1);
    }

    #[test]
    fn bound_value() {
        assert!((near_optimal_bound(6, 0.1) - 3.84).abs() < 1e-12);
    }

    #[test]
    fn full_space_is_unconditional() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64 / 10.0).collect();
        let r = check_gap_bound(&xs, &[0.0, 0.5, 0.9]);
        assert_eq!(r.levels[0].conditional.mean, r.unconditional.mean);
        assert_eq!(r.levels[0].probability, 1.0);
        assert_eq!(r.levels[1].conditional.n, 50);
        assert_eq!(r.levels[2].conditional.n, 10);
    }
}
