//! Distributional checks of the sampled paths against closed-form laws of
//! Brownian maxima, bridges and meanders.

use bmopt::rng::stream_key;
use bmopt::{bridge_max_survival, Domain, DyadicPath, DyadicPoint, Path, Result};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erf;

use crate::stats::{ks_statistic, Proportion};

/// Path seed of sample `i` in the family `base`.
pub fn sample_seed(base: u64, i: u64) -> u64 {
    stream_key(&[base, i])
}

/// `P[max_{[0,1]} W <= b] = P[|N(0, 1)| <= b]`.
pub fn running_max_cdf(b: f64) -> f64 {
    if b <= 0.0 {
        0.0
    } else {
        erf(b / std::f64::consts::SQRT_2)
    }
}

/// KS distance between the depth-`depth` grid maximum of `n` standard paths
/// and the law of `|N(0, 1)|`. The grid maximum sits below the continuum
/// maximum, so the statistic carries a small one-sided bias.
pub fn running_max_ks(n: u64, depth: u32, base: u64) -> Result<f64> {
    let mut maxima = (0..n)
        .into_par_iter()
        .map(|i| Ok(Path::standard(sample_seed(base, i)).grid(depth)?.max_record().value))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ks_statistic(&mut maxima, running_max_cdf))
}

/// Bridge pinned at `w_a`, `w_b` over an interval of length `len`, and the
/// exceedance level `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BridgeCase {
    pub w_a: f64,
    pub w_b: f64,
    pub len: f64,
    pub y: f64,
}

impl BridgeCase {
    pub fn bound(&self) -> Result<f64> {
        bridge_max_survival(self.w_a, self.w_b, self.len, self.y)
    }
}

/// Frequency with which the grid maximum of the bridge exceeds `y`.
pub fn bridge_exceedance(case: BridgeCase, n: u64, depth: u32, base: u64) -> Result<Proportion> {
    let domain = Domain::new(DyadicPoint::ZERO, DyadicPoint::from_f64(case.len)?)?;
    let hits = (0..n)
        .into_par_iter()
        .map(|i| {
            let seed = sample_seed(base, i);
            let grid = DyadicPath::bridge(seed, domain, case.w_a, case.w_b).grid(depth)?;
            Ok(u64::from(grid.max_record().value > case.y))
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();
    Ok(Proportion::new(hits, n))
}

/// `P[max_{[0,s]} W >= x | W > 0 on (0, t], W_0 = 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanderMaxCase {
    pub s: f64,
    pub t: f64,
    pub x: f64,
}

impl MeanderMaxCase {
    /// `1 - (x / sqrt s)^2 / 2` when `t > 2s`, else `1 - x sqrt(2 / s)`.
    pub fn bound(&self) -> f64 {
        let r = self.x / self.s.sqrt();
        if self.t > 2.0 * self.s {
            1.0 - 0.5 * r * r
        } else {
            1.0 - r * std::f64::consts::SQRT_2
        }
    }

    pub fn long_horizon(&self) -> bool {
        self.t > 2.0 * self.s
    }

    fn valid(&self) -> bool {
        0.0 < self.s && self.s <= self.t && 0.0 <= self.x && self.x < self.s.sqrt() / 2.0
    }
}

/// `P[min_{[0,t]} W > eps | min_{[0,t]} W > 0, W_0 = u]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanderMinCase {
    pub u: f64,
    pub eps: f64,
    pub t: f64,
}

impl MeanderMinCase {
    /// `(u - eps) / u`.
    pub fn bound(&self) -> f64 {
        (self.u - self.eps) / self.u
    }

    fn valid(&self) -> bool {
        0.0 < self.eps && self.eps < self.u && self.t > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanderReport {
    pub max_cases: Vec<(MeanderMaxCase, Proportion)>,
    pub min_cases: Vec<(MeanderMinCase, Proportion)>,
}

/// Unit-length meander read off the longer side of the path's argmax.
///
/// Seen from its maximum, a Brownian path splits into two independent
/// meanders whose lengths are independent of their shapes, so picking the
/// side by length does not bias the shape.
fn meander_from_grid(values: &[f64]) -> Vec<f64> {
    let n = values.len() - 1;
    let (i, m) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
    let (steps, right) = if i <= n / 2 { (n - i, true) } else { (i, false) };
    let scale = (steps as f64 / n as f64).sqrt();
    (0..=steps)
        .map(|k| {
            let v = if right { values[i + k] } else { values[i - k] };
            (m - v) / scale
        })
        .collect()
}

/// Monte Carlo frequencies for the meander running-maximum and
/// running-minimum cases on `n` depth-`depth` standard paths.
///
/// Minimum cases condition by rejection: the path `u + sqrt(t) W(z / t)` is
/// kept when its grid minimum stays positive.
pub fn meander_checks(
    max_cases: &[MeanderMaxCase],
    min_cases: &[MeanderMinCase],
    n: u64,
    depth: u32,
    base: u64,
) -> Result<MeanderReport> {
    if let Some(c) = max_cases.iter().find(|c| !c.valid()) {
        return Err(bmopt::Error::InvalidParam(format!("meander case {c:?} out of range")));
    }
    if let Some(c) = min_cases.iter().find(|c| !c.valid()) {
        return Err(bmopt::Error::InvalidParam(format!("meander case {c:?} out of range")));
    }
    let per_path = (0..n)
        .into_par_iter()
        .map(|i| {
            let grid = Path::standard(sample_seed(base, i)).grid(depth)?;
            let values = grid.values();
            let meander = meander_from_grid(values);
            let steps = meander.len() - 1;
            let max_hits: Vec<bool> = max_cases
                .iter()
                .map(|c| {
                    let last = ((c.s / c.t) * steps as f64).floor() as usize;
                    let level = c.x / c.t.sqrt();
                    meander[..=last.min(steps)].iter().any(|&b| b >= level)
                })
                .collect();
            let low = grid.min_in(0..=values.len() - 1);
            let min_hits: Vec<(bool, bool)> = min_cases
                .iter()
                .map(|c| {
                    let m = c.u + c.t.sqrt() * low;
                    (m > 0.0, m > c.eps)
                })
                .collect();
            Ok((max_hits, min_hits))
        })
        .collect::<Result<Vec<_>>>()?;

    let max_out = max_cases
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let hits = per_path.iter().filter(|p| p.0[j]).count() as u64;
            (c, Proportion::new(hits, n))
        })
        .collect();
    let min_out = min_cases
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let kept = per_path.iter().filter(|p| p.1[j].0).count() as u64;
            let hits = per_path.iter().filter(|p| p.1[j].1).count() as u64;
            (c, Proportion::new(hits, kept))
        })
        .collect();
    Ok(MeanderReport {
        max_cases: max_out,
        min_cases: min_out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_cdf_values() {
        assert_eq!(running_max_cdf(-1.0), 0.0);
        // statrs' erf is good to a few 1e-11.
        assert!((running_max_cdf(1.0) - 0.682_689_492_137_085_9).abs() < 1e-10);
    }

    #[test]
    fn meander_bounds_pick_the_branch() {
        let long = MeanderMaxCase { s: 0.25, t: 1.0, x: 0.2 };
        assert!(long.long_horizon());
        assert!((long.bound() - 0.92).abs() < 1e-12);
        let short = MeanderMaxCase { s: 0.5, t: 1.0, x: 0.1 };
        assert!(!short.long_horizon());
        assert!((short.bound() - 0.8).abs() < 1e-12);
        let m = MeanderMinCase { u: 0.5, eps: 0.1, t: 1.0 };
        assert!((m.bound() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn meander_starts_at_zero_and_stays_nonnegative() {
        let g = Path::standard(3).grid(10).unwrap();
        let m = meander_from_grid(g.values());
        assert_eq!(m[0], 0.0);
        assert!(m.len() > 512);
        assert!(m.iter().all(|&b| b >= 0.0));
    }

    #[test]
    fn invalid_cases_rejected() {
        let bad = MeanderMaxCase { s: 0.25, t: 1.0, x: 0.3 };
        assert!(meander_checks(&[bad], &[], 10, 6, 0).is_err());
        let bad = MeanderMinCase { u: 0.5, eps: 0.6, t: 1.0 };
        assert!(meander_checks(&[], &[bad], 10, 6, 0).is_err());
    }
}
