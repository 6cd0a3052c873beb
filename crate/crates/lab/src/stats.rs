//! Small Monte Carlo estimators and one-sided comparison rows.

use serde::Serialize;

/// Fraction of `hits` among `n` trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proportion {
    pub hits: u64,
    pub n: u64,
}

impl Proportion {
    pub fn new(hits: u64, n: u64) -> Self {
        Self { hits, n }
    }

    pub fn estimate(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        self.hits as f64 / self.n as f64
    }

    /// Binomial standard error at the observed frequency.
    pub fn se(&self) -> f64 {
        let p = self.estimate();
        (p * (1.0 - p) / self.n as f64).sqrt()
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                sd: f64::NAN,
                n,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, sd, n }
    }

    pub fn se(&self) -> f64 {
        self.sd / (self.n as f64).sqrt()
    }
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and
/// `cdf`. Sorts `samples` in place.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len(), "paired samples");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    LinearFit {
        intercept: my - slope * mx,
        slope,
        r_squared,
    }
}

/// Which side of the bound the estimate must fall on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `estimate <= bound + 3 se`
    AtMost,
    /// `estimate >= bound - 3 se`
    AtLeast,
}

/// One-sided comparison of a Monte Carlo estimate with a bound, using a
/// three-standard-error slack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub side: Side,
    pub bound: f64,
    pub estimate: f64,
    pub se: f64,
    /// Distance to failure; negative when the check fails.
    pub margin: f64,
    pub pass: bool,
}

pub const SLACK_SE: f64 = 3.0;

impl CheckRow {
    pub fn new(name: impl Into<String>, side: Side, bound: f64, estimate: f64, se: f64) -> Self {
        let margin = match side {
            Side::AtMost => bound + SLACK_SE * se - estimate,
            Side::AtLeast => estimate - (bound - SLACK_SE * se),
        };
        Self {
            name: name.into(),
            side,
            bound,
            estimate,
            se,
            margin,
            pass: margin >= 0.0,
        }
    }

    /// A check without sampling error.
    pub fn exact(name: impl Into<String>, side: Side, bound: f64, estimate: f64) -> Self {
        Self::new(name, side, bound, estimate, 0.0)
    }
}
