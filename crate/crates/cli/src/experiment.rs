//! Replicated regret runs over a grid of budgets.

use std::time::Instant;

use bmopt::rng::{stream_key, tag};
use bmopt::{recommend, score_with_truth, EpochUcb, NoisyOracle, Optimizer, Path, RecommendMode, Truth};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;

/// One row of the runs CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    #[serde(rename = "T")]
    pub t: u64,
    pub path_seed: u64,
    pub noise_seed: u64,
    #[serde(rename = "R_T")]
    pub cumulative: f64,
    #[serde(rename = "r_T")]
    pub simple: f64,
    #[serde(rename = "RT_over_sqrtT")]
    pub cumulative_over_sqrt_t: f64,
    pub epochs: u32,
    pub truncated: bool,
    pub disc_bound: f64,
    pub wall_ms: u64,
    #[serde(skip)]
    pub deepest_epoch: u32,
}

/// Per-budget summary, one row of the aggregates CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    #[serde(rename = "T")]
    pub t: u64,
    pub runs: usize,
    #[serde(rename = "mean_R_T")]
    pub mean_cumulative: f64,
    #[serde(rename = "std_R_T")]
    pub std_cumulative: f64,
    #[serde(rename = "mean_RT_over_sqrtT")]
    pub mean_normalized: f64,
    #[serde(rename = "std_RT_over_sqrtT")]
    pub std_normalized: f64,
    #[serde(rename = "mean_r_T")]
    pub mean_simple: f64,
    #[serde(rename = "std_r_T")]
    pub std_simple: f64,
    #[serde(rename = "mean_rT_times_sqrtT")]
    pub mean_simple_times_sqrt_t: f64,
    pub truncated_runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub aggregates: Vec<Aggregate>,
    /// Runs whose deepest epoch comes within four levels of the truth depth.
    pub shallow_truth_runs: usize,
}

/// Noise seed of replication `j` on path `path_seed`.
pub fn noise_seed(path_seed: u64, j: u64) -> u64 {
    stream_key(&[path_seed, j])
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn aggregate(records: &[RunRecord]) -> Vec<Aggregate> {
    let mut ts: Vec<u64> = records.iter().map(|r| r.t).collect();
    ts.dedup();
    ts.into_iter()
        .map(|t| {
            let rows: Vec<&RunRecord> = records.iter().filter(|r| r.t == t).collect();
            let col = |f: fn(&RunRecord) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let (mean_r, std_r) = mean_std(&col(|r| r.cumulative));
            let (mean_n, std_n) = mean_std(&col(|r| r.cumulative_over_sqrt_t));
            let (mean_s, std_s) = mean_std(&col(|r| r.simple));
            Aggregate {
                t,
                runs: rows.len(),
                mean_cumulative: mean_r,
                std_cumulative: std_r,
                mean_normalized: mean_n,
                std_normalized: std_n,
                mean_simple: mean_s,
                std_simple: std_s,
                mean_simple_times_sqrt_t: mean_s * (t as f64).sqrt(),
                truncated_runs: rows.iter().filter(|r| r.truncated).count(),
            }
        })
        .collect()
}

fn run_path(
    cfg: &ExperimentConfig,
    path_seed: u64,
    timing: bool,
) -> bmopt::Result<Vec<RunRecord>> {
    let path = Path::standard(path_seed);
    let truth = Truth::new(&path, cfg.truth_depth)?;
    let alg = EpochUcb::with_delta(cfg.delta_override);
    let mut out = Vec::new();
    for &t in &cfg.t_grid {
        for j in 0..cfg.noise_seeds_per_path {
            let noise = noise_seed(path_seed, j);
            let start = Instant::now();
            let mut oracle = NoisyOracle::new(path.clone(), cfg.sigma2, t, noise)?;
            let trace = alg.optimize(&mut oracle)?;
            let rec_key = stream_key(&[tag::RECOMMEND, path_seed, noise, t]);
            let rec = recommend(&trace, rec_key, RecommendMode::Multiset)?;
            let report = score_with_truth(&trace, rec, &truth)?;
            let wall_ms = if timing { start.elapsed().as_millis() as u64 } else { 0 };
            out.push(RunRecord {
                t,
                path_seed,
                noise_seed: noise,
                cumulative: report.cumulative,
                simple: report.simple,
                cumulative_over_sqrt_t: report.cumulative / (t as f64).sqrt(),
                epochs: trace.epochs_completed,
                truncated: trace.truncated,
                disc_bound: report.discretization_bound,
                wall_ms,
                deepest_epoch: trace.deepest_epoch(),
            });
        }
    }
    Ok(out)
}

/// Runs every (budget, path, noise) replication. Path seeds are
/// `base_seed..base_seed + path_seeds`. With `timing` off, `wall_ms` is
/// zero so that reruns reproduce the CSV byte for byte.
pub fn run_experiment(cfg: &ExperimentConfig, base_seed: u64, timing: bool) -> bmopt::Result<ExperimentOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| bmopt::Error::State(format!("thread pool: {e}")))?;
    let per_path = pool.install(|| {
        (0..cfg.path_seeds)
            .into_par_iter()
            .map(|i| run_path(cfg, base_seed + i, timing))
            .collect::<bmopt::Result<Vec<Vec<RunRecord>>>>()
    })?;
    let mut records: Vec<RunRecord> = per_path.into_iter().flatten().collect();
    records.sort_by_key(|r| (r.t, r.path_seed, r.noise_seed));
    let shallow_truth_runs = records
        .iter()
        .filter(|r| r.deepest_epoch + 4 > cfg.truth_depth)
        .count();
    Ok(ExperimentOutput {
        aggregates: aggregate(&records),
        records,
        shallow_truth_runs,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            t_grid: vec![100, 400],
            path_seeds: 2,
            noise_seeds_per_path: 3,
            truth_depth: 14,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn one_row_per_replication_sorted() {
        let out = run_experiment(&tiny(), 0, false).unwrap();
        assert_eq!(out.records.len(), 2 * 2 * 3);
        let keys: Vec<_> = out.records.iter().map(|r| (r.t, r.path_seed, r.noise_seed)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(out.records.iter().all(|r| r.cumulative >= 0.0 && r.wall_ms == 0));
        assert_eq!(out.aggregates.len(), 2);
        assert_eq!(out.aggregates[0].runs, 6);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let a = run_experiment(&tiny(), 3, false).unwrap();
        let b = run_experiment(&ExperimentConfig { parallelism: 3, ..tiny() }, 3, false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn aggregate_statistics() {
        let out = run_experiment(&tiny(), 0, false).unwrap();
        let rows: Vec<f64> = out.records.iter().filter(|r| r.t == 100).map(|r| r.cumulative).collect();
        let (m, s) = mean_std(&rows);
        assert_eq!(out.aggregates[0].mean_cumulative, m);
        assert_eq!(out.aggregates[0].std_cumulative, s);
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
    }

    #[test]
    fn slope_of_a_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.5)).collect();
        assert!((loglog_slope(&xs, &ys) - 0.5).abs() < 1e-12);
    }
}
