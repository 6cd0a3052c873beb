//! The full battery of Monte Carlo checks, one [`CheckRow`] per comparison.

use bmopt::rng::stream_key;
use bmopt::{EpochUcb, NoisyOracle, Optimizer, Path, Result, Truth};
use rayon::prelude::*;
use serde::Serialize;

use crate::counting::{check_gap_bound, count_near_optimal, near_optimal_bound};
use crate::distribution::{
    bridge_exceedance, meander_checks, running_max_ks, sample_seed, BridgeCase, MeanderMaxCase,
    MeanderMinCase,
};
use crate::event_m::{check_epoch_regret, check_event_m_on_grid};
use crate::lowerbound::{
    batched_summaries, check_event_t, HypothesisConfig, PairPolicy, ShiftedPair,
};
use crate::reference::reference_run;
use crate::stats::{CheckRow, MeanEstimate, Proportion, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    EventM,
    NearOptimal,
    RunningMax,
    BridgeMax,
    Meander,
    EventT,
    Fano,
    Conformance,
    GapBound,
}

impl Check {
    pub const ALL: [Check; 9] = [
        Check::EventM,
        Check::NearOptimal,
        Check::RunningMax,
        Check::BridgeMax,
        Check::Meander,
        Check::EventT,
        Check::Fano,
        Check::Conformance,
        Check::GapBound,
    ];
}

/// Sample sizes and parameters of every check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub checks: Vec<Check>,
    pub base_seed: u64,

    pub event_m_reps: u64,
    pub event_m_delta: f64,
    pub event_m_h_check: u32,
    pub event_m_sigma2: f64,
    pub event_m_budget: u64,
    pub event_m_resolution: u32,

    /// `(depth, gap)` pairs.
    pub near_optimal_cases: Vec<(u32, f64)>,
    pub near_optimal_seeds: u64,

    pub running_max_seeds: u64,
    pub running_max_depth: u32,
    pub running_max_ks: f64,

    pub bridge_cases: Vec<BridgeCase>,
    pub bridge_seeds: u64,
    pub bridge_depth: u32,

    pub meander_max_cases: Vec<MeanderMaxCase>,
    pub meander_min_cases: Vec<MeanderMinCase>,
    pub meander_seeds: u64,
    pub meander_depth: u32,

    pub event_t_shift_depth: u32,
    pub event_t_delta: f64,
    pub event_t_eta_exponent: f64,
    pub event_t_seeds: u64,
    pub event_t_grid_depth: u32,

    pub fano_budget: u64,
    pub fano_sigma2: f64,
    pub fano_batches: u64,
    pub fano_batch: u64,
    pub fano_random_depth: u32,
    pub fano_pass_fraction: f64,

    pub conformance_runs: u64,
    pub conformance_budget: u64,
    pub conformance_sigma2: f64,
    pub conformance_truth_depth: u32,

    pub gap_seeds: u64,
    pub gap_depth: u32,
    pub gap_quantiles: Vec<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            checks: Check::ALL.to_vec(),
            base_seed: 2024,
            event_m_reps: 10_000,
            event_m_delta: 0.2,
            event_m_h_check: 8,
            event_m_sigma2: 0.5,
            event_m_budget: 48_000,
            event_m_resolution: 12,
            near_optimal_cases: vec![(4, 0.2), (6, 0.1), (8, 0.05)],
            near_optimal_seeds: 100_000,
            running_max_seeds: 100_000,
            running_max_depth: 14,
            running_max_ks: 0.01,
            bridge_cases: vec![
                BridgeCase { w_a: 0.0, w_b: 0.0, len: 1.0, y: 1.0 },
                BridgeCase { w_a: 0.0, w_b: 0.5, len: 1.0, y: 0.8 },
                BridgeCase { w_a: -0.3, w_b: 0.2, len: 2.0, y: 0.7 },
            ],
            bridge_seeds: 10_000,
            bridge_depth: 14,
            meander_max_cases: vec![
                MeanderMaxCase { s: 0.25, t: 1.0, x: 0.2 },
                MeanderMaxCase { s: 0.1, t: 1.0, x: 0.1 },
                MeanderMaxCase { s: 0.2, t: 1.0, x: 0.15 },
                MeanderMaxCase { s: 0.6, t: 1.0, x: 0.2 },
                MeanderMaxCase { s: 0.5, t: 1.0, x: 0.1 },
                MeanderMaxCase { s: 1.0, t: 1.0, x: 0.3 },
            ],
            meander_min_cases: vec![
                MeanderMinCase { u: 1.0, eps: 0.5, t: 1.0 },
                MeanderMinCase { u: 0.5, eps: 0.1, t: 1.0 },
                MeanderMinCase { u: 1.0, eps: 0.3, t: 2.0 },
            ],
            meander_seeds: 20_000,
            meander_depth: 14,
            event_t_shift_depth: 10,
            event_t_delta: 0.5,
            event_t_eta_exponent: 0.4,
            event_t_seeds: 10_000,
            event_t_grid_depth: 12,
            fano_budget: 1000,
            fano_sigma2: 0.5,
            fano_batches: 10,
            fano_batch: 500,
            fano_random_depth: 10,
            fano_pass_fraction: 0.95,
            conformance_runs: 100,
            conformance_budget: 10_000,
            conformance_sigma2: 0.5,
            conformance_truth_depth: 16,
            gap_seeds: 20_000,
            gap_depth: 14,
            gap_quantiles: vec![0.5, 0.9, 0.99],
        }
    }
}

impl SuiteConfig {
    /// Roughly a hundredth of the default effort, for smoke tests.
    pub fn quick() -> Self {
        Self {
            event_m_reps: 200,
            event_m_budget: 12_000,
            event_m_h_check: 6,
            near_optimal_seeds: 2_000,
            running_max_seeds: 2_000,
            running_max_depth: 10,
            running_max_ks: 0.05,
            bridge_seeds: 1_000,
            bridge_depth: 10,
            meander_seeds: 2_000,
            meander_depth: 10,
            event_t_seeds: 500,
            fano_batches: 2,
            fano_batch: 100,
            fano_pass_fraction: 0.5,
            conformance_runs: 5,
            conformance_budget: 2_000,
            gap_seeds: 2_000,
            gap_depth: 10,
            ..Self::default()
        }
    }

    fn seed_family(&self, check: Check) -> u64 {
        stream_key(&[self.base_seed, check as u64])
    }
}

/// Runs the configured checks in order.
pub fn run_lemma_suite(config: &SuiteConfig) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for &check in &config.checks {
        let base = config.seed_family(check);
        match check {
            Check::EventM => event_m_rows(config, base, &mut rows)?,
            Check::NearOptimal => near_optimal_rows(config, base, &mut rows)?,
            Check::RunningMax => {
                let d = running_max_ks(config.running_max_seeds, config.running_max_depth, base)?;
                rows.push(CheckRow::exact("running_max.ks", Side::AtMost, config.running_max_ks, d));
            }
            Check::BridgeMax => {
                for (i, &case) in config.bridge_cases.iter().enumerate() {
                    let p = bridge_exceedance(case, config.bridge_seeds, config.bridge_depth, base + i as u64)?;
                    rows.push(proportion_row(format!("bridge_max.case{i}"), Side::AtMost, case.bound()?, p));
                }
            }
            Check::Meander => {
                let report = meander_checks(
                    &config.meander_max_cases,
                    &config.meander_min_cases,
                    config.meander_seeds,
                    config.meander_depth,
                    base,
                )?;
                for (i, (case, p)) in report.max_cases.iter().enumerate() {
                    let branch = if case.long_horizon() { "long" } else { "short" };
                    rows.push(proportion_row(format!("meander_max.{branch}.case{i}"), Side::AtLeast, case.bound(), *p));
                }
                for (i, (case, p)) in report.min_cases.iter().enumerate() {
                    rows.push(proportion_row(format!("meander_min.case{i}"), Side::AtLeast, case.bound(), *p));
                }
            }
            Check::EventT => event_t_rows(config, base, &mut rows)?,
            Check::Fano => fano_rows(config, base, &mut rows)?,
            Check::Conformance => conformance_rows(config, base, &mut rows)?,
            Check::GapBound => {
                let ranges = (0..config.gap_seeds)
                    .into_par_iter()
                    .map(|i| Ok(Path::standard(sample_seed(base, i)).grid(config.gap_depth)?.range()))
                    .collect::<Result<Vec<f64>>>()?;
                let r = check_gap_bound(&ranges, &config.gap_quantiles);
                rows.push(CheckRow::exact("gap_bound.growth_slope.lower", Side::AtLeast, 0.8, r.growth_slope));
                rows.push(CheckRow::exact("gap_bound.growth_slope.upper", Side::AtMost, 1.2, r.growth_slope));
            }
        }
    }
    Ok(rows)
}

fn proportion_row(name: String, side: Side, bound: f64, p: Proportion) -> CheckRow {
    CheckRow::new(name, side, bound, p.estimate(), p.se())
}

fn event_m_rows(config: &SuiteConfig, base: u64, rows: &mut Vec<CheckRow>) -> Result<()> {
    let delta = config.event_m_delta;
    let alg = EpochUcb::with_delta(Some(delta));
    let outcomes = (0..config.event_m_reps)
        .into_par_iter()
        .map(|i| {
            let seed = sample_seed(base, i);
            let path = Path::standard(seed);
            let grid = path.grid(config.event_m_resolution)?;
            let mut oracle = NoisyOracle::new(path, config.event_m_sigma2, config.event_m_budget, seed)?;
            let trace = alg.optimize(&mut oracle)?;
            let r = check_event_m_on_grid(&grid, &trace, delta, config.event_m_h_check)?;
            Ok((r.m(), r.epochs_checked > config.event_m_h_check))
        })
        .collect::<Result<Vec<(bool, bool)>>>()?;
    let n = outcomes.len() as u64;
    let fails = outcomes.iter().filter(|o| !o.0).count() as u64;
    let deep = outcomes.iter().filter(|o| o.1).count() as u64;
    rows.push(proportion_row("event_m.failure".into(), Side::AtMost, delta * delta, Proportion::new(fails, n)));
    // Runs that stop short of the check depth are certified on fewer
    // epochs; report how many reached it.
    rows.push(CheckRow::exact(
        "event_m.runs_reaching_check_depth",
        Side::AtLeast,
        0.0,
        deep as f64 / n as f64,
    ));
    Ok(())
}

fn near_optimal_rows(config: &SuiteConfig, base: u64, rows: &mut Vec<CheckRow>) -> Result<()> {
    for &(depth, gap) in &config.near_optimal_cases {
        let counts = (0..config.near_optimal_seeds)
            .into_par_iter()
            .map(|i| Ok(count_near_optimal(&Path::standard(sample_seed(base, i)), depth, gap)? as f64))
            .collect::<Result<Vec<f64>>>()?;
        let m = MeanEstimate::from_samples(&counts);
        rows.push(CheckRow::new(
            format!("near_optimal.h{depth}.gap{gap}"),
            Side::AtMost,
            near_optimal_bound(depth, gap),
            m.mean,
            m.se(),
        ));
    }
    Ok(())
}

/// `1 - 3 shift^eta - delta - shift`.
pub fn event_t_bound(shift: f64, delta: f64, eta_exponent: f64) -> f64 {
    1.0 - 3.0 * shift.powf(eta_exponent) - delta - shift
}

fn event_t_rows(config: &SuiteConfig, base: u64, rows: &mut Vec<CheckRow>) -> Result<()> {
    let shift = bmopt::DyadicPoint::new(config.event_t_shift_depth, 1)?;
    let hits = (0..config.event_t_seeds)
        .into_par_iter()
        .map(|i| {
            let pair = ShiftedPair::new(sample_seed(base, i), shift, config.event_t_grid_depth)?;
            Ok(u64::from(
                check_event_t(&pair, config.event_t_delta, config.event_t_grid_depth)?.certified(),
            ))
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();
    let bound = event_t_bound(shift.to_f64(), config.event_t_delta, config.event_t_eta_exponent);
    rows.push(proportion_row(
        "event_t.certified".into(),
        Side::AtLeast,
        bound,
        Proportion::new(hits, config.event_t_seeds),
    ));
    Ok(())
}

fn fano_rows(config: &SuiteConfig, base: u64, rows: &mut Vec<CheckRow>) -> Result<()> {
    let cfg = HypothesisConfig::scheduled(config.fano_budget, config.fano_sigma2)?;
    let policies = [
        PairPolicy::EpochUcb(EpochUcb::default()),
        PairPolicy::RandomSearch {
            depth: config.fano_random_depth,
        },
    ];
    let summaries = batched_summaries(&policies, &cfg, config.fano_batches, config.fano_batch, base)?;
    for (policy, batches) in policies.iter().zip(&summaries) {
        let ok = batches.iter().filter(|s| s.floor_respected()).count();
        rows.push(CheckRow::exact(
            format!("fano.{}.batches_above_floor", policy.name()),
            Side::AtLeast,
            config.fano_pass_fraction,
            ok as f64 / batches.len() as f64,
        ));
        let violations: usize = batches.iter().map(|s| s.cap_violations).sum();
        rows.push(CheckRow::exact(
            format!("fano.{}.information_cap_violations", policy.name()),
            Side::AtMost,
            0.0,
            violations as f64,
        ));
    }
    Ok(())
}

fn conformance_rows(config: &SuiteConfig, base: u64, rows: &mut Vec<CheckRow>) -> Result<()> {
    let alg = EpochUcb::default();
    let outcomes = (0..config.conformance_runs)
        .into_par_iter()
        .map(|i| {
            let seed = sample_seed(base, i);
            let path = Path::standard(seed);
            let noise = stream_key(&[seed, 1]);
            let mut lib_oracle = NoisyOracle::new(path.clone(), config.conformance_sigma2, config.conformance_budget, noise)?;
            let trace = alg.optimize(&mut lib_oracle)?;
            let mut ref_oracle = NoisyOracle::new(path.clone(), config.conformance_sigma2, config.conformance_budget, noise)?;
            let delta = trace.delta.expect("epoch runs record delta");
            let reference = reference_run(&mut ref_oracle, delta)?;
            let identical = reference.queries == trace.queries
                && reference.epochs_completed == trace.epochs_completed
                && reference.truncated == trace.truncated;

            let truth = Truth::new(&path, config.conformance_truth_depth)?;
            let m = check_event_m_on_grid(&truth.grid, &trace, delta, trace.deepest_epoch())?;
            let violations = if m.m() {
                Some(check_epoch_regret(&truth, &trace, delta)?.violations)
            } else {
                None
            };
            Ok((identical, violations))
        })
        .collect::<Result<Vec<(bool, Option<usize>)>>>()?;
    let n = outcomes.len() as f64;
    let identical = outcomes.iter().filter(|o| o.0).count() as f64;
    rows.push(CheckRow::exact("conformance.identical_traces", Side::AtLeast, 1.0, identical / n));
    let violations: usize = outcomes.iter().filter_map(|o| o.1).sum();
    rows.push(CheckRow::exact("conformance.epoch_regret_violations", Side::AtMost, 0.0, violations as f64));
    let certified = outcomes.iter().filter(|o| o.1.is_some()).count() as f64;
    rows.push(CheckRow::exact("conformance.certified_runs", Side::AtLeast, 0.0, certified / n));
    Ok(())
}
