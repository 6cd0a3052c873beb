//! Two-hypothesis construction used to lower-bound the simple regret.
//!
//! A single Brownian path `w` lives on `[-shift, 1 + shift]` with
//! `w(-shift) = 0`. The two candidate objectives on `[0, 1]` are
//! `plus(x) = w(x + shift) - w(shift)` and `minus(x) = w(x - shift)`. Both
//! reach the maximum `m` of `w` (shifted down by `w(shift)` for `plus`), so
//! the regret functions are `r_plus(x) = m - w(x + shift)` and
//! `r_minus(x) = m - w(x - shift)`, and `r_minus(x) = r_plus(x - 2 shift)`
//! holds exactly wherever both sides are defined.
//!
//! An algorithm that does not know which objective it faces must pay a
//! regret floor governed by how much information its queries carry about
//! the label.

use std::f64::consts::{LN_2, SQRT_2};

use bmopt::rng::{stream_key, tag, CounterRng};
use bmopt::{
    recommend, Domain, DyadicPath, DyadicPoint, EpochUcb, Error, NoisyOracle, Objective,
    Optimizer, PathGrid, QueryRecord, RandomSearch, RecommendMode, Result, Trace,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::stats::MeanEstimate;

/// Separation constant of the regret floor, `0.01 sqrt(2)`.
pub const C3: f64 = 0.01 * SQRT_2;

/// Continuity constant of the label-difference event: the 99th percentile
/// of `max |r_plus - r_minus| / sqrt(shift ln(1 / shift))` over 10^4 paths at
/// `shift = 2^-8` on the depth-14 grid. Recomputed by [`calibrate_c4`].
pub const C4: f64 = 2.741_222_271_208_329;

/// Parameters of [`calibrate_c4`] that produced [`C4`].
pub const C4_CALIBRATION: C4Calibration = C4Calibration {
    samples: 10_000,
    shift_depth: 8,
    grid_depth: 14,
    quantile: 0.99,
    base_seed: 0xc4,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Plus,
    Minus,
}

/// Equiprobable hidden label of pair `seed`.
pub fn draw_label(seed: u64) -> Label {
    if CounterRng::keyed(&[tag::LABEL, seed]).uniform() < 0.5 {
        Label::Plus
    } else {
        Label::Minus
    }
}

/// Shift `2^-k`: the largest power of two not above `c / (T ln T)`.
pub fn shift_schedule(budget: u64, c: f64) -> Result<DyadicPoint> {
    if budget < 3 || !(c > 0.0) {
        return Err(Error::InvalidParam(format!("shift schedule needs T >= 3 and c > 0, got T={budget}, c={c}")));
    }
    let target = c / (budget as f64 * (budget as f64).ln());
    let k = (-target.log2()).ceil().max(3.0) as u32;
    DyadicPoint::new(k, 1)
}

/// A path on the widened domain plus the hidden label.
#[derive(Debug, Clone)]
pub struct ShiftedPair {
    seed: u64,
    shift: DyadicPoint,
    label: Label,
    base: DyadicPath<f64>,
    grid: PathGrid,
    /// Grid index offset corresponding to `shift`.
    offset: usize,
    argmax: DyadicPoint,
    max: f64,
}

impl ShiftedPair {
    /// Builds the pair for `seed` and evaluates the base path on the
    /// depth-`truth_depth` grid.
    pub fn new(seed: u64, shift: DyadicPoint, truth_depth: u32) -> Result<Self> {
        if !(shift > DyadicPoint::ZERO && shift < DyadicPoint::new(2, 1)?) {
            return Err(Error::InvalidParam(format!("shift {shift} not in (0, 1/4)")));
        }
        if truth_depth < shift.depth() {
            return Err(Error::TruthTooShallow {
                truth_depth,
                needed: shift.depth(),
            });
        }
        let domain = Domain::extended(shift)?;
        let base = DyadicPath::new(seed, domain, 0.0)?;
        let grid = base.grid(truth_depth)?;
        let record = grid.max_record();
        let offset = shift.numerator_at(truth_depth).expect("shift on the grid") as usize;
        Ok(Self {
            seed,
            shift,
            label: draw_label(seed),
            base,
            grid,
            offset,
            argmax: record.argmax,
            max: record.value,
        })
    }

    /// Same as [`ShiftedPair::new`] for a float shift, which must be dyadic.
    pub fn from_f64(seed: u64, shift: f64, truth_depth: u32) -> Result<Self> {
        Self::new(seed, DyadicPoint::from_f64(shift)?, truth_depth)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn shift(&self) -> DyadicPoint {
        self.shift
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn truth_depth(&self) -> u32 {
        self.grid.depth()
    }

    /// Location and value of the maximum of the base path.
    pub fn max(&self) -> (DyadicPoint, f64) {
        (self.argmax, self.max)
    }

    /// Base path value, drawing it lazily below the grid resolution.
    pub fn base_value(&mut self, p: DyadicPoint) -> Result<f64> {
        match self.grid.get(p) {
            Some(v) => Ok(v),
            None => self.base.value(p),
        }
    }

    fn shifted(&mut self, x: DyadicPoint, label: Label) -> Result<f64> {
        match label {
            Label::Plus => self.base_value(x.checked_add(self.shift)?),
            Label::Minus => self.base_value(x.checked_sub(self.shift)?),
        }
    }

    /// Objective value under `label`.
    pub fn objective(&mut self, x: DyadicPoint, label: Label) -> Result<f64> {
        if !x.in_unit() {
            return Err(Error::OutsideDomain(x));
        }
        let v = self.shifted(x, label)?;
        Ok(match label {
            Label::Plus => v - self.base_value(self.shift)?,
            Label::Minus => v,
        })
    }

    /// Regret of `x` under `label`.
    pub fn regret(&mut self, x: DyadicPoint, label: Label) -> Result<f64> {
        Ok(self.max - self.shifted(x, label)?)
    }

    /// `(r_plus(x), r_minus(x))` from the grid at `x = i / 2^depth`.
    fn regrets_on_grid(&self, i: usize, stride: usize) -> (f64, f64) {
        let center = self.offset + i * stride;
        let v = self.grid.values();
        (self.max - v[center + self.offset], self.max - v[center - self.offset])
    }

    /// View of the objective under the hidden label.
    pub fn view(&mut self) -> ShiftedView<'_> {
        let label = self.label;
        ShiftedView { pair: self, label }
    }
}

/// The pair seen through one label, as an optimizer objective.
pub struct ShiftedView<'a> {
    pair: &'a mut ShiftedPair,
    label: Label,
}

impl Objective<f64> for ShiftedView<'_> {
    fn evaluate(&mut self, p: DyadicPoint) -> Result<f64> {
        self.pair.objective(p, self.label)
    }
}

/// Outcome of the three label-separation events on a finite grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventTReport {
    /// The maximiser lies in `(2 shift, 1 - 2 shift)`.
    pub t1: bool,
    /// No grid point is near-optimal under both labels.
    pub t2: bool,
    /// The two regret functions stay uniformly close.
    pub t3: bool,
    pub argmax: DyadicPoint,
    pub max: f64,
    /// `min_x max(r_plus, r_minus)` and where it is attained.
    pub separation: f64,
    pub separation_at: DyadicPoint,
    /// `max_x |r_plus - r_minus|` and where it is attained.
    pub divergence: f64,
    pub divergence_at: DyadicPoint,
    pub t2_level: f64,
    pub t3_level: f64,
    pub c3: f64,
    pub c4: f64,
    pub grid_depth: u32,
}

impl EventTReport {
    pub fn certified(&self) -> bool {
        self.t1 && self.t2 && self.t3
    }
}

/// `c3 delta^2 sqrt(shift)`.
pub fn separation_level(delta: f64, shift: f64) -> f64 {
    C3 * delta * delta * shift.sqrt()
}

/// `c4 sqrt(shift ln(1 / shift))`.
pub fn divergence_level(c4: f64, shift: f64) -> f64 {
    c4 * (shift * (1.0 / shift).ln()).sqrt()
}

/// Evaluates the three events over the depth-`grid_depth` points of
/// `[0, 1]`. A minimum over grid points can only overstate the separation,
/// so the grid version of the separation event certifies at least as often
/// as the continuum one.
pub fn check_event_t(pair: &ShiftedPair, delta: f64, grid_depth: u32) -> Result<EventTReport> {
    check_event_t_with(pair, delta, grid_depth, C4)
}

pub fn check_event_t_with(pair: &ShiftedPair, delta: f64, grid_depth: u32, c4: f64) -> Result<EventTReport> {
    if grid_depth < pair.shift.depth() || grid_depth > pair.truth_depth() {
        return Err(Error::InvalidParam(format!(
            "grid depth {grid_depth} must lie in [{}, {}]",
            pair.shift.depth(),
            pair.truth_depth()
        )));
    }
    let shift = pair.shift.to_f64();
    let stride = 1usize << (pair.truth_depth() - grid_depth);
    let mut separation = (f64::INFINITY, 0usize);
    let mut divergence = (0.0f64, 0usize);
    for i in 0..=(1usize << grid_depth) {
        let (rp, rm) = pair.regrets_on_grid(i, stride);
        let s = rp.max(rm);
        if s < separation.0 {
            separation = (s, i);
        }
        let d = (rp - rm).abs();
        if d > divergence.0 {
            divergence = (d, i);
        }
    }
    let at = |i: usize| DyadicPoint::new(grid_depth, i as u64);
    let two = pair.shift.checked_add(pair.shift)?;
    let t2_level = separation_level(delta, shift);
    let t3_level = divergence_level(c4, shift);
    Ok(EventTReport {
        t1: two < pair.argmax && pair.argmax < DyadicPoint::ONE.checked_sub(two)?,
        t2: separation.0 >= t2_level,
        t3: divergence.0 <= t3_level,
        argmax: pair.argmax,
        max: pair.max,
        separation: separation.0,
        separation_at: at(separation.1)?,
        divergence: divergence.0,
        divergence_at: at(divergence.1)?,
        t2_level,
        t3_level,
        c3: C3,
        c4,
        grid_depth,
    })
}

/// `sum_t (r_plus(x_t) - r_minus(x_t))^2 / (2 sigma2)`, the per-query
/// Gaussian divergence bound on the information the queries carry.
pub fn mi_surrogate(pair: &mut ShiftedPair, trace: &Trace, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidParam("information bound needs sigma2 > 0".into()));
    }
    let mut total = 0.0;
    for p in trace.points() {
        if !p.in_unit() {
            return Err(Error::OutsideDomain(p));
        }
        let d = pair.regret(p, Label::Plus)? - pair.regret(p, Label::Minus)?;
        total += d * d;
    }
    Ok(total / (2.0 * sigma2))
}

/// `T c4^2 shift ln(1 / shift) / (2 sigma2)`: the information cap implied by
/// the divergence event.
pub fn mi_cap(budget: u64, c4: f64, shift: f64, sigma2: f64) -> f64 {
    budget as f64 * divergence_level(c4, shift).powi(2) / (2.0 * sigma2)
}

/// Binary entropy in nats.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.ln() };
    term(p) + term(1.0 - p)
}

/// Inverse of [`binary_entropy`] on `[0, 1/2]`, by bisection to `1e-12`.
pub fn inverse_binary_entropy(h: f64) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    if h >= LN_2 {
        return 0.5;
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Regret floor `c3 delta^2 sqrt(shift) H2^-1(ln 2 - mi)`, clamped at zero.
pub fn fano_floor(mi: f64, delta: f64, shift: f64) -> f64 {
    separation_level(delta, shift) * inverse_binary_entropy((LN_2 - mi).max(0.0))
}

/// Query policies run against the hidden label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairPolicy {
    /// The epoch-based confidence-bound algorithm.
    EpochUcb(EpochUcb),
    /// Uniform draws from the depth-`depth` lattice.
    RandomSearch { depth: u32 },
    /// Told the label; queries the maximiser of the true objective.
    Genie,
}

impl PairPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            PairPolicy::EpochUcb(_) => "epoch-ucb",
            PairPolicy::RandomSearch { .. } => "random-search",
            PairPolicy::Genie => "genie",
        }
    }

    fn run(&self, pair: &mut ShiftedPair, sigma2: f64, budget: u64, seed: u64) -> Result<Trace> {
        let noise_seed = stream_key(&[tag::NOISE, seed]);
        match *self {
            PairPolicy::EpochUcb(alg) => {
                let mut oracle = NoisyOracle::new(pair.view(), sigma2, budget, noise_seed)?;
                alg.optimize(&mut oracle)
            }
            PairPolicy::RandomSearch { depth } => {
                let alg = RandomSearch {
                    depth,
                    seed: stream_key(&[tag::SEARCH, seed]),
                };
                let mut oracle = NoisyOracle::new(pair.view(), sigma2, budget, noise_seed)?;
                alg.optimize(&mut oracle)
            }
            PairPolicy::Genie => {
                let label = pair.label;
                let best = pair_argmax(pair, label)?;
                let queries = vec![
                    QueryRecord {
                        point: best,
                        epoch: None
                    };
                    budget as usize
                ];
                Ok(Trace::flat(queries, budget))
            }
        }
    }
}

/// Grid maximiser of the objective under `label` over `[0, 1]`.
fn pair_argmax(pair: &ShiftedPair, label: Label) -> Result<DyadicPoint> {
    let depth = pair.truth_depth();
    let v = pair.grid.values();
    let n = 1usize << depth;
    let mut best = (f64::NEG_INFINITY, 0usize);
    for i in 0..=n {
        let center = pair.offset + i;
        let value = match label {
            Label::Plus => v[center + pair.offset],
            Label::Minus => v[center - pair.offset],
        };
        if value > best.0 {
            best = (value, i);
        }
    }
    DyadicPoint::new(depth, best.1 as u64)
}

/// Settings of one hypothesis-testing experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisConfig {
    pub shift: DyadicPoint,
    pub sigma2: f64,
    pub budget: u64,
    /// Confidence parameter of the separation event.
    pub delta: f64,
    pub truth_depth: u32,
    pub grid_depth: u32,
}

impl HypothesisConfig {
    /// Shift from the schedule with `c = 1`, grids two levels finer than the
    /// shift and `delta = 1/2`.
    pub fn scheduled(budget: u64, sigma2: f64) -> Result<Self> {
        let shift = shift_schedule(budget, 1.0)?;
        Ok(Self {
            shift,
            sigma2,
            budget,
            delta: 0.5,
            truth_depth: shift.depth() + 2,
            grid_depth: shift.depth() + 2,
        })
    }
}

/// One realisation of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairRun {
    pub seed: u64,
    pub label: Label,
    pub certified: bool,
    pub simple_regret: f64,
    pub mi: f64,
    /// Information cap respected (always true when certified).
    pub within_cap: bool,
}

/// Aggregate over the certified realisations of a batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisSummary {
    pub policy: &'static str,
    pub seeds: usize,
    pub certified: usize,
    pub simple_regret: MeanEstimate,
    pub mean_mi: f64,
    /// Regret floor at the mean information of the certified runs.
    pub floor: f64,
    pub cap_violations: usize,
}

impl HypothesisSummary {
    pub fn floor_respected(&self) -> bool {
        self.simple_regret.mean >= self.floor
    }
}

fn summarize(policy: &'static str, runs: &[PairRun], cfg: &HypothesisConfig) -> HypothesisSummary {
    let certified: Vec<&PairRun> = runs.iter().filter(|r| r.certified).collect();
    let regrets: Vec<f64> = certified.iter().map(|r| r.simple_regret).collect();
    let mean_mi = certified.iter().map(|r| r.mi).sum::<f64>() / certified.len().max(1) as f64;
    HypothesisSummary {
        policy,
        seeds: runs.len(),
        certified: certified.len(),
        simple_regret: MeanEstimate::from_samples(&regrets),
        mean_mi,
        floor: fano_floor(mean_mi, cfg.delta, cfg.shift.to_f64()),
        cap_violations: certified.iter().filter(|r| !r.within_cap).count(),
    }
}

/// Runs every policy on the pairs of `seeds`, sharing each pair between the
/// policies. Returns the per-policy runs in seed order.
pub fn run_pairs(
    policies: &[PairPolicy],
    cfg: &HypothesisConfig,
    seeds: std::ops::Range<u64>,
) -> Result<Vec<Vec<PairRun>>> {
    let shift = cfg.shift.to_f64();
    let cap = mi_cap(cfg.budget, C4, shift, cfg.sigma2);
    let per_seed = seeds
        .into_par_iter()
        .map(|seed| {
            let mut pair = ShiftedPair::new(seed, cfg.shift, cfg.truth_depth)?;
            let certified = check_event_t(&pair, cfg.delta, cfg.grid_depth)?.certified();
            policies
                .iter()
                .map(|policy| {
                    let trace = policy.run(&mut pair, cfg.sigma2, cfg.budget, seed)?;
                    let key = stream_key(&[tag::RECOMMEND, seed]);
                    let rec = recommend(&trace, key, RecommendMode::Multiset)?;
                    let mi = mi_surrogate(&mut pair, &trace, cfg.sigma2)?;
                    Ok(PairRun {
                        seed,
                        label: pair.label,
                        certified,
                        simple_regret: pair.regret(rec, pair.label)?,
                        mi,
                        within_cap: mi <= cap * (1.0 + 1e-12),
                    })
                })
                .collect::<Result<Vec<PairRun>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..policies.len())
        .map(|j| per_seed.iter().map(|runs| runs[j]).collect())
        .collect())
}

/// Mean simple regret of `policy` over the certified pairs of `seeds`,
/// against the regret floor at their mean information.
pub fn hypothesis_test_regret(
    policy: PairPolicy,
    cfg: &HypothesisConfig,
    seeds: std::ops::Range<u64>,
) -> Result<HypothesisSummary> {
    let runs = run_pairs(&[policy], cfg, seeds)?;
    Ok(summarize(policy.name(), &runs[0], cfg))
}

/// Splits the runs of several policies into batches of `batch` seeds and
/// summarizes each batch.
pub fn batched_summaries(
    policies: &[PairPolicy],
    cfg: &HypothesisConfig,
    batches: u64,
    batch: u64,
    base_seed: u64,
) -> Result<Vec<Vec<HypothesisSummary>>> {
    let start = base_seed;
    let runs = run_pairs(policies, cfg, start..start + batches * batch)?;
    Ok(policies
        .iter()
        .zip(&runs)
        .map(|(p, r)| {
            r.chunks(batch as usize)
                .map(|chunk| summarize(p.name(), chunk, cfg))
                .collect()
        })
        .collect())
}

/// Where a calibrated divergence constant comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct C4Calibration {
    pub samples: u64,
    pub shift_depth: u32,
    pub grid_depth: u32,
    pub quantile: f64,
    pub base_seed: u64,
}

/// Smallest constant for which the divergence event holds on a
/// `quantile` fraction of the sampled paths.
pub fn calibrate_c4(cal: &C4Calibration) -> Result<f64> {
    let shift = DyadicPoint::new(cal.shift_depth, 1)?;
    let scale = divergence_level(1.0, shift.to_f64());
    let mut ratios = (0..cal.samples)
        .into_par_iter()
        .map(|i| {
            let pair = ShiftedPair::new(stream_key(&[cal.base_seed, i]), shift, cal.grid_depth)?;
            let r = check_event_t_with(&pair, 0.5, cal.grid_depth, 1.0)?;
            Ok(r.divergence / scale)
        })
        .collect::<Result<Vec<f64>>>()?;
    ratios.sort_by(f64::total_cmp);
    let idx = ((cal.quantile * cal.samples as f64).ceil() as usize).clamp(1, ratios.len()) - 1;
    Ok(ratios[idx])
}
