//! Monte Carlo checks of the lab estimators against independent samplers
//! and closed-form bounds.

use bmopt::Path;
use bmopt_lab::counting::{check_gap_bound, count_near_optimal, near_optimal_bound};
use bmopt_lab::distribution::{running_max_ks, sample_seed};
use bmopt_lab::MeanEstimate;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

const DEPTH: u32 = 14;

fn lab_ranges(n: u64, base: u64) -> Vec<f64> {
    (0..n)
        .map(|i| Path::standard(sample_seed(base, i)).grid(DEPTH).unwrap().range())
        .collect()
}

/// Range of a Gaussian random walk with `2^DEPTH` steps of variance
/// `2^-DEPTH`, drawn forward in time with an unrelated generator.
fn walk_range(rng: &mut StdRng) -> f64 {
    let steps = 1usize << DEPTH;
    let sd = (1.0 / steps as f64).sqrt();
    let (mut w, mut lo, mut hi) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        w += sd * z;
        lo = lo.min(w);
        hi = hi.max(w);
    }
    hi - lo
}

#[test]
fn gap_mean_matches_a_forward_random_walk() {
    let n = 20_000;
    let lab = MeanEstimate::from_samples(&lab_ranges(n, 7));
    let mut rng = StdRng::seed_from_u64(99);
    let walk: Vec<f64> = (0..n).map(|_| walk_range(&mut rng)).collect();
    let walk = MeanEstimate::from_samples(&walk);
    assert!(
        (lab.mean / walk.mean - 1.0).abs() < 0.03,
        "lab {} vs walk {}",
        lab.mean,
        walk.mean
    );
    // The continuum value 2 sqrt(2 / pi) sits just above both.
    let continuum = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
    assert!(lab.mean < continuum && lab.mean > continuum - 0.05);
}

#[test]
fn gap_grows_like_root_log_of_tail_probability() {
    let ranges = lab_ranges(20_000, 8);
    let r = check_gap_bound(&ranges, &[0.5, 0.9, 0.99]);
    assert!(
        (0.8..=1.2).contains(&r.growth_slope),
        "affine slope {}",
        r.growth_slope
    );
    assert!(r.levels.windows(2).all(|w| w[0].conditional.mean < w[1].conditional.mean));
}

#[test]
fn near_optimal_count_at_depth_six() {
    let n = 100_000;
    let counts: Vec<f64> = (0..n)
        .map(|i| count_near_optimal(&Path::standard(sample_seed(3, i)), 6, 0.1).unwrap() as f64)
        .collect();
    let m = MeanEstimate::from_samples(&counts);
    let bound = near_optimal_bound(6, 0.1);
    assert!(m.mean <= bound + 3.0 * m.se(), "{} > {bound}", m.mean);
}

#[test]
fn grid_maximum_follows_the_reflection_law() {
    // Depth 12 keeps the one-sided discretisation bias near 0.007.
    let d = running_max_ks(20_000, 12, 5).unwrap();
    assert!(d < 0.02, "KS {d}");
}
