//! Monte Carlo checks of the Gaussian laws behind the lazy path.

use bmopt::{eta, Domain, DyadicPath, DyadicPoint, Path};
use statrs::distribution::{ContinuousCDF, Normal};

fn pt(h: u32, k: u64) -> DyadicPoint {
    DyadicPoint::new(h, k).unwrap()
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

fn ks_normal(mut xs: Vec<f64>) -> f64 {
    let std = Normal::standard();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = std.cdf(x);
            (f - i as f64 / n).abs().max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

#[test]
fn endpoint_is_standard_normal() {
    let xs: Vec<f64> = (0..100_000u64)
        .map(|s| Path::standard(s).peek(DyadicPoint::ONE).unwrap())
        .collect();
    let (m, v) = mean_var(&xs);
    assert!(m.abs() < 0.02, "mean {m}");
    assert!((v - 1.0).abs() < 0.03, "variance {v}");
}

#[test]
fn unit_midpoint_has_quarter_bridge_variance() {
    let xs: Vec<f64> = (0..100_000u64)
        .map(|s| {
            let mut p = Path::standard(s);
            let w1 = p.value(DyadicPoint::ONE).unwrap();
            p.value(pt(1, 1)).unwrap() - w1 / 2.0
        })
        .collect();
    let (m, v) = mean_var(&xs);
    assert!(m.abs() < 0.01, "mean {m}");
    assert!((v / 0.25 - 1.0).abs() < 0.02, "variance {v}");
}

#[test]
fn bridge_mean_is_linear_interpolation() {
    let domain = Domain::unit();
    let xs: Vec<f64> = (0..20_000u64)
        .map(|s| {
            DyadicPath::<f64>::bridge(s, domain, 2.0, 4.0)
                .value(pt(1, 1))
                .unwrap()
        })
        .collect();
    let (m, v) = mean_var(&xs);
    assert!((m - 3.0).abs() < 0.015, "mean {m}");
    assert!((v / 0.25 - 1.0).abs() < 0.05, "variance {v}");
}

#[test]
fn deep_bridge_residuals_are_normal() {
    // Midpoint 5/16 of [1/4, 3/8], standardized by sqrt((r - l) / 4).
    let (l, mid, r) = (pt(2, 1), pt(4, 5), pt(3, 3));
    let scale = (0.125f64 / 4.0).sqrt();
    let z: Vec<f64> = (0..20_000u64)
        .map(|s| {
            let mut p = Path::standard(s);
            let wm = p.value(mid).unwrap();
            let (wl, wr) = (p.value(l).unwrap(), p.value(r).unwrap());
            (wm - (wl + wr) / 2.0) / scale
        })
        .collect();
    let d = ks_normal(z);
    assert!(d < 0.02, "KS statistic {d}");
}

#[test]
fn running_max_rarely_exceeds_eta_envelope() {
    // sup over [a, b] above max(W_a, W_b) + eta(b - a) at most (delta (b - a))^5
    // of the time. Checked on the depth-10 grid for a few intervals.
    let seeds = 10_000u64;
    let delta = 0.9;
    for (a, b) in [(pt(0, 0), pt(0, 1)), (pt(1, 0), pt(1, 1)), (pt(3, 3), pt(2, 2))] {
        let len = b.to_f64() - a.to_f64();
        let slack = eta(len, delta).unwrap();
        let hits = (0..seeds)
            .filter(|&s| {
                let g = Path::standard(s).grid(10).unwrap();
                let (ia, ib) = (g.index_of(a).unwrap(), g.index_of(b).unwrap());
                let ends = g.values()[ia].max(g.values()[ib]);
                g.max_in(ia..=ib) > ends + slack
            })
            .count();
        let p = hits as f64 / seeds as f64;
        let bound = (delta * len).powi(5);
        let se = (bound * (1.0 - bound) / seeds as f64).sqrt();
        assert!(p <= bound + 3.0 * se, "[{a}, {b}]: {p} > {bound}");
    }
}

#[test]
fn extended_domain_anchor_and_endpoint_law() {
    let margin = pt(4, 1);
    let domain = Domain::extended(margin).unwrap();
    let len = domain.length();
    let xs: Vec<f64> = (0..50_000u64)
        .map(|s| {
            let p = DyadicPath::<f64>::new(s, domain, 0.0).unwrap();
            assert_eq!(p.peek(domain.lo()), Some(0.0));
            p.peek(domain.hi()).unwrap()
        })
        .collect();
    let (m, v) = mean_var(&xs);
    assert!(m.abs() < 0.03);
    assert!((v / len - 1.0).abs() < 0.04, "variance {v} vs {len}");
}
