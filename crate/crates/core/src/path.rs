//! Lazily refined Brownian paths on the dyadic rationals.
//!
//! A path is fixed by its seed and domain `[lo, hi]`. The left endpoint
//! carries the anchor value, the right endpoint is `anchor + N(0, hi - lo)`,
//! and every interior point `p` is drawn from the Brownian bridge between its
//! two structural parents:
//!
//! * a point of canonical depth `h >= 1` with index `k` has parents
//!   `(k - 1) / 2^h` and `(k + 1) / 2^h`, clipped to the domain;
//! * an interior integer `n` has parents `max(lo, n - 1)` and `hi`.
//!
//! The parents of a point are exactly its nearest neighbours among the points
//! generated before it (coarser levels, or smaller integers), so by the Markov
//! property the construction yields the exact finite-dimensional law of
//! Brownian motion. Each draw uses a stream keyed only by the seed, the domain
//! and the point itself, which makes every value independent of query order.

use std::collections::HashMap;

use serde::Serialize;

use crate::dyadic::DyadicPoint;
use crate::error::{Error, Result};
use crate::rng::{keyed_normal, stream_key, tag};
use crate::scalar::Scalar;

/// Deepest dense grid we are willing to allocate (`2^24 + 1` values).
pub const MAX_GRID_DEPTH: u32 = 24;

/// Closed dyadic interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Domain {
    lo: DyadicPoint,
    hi: DyadicPoint,
}

impl Domain {
    pub fn new(lo: DyadicPoint, hi: DyadicPoint) -> Result<Self> {
        if lo >= hi {
            return Err(Error::InvalidDomain(format!("[{lo}, {hi}] is empty or degenerate")));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self {
            lo: DyadicPoint::ZERO,
            hi: DyadicPoint::ONE,
        }
    }

    /// `[-margin, 1 + margin]`.
    pub fn extended(margin: DyadicPoint) -> Result<Self> {
        Self::new(
            DyadicPoint::ZERO.checked_sub(margin)?,
            DyadicPoint::ONE.checked_add(margin)?,
        )
    }

    #[inline]
    pub fn lo(&self) -> DyadicPoint {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> DyadicPoint {
        self.hi
    }

    #[inline]
    pub fn contains(&self, p: DyadicPoint) -> bool {
        self.lo <= p && p <= self.hi
    }

    pub fn length(&self) -> f64 {
        self.lo.distance_to(self.hi)
    }

    fn key(&self, seed: u64, stream: u64) -> u64 {
        stream_key(&[
            seed,
            stream,
            self.lo.depth() as u64,
            self.lo.index() as u64,
            self.hi.depth() as u64,
            self.hi.index() as u64,
        ])
    }

    /// Structural parents of an interior point.
    fn parents(&self, p: DyadicPoint) -> (DyadicPoint, DyadicPoint) {
        let h = p.depth();
        if h == 0 {
            let prev = DyadicPoint::lattice(0, p.index() - 1).expect("integer lattice point");
            (prev.max(self.lo), self.hi)
        } else {
            let l = DyadicPoint::lattice(h, p.index() - 1).expect("lattice point");
            let r = DyadicPoint::lattice(h, p.index() + 1).expect("lattice point");
            (l.max(self.lo), r.min(self.hi))
        }
    }
}

/// Bridge draw at `p` given the parent values.
///
/// `left = p - l` and `right = r - p` are numerators at a common `depth`.
/// Scaling all three numerators by a power of two leaves every rounded
/// intermediate scaled by the same power, so the lazy and dense code paths
/// (which use different common depths) produce bit-identical values.
#[inline]
fn refine<S: Scalar>(
    node_key: u64,
    p: DyadicPoint,
    left: i128,
    right: i128,
    depth: u32,
    wl: S,
    wr: S,
) -> S {
    let span = (left + right) as f64;
    let t = left as f64 / span;
    let var = (left * right) as f64 / span / (1u64 << depth) as f64;
    let z = keyed_normal(&[node_key, p.depth() as u64, p.index() as u64]);
    wl + (wr - wl) * S::lit(t) + S::lit(var.sqrt() * z)
}

/// A Brownian path over a dyadic domain, materialized on demand.
///
/// Values are cached once drawn. A path instance is not shared across
/// threads; distinct paths are fully independent.
#[derive(Debug, Clone)]
pub struct DyadicPath<S> {
    seed: u64,
    domain: Domain,
    anchor: S,
    right: S,
    node_key: u64,
    values: HashMap<DyadicPoint, S>,
}

impl<S: Scalar> DyadicPath<S> {
    /// Brownian motion started at `anchor` on the left end of `domain`.
    pub fn new(seed: u64, domain: Domain, anchor: S) -> Result<Self> {
        let z = keyed_normal(&[domain.key(seed, tag::PATH_ENDPOINT)]);
        let right = anchor + S::lit(domain.length().sqrt() * z);
        Ok(Self::with_endpoints(seed, domain, anchor, right))
    }

    /// Standard Brownian motion on `[0, 1]` with `W_0 = 0`.
    pub fn standard(seed: u64) -> Self {
        Self::new(seed, Domain::unit(), S::zero()).expect("unit domain is valid")
    }

    /// Brownian bridge pinned to `left` and `right` at the domain ends.
    pub fn bridge(seed: u64, domain: Domain, left: S, right: S) -> Self {
        Self::with_endpoints(seed, domain, left, right)
    }

    fn with_endpoints(seed: u64, domain: Domain, anchor: S, right: S) -> Self {
        Self {
            seed,
            domain,
            anchor,
            right,
            node_key: domain.key(seed, tag::PATH_NODE),
            values: HashMap::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn anchor(&self) -> S {
        self.anchor
    }

    /// Number of interior points drawn so far.
    pub fn materialized(&self) -> usize {
        self.values.len()
    }

    /// Value already drawn at `p`, if any.
    pub fn peek(&self, p: DyadicPoint) -> Option<S> {
        if p == self.domain.lo {
            Some(self.anchor)
        } else if p == self.domain.hi {
            Some(self.right)
        } else {
            self.values.get(&p).copied()
        }
    }

    /// Path value at `p`, drawing it (and any missing ancestors) if needed.
    pub fn value(&mut self, p: DyadicPoint) -> Result<S> {
        if !self.domain.contains(p) {
            return Err(Error::OutsideDomain(p));
        }
        Ok(self.materialize(p))
    }

    fn materialize(&mut self, p: DyadicPoint) -> S {
        if let Some(v) = self.peek(p) {
            return v;
        }
        let (l, r) = self.domain.parents(p);
        let wl = self.materialize(l);
        let wr = self.materialize(r);
        let depth = p.depth().max(l.depth()).max(r.depth());
        let pn = p.numerator_at(depth).expect("common depth") as i128;
        let ln = l.numerator_at(depth).expect("common depth") as i128;
        let rn = r.numerator_at(depth).expect("common depth") as i128;
        let v = refine(self.node_key, p, pn - ln, rn - pn, depth, wl, wr);
        self.values.insert(p, v);
        v
    }

    /// Dense evaluation of every depth-`depth` lattice point in the domain.
    ///
    /// Uses the same keyed streams as [`DyadicPath::value`], so the grid
    /// agrees exactly with lazily drawn values.
    pub fn grid(&self, depth: u32) -> Result<Grid<S>> {
        if depth > MAX_GRID_DEPTH {
            return Err(Error::DepthCap {
                requested: depth,
                cap: MAX_GRID_DEPTH,
            });
        }
        let (lo, hi) = (self.domain.lo, self.domain.hi);
        let (ga, gb) = match (lo.numerator_at(depth), hi.numerator_at(depth)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::InvalidParam(format!(
                    "grid depth {depth} does not resolve the domain endpoints"
                )))
            }
        };
        let n = (gb - ga) as usize;
        if n > (1usize << MAX_GRID_DEPTH) * 4 {
            return Err(Error::DepthCap {
                requested: depth,
                cap: MAX_GRID_DEPTH,
            });
        }
        let mut vals = vec![S::zero(); n + 1];
        vals[0] = self.anchor;
        vals[n] = self.right;
        let at = |g: i64| (g - ga) as usize;

        // Interior integers, left to right.
        let unit = 1i64 << depth;
        let mut g = (ga.div_euclid(unit) + 1) * unit;
        while g < gb {
            let l = (g - unit).max(ga);
            let p = DyadicPoint::lattice(0, g / unit).expect("integer lattice point");
            vals[at(g)] = refine(
                self.node_key,
                p,
                (g - l) as i128,
                (gb - g) as i128,
                depth,
                vals[at(l)],
                vals[n],
            );
            g += unit;
        }

        for h in 1..=depth {
            let s = 1i64 << (depth - h);
            let mut k = ga.div_euclid(s) + 1;
            if k % 2 == 0 {
                k += 1;
            }
            while k * s < gb {
                let g = k * s;
                let l = (g - s).max(ga);
                let r = (g + s).min(gb);
                let p = DyadicPoint::lattice(h, k).expect("odd lattice point");
                vals[at(g)] = refine(
                    self.node_key,
                    p,
                    (g - l) as i128,
                    (r - g) as i128,
                    depth,
                    vals[at(l)],
                    vals[at(r)],
                );
                k += 2;
            }
        }
        Ok(Grid {
            depth,
            start: ga,
            values: vals,
        })
    }

    /// Maximum over the depth-`truth_depth` grid.
    pub fn max_record(&self, truth_depth: u32) -> Result<MaxRecord<S>> {
        if truth_depth == 0 {
            return Err(Error::InvalidParam("truth depth must be at least 1".into()));
        }
        Ok(self.grid(truth_depth)?.max_record())
    }
}

/// Path values on every lattice point of one depth, left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<S> {
    depth: u32,
    start: i64,
    values: Vec<S>,
}

impl<S: Scalar> Grid<S> {
    /// Grid from explicit values starting at numerator `start`.
    pub fn from_values(depth: u32, start: i64, values: Vec<S>) -> Result<Self> {
        if values.is_empty() || depth > MAX_GRID_DEPTH {
            return Err(Error::InvalidParam("empty or too deep grid".into()));
        }
        Ok(Self {
            depth,
            start,
            values,
        })
    }

    #[inline]
    pub fn depth(&self) -> u32 {
        self.depth
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// Numerator (at the grid depth) of the first point.
    #[inline]
    pub fn start(&self) -> i64 {
        self.start
    }

    #[inline]
    pub fn index_of(&self, p: DyadicPoint) -> Option<usize> {
        let g = p.numerator_at(self.depth)?;
        let i = g.checked_sub(self.start)?;
        (i >= 0 && (i as usize) < self.values.len()).then_some(i as usize)
    }

    #[inline]
    pub fn get(&self, p: DyadicPoint) -> Option<S> {
        self.index_of(p).map(|i| self.values[i])
    }

    pub fn point(&self, i: usize) -> DyadicPoint {
        DyadicPoint::lattice(self.depth, self.start + i as i64).expect("grid point")
    }

    /// Leftmost maximum over `range` of indices.
    pub fn argmax_in(&self, range: std::ops::RangeInclusive<usize>) -> (usize, S) {
        let start = *range.start();
        self.values[range]
            .iter()
            .enumerate()
            .fold((start, S::neg_infinity()), |(bi, bv), (i, &v)| {
                if v > bv {
                    (start + i, v)
                } else {
                    (bi, bv)
                }
            })
    }

    pub fn min_in(&self, range: std::ops::RangeInclusive<usize>) -> S {
        self.values[range]
            .iter()
            .fold(S::infinity(), |m, &v| if v < m { v } else { m })
    }

    pub fn max_in(&self, range: std::ops::RangeInclusive<usize>) -> S {
        self.argmax_in(range).1
    }

    pub fn max_record(&self) -> MaxRecord<S> {
        let (i, value) = self.argmax_in(0..=self.values.len() - 1);
        MaxRecord {
            argmax: self.point(i),
            value,
            truth_depth: self.depth,
        }
    }

    /// Largest minus smallest value.
    pub fn range(&self) -> S {
        let last = self.values.len() - 1;
        self.max_in(0..=last) - self.min_in(0..=last)
    }
}

/// Discretized maximum of a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxRecord<S> {
    pub argmax: DyadicPoint,
    pub value: S,
    pub truth_depth: u32,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(h: u32, k: u64) -> DyadicPoint {
        DyadicPoint::new(h, k).unwrap()
    }

    #[test]
    fn anchor_is_exact() {
        let mut p = DyadicPath::<f64>::standard(7);
        assert_eq!(p.value(DyadicPoint::ZERO).unwrap(), 0.0);
        let mut q = DyadicPath::<f64>::new(7, Domain::unit(), 1.25).unwrap();
        assert_eq!(q.value(DyadicPoint::ZERO).unwrap(), 1.25);
    }

    #[test]
    fn degenerate_domain_rejected() {
        assert!(Domain::new(DyadicPoint::ONE, DyadicPoint::ONE).is_err());
        assert!(Domain::new(DyadicPoint::ONE, DyadicPoint::ZERO).is_err());
    }

    #[test]
    fn outside_domain_rejected() {
        let mut p = DyadicPath::<f64>::standard(1);
        let out = DyadicPoint::lattice(1, 3).unwrap();
        assert_eq!(p.value(out), Err(Error::OutsideDomain(out)));
    }

    #[test]
    fn deterministic_per_seed() {
        let mut a = DyadicPath::<f64>::standard(7);
        let mut b = DyadicPath::<f64>::standard(7);
        for k in 0..=64 {
            assert_eq!(a.value(pt(6, k)).unwrap(), b.value(pt(6, k)).unwrap());
        }
        let mut c = DyadicPath::<f64>::standard(8);
        assert_ne!(a.value(DyadicPoint::ONE).unwrap(), c.value(DyadicPoint::ONE).unwrap());
    }

    #[test]
    fn query_order_is_irrelevant() {
        let mut a = DyadicPath::<f64>::standard(3);
        let mut b = DyadicPath::<f64>::standard(3);
        let half = a.value(pt(1, 1)).unwrap();
        let quarter = a.value(pt(2, 1)).unwrap();
        let quarter_b = b.value(pt(2, 1)).unwrap();
        let half_b = b.value(pt(1, 1)).unwrap();
        assert_eq!((half, quarter), (half_b, quarter_b));
    }

    #[test]
    fn ancestors_are_materialized() {
        let mut p = DyadicPath::<f64>::standard(11);
        p.value(pt(5, 7)).unwrap();
        for q in [pt(1, 1), pt(2, 1), pt(3, 1), pt(4, 3), pt(5, 7)] {
            assert!(p.peek(q).is_some(), "{q} missing");
        }
        assert_eq!(p.materialized(), 5);
    }

    #[test]
    fn grid_depth_capped() {
        let p = DyadicPath::<f64>::standard(1);
        assert!(matches!(p.grid(MAX_GRID_DEPTH + 1), Err(Error::DepthCap { .. })));
        assert!(p.max_record(0).is_err());
    }

    #[test]
    fn refinement_never_lowers_max() {
        for seed in 0..50 {
            let p = DyadicPath::<f64>::standard(seed);
            let mut prev = f64::NEG_INFINITY;
            for d in 1..=12 {
                let m = p.max_record(d).unwrap();
                assert!(m.value >= prev);
                prev = m.value;
            }
        }
    }

    #[test]
    fn spike_is_the_argmax() {
        let mut vals = vec![-0.5f64; 17];
        vals[0] = 0.0;
        vals[11] = 2.0;
        let g = Grid::from_values(4, 0, vals).unwrap();
        let m = g.max_record();
        assert_eq!(m.argmax, pt(4, 11));
        assert_eq!(m.value, 2.0);
    }

    #[test]
    fn f32_paths_follow_the_same_streams() {
        let mut a = DyadicPath::<f32>::standard(5);
        let mut b = DyadicPath::<f64>::standard(5);
        for k in 0..=16 {
            let x = a.value(pt(4, k)).unwrap() as f64;
            let y = b.value(pt(4, k)).unwrap();
            assert!((x - y).abs() < 1e-4);
        }
    }

    #[test]
    fn extended_domain_grid_matches_lazy() {
        let delta = DyadicPoint::new(6, 1).unwrap();
        let dom = Domain::extended(delta).unwrap();
        let mut lazy = DyadicPath::<f64>::new(9, dom, 0.0).unwrap();
        let grid = lazy.grid(8).unwrap();
        assert_eq!(grid.len(), 256 + 2 * 4 + 1);
        for i in (0..grid.len()).rev() {
            let p = grid.point(i);
            assert_eq!(lazy.value(p).unwrap(), grid.values()[i], "at {p}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn lazy_equals_dense(seed in any::<u64>(), picks in proptest::collection::vec(0usize..1000, 1..40),
                             margin_depth in 3u32..7, odd in 0i64..4) {
            let margin = DyadicPoint::lattice(margin_depth + 1, 2 * odd + 1).unwrap();
            let dom = Domain::new(DyadicPoint::ZERO.checked_sub(margin).unwrap(),
                                  DyadicPoint::lattice(0, 2).unwrap().checked_add(margin).unwrap()).unwrap();
            let dense = DyadicPath::<f64>::new(seed, dom, 0.3).unwrap().grid(10).unwrap();
            let mut lazy = DyadicPath::<f64>::new(seed, dom, 0.3).unwrap();
            for i in picks {
                let i = i % dense.len();
                prop_assert_eq!(lazy.value(dense.point(i)).unwrap(), dense.values()[i]);
            }
        }

        #[test]
        fn any_query_order_gives_same_values(seed in any::<u64>(), mut ks in proptest::collection::vec(0u64..=256, 1..30)) {
            let mut a = DyadicPath::<f64>::standard(seed);
            let forward: Vec<f64> = ks.iter().map(|&k| a.value(pt(8, k)).unwrap()).collect();
            let mut b = DyadicPath::<f64>::standard(seed);
            ks.reverse();
            let mut backward: Vec<f64> = ks.iter().map(|&k| b.value(pt(8, k)).unwrap()).collect();
            backward.reverse();
            prop_assert_eq!(forward, backward);
        }
    }
}
