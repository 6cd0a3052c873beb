//! Dyadic rationals `k / 2^h` in canonical form.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Deepest representable level. Indices stay exact in an `f64` mantissa.
pub const MAX_DEPTH: u32 = 52;

/// A dyadic rational `index / 2^depth`.
///
/// The representation is canonical: either `index` is odd or `depth == 0`,
/// so equal rationals compare and hash equal. Points on the unit grid are
/// built with [`DyadicPoint::new`]; [`DyadicPoint::lattice`] also accepts
/// coordinates outside `[0, 1]` for extended-domain paths.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicPoint {
    depth: u32,
    index: i64,
}

impl DyadicPoint {
    pub const ZERO: DyadicPoint = DyadicPoint { depth: 0, index: 0 };
    pub const ONE: DyadicPoint = DyadicPoint { depth: 0, index: 1 };

    /// Unit-grid point `k / 2^h` with `0 <= k <= 2^h`.
    pub fn new(depth: u32, index: u64) -> Result<Self> {
        if depth > MAX_DEPTH || index > 1u64 << depth {
            return Err(Error::InvalidPoint {
                depth,
                index: index as i64,
            });
        }
        Ok(Self::canonical(depth, index as i64))
    }

    /// Any lattice point `k / 2^h`, `k` possibly negative or above `2^h`.
    pub fn lattice(depth: u32, index: i64) -> Result<Self> {
        if depth > MAX_DEPTH || index.unsigned_abs() > 1u64 << 60 {
            return Err(Error::InvalidPoint { depth, index });
        }
        Ok(Self::canonical(depth, index))
    }

    /// Exact conversion from a float that happens to be dyadic.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::NotDyadic(x));
        }
        for depth in 0..=MAX_DEPTH {
            let scaled = x * (1u64 << depth) as f64;
            if scaled.fract() == 0.0 && scaled.abs() < (1u64 << 60) as f64 {
                return Self::lattice(depth, scaled as i64);
            }
        }
        Err(Error::NotDyadic(x))
    }

    #[inline]
    fn canonical(mut depth: u32, mut index: i64) -> Self {
        if index == 0 {
            return Self::ZERO;
        }
        let tz = index.trailing_zeros().min(depth);
        index >>= tz;
        depth -= tz;
        Self { depth, index }
    }

    #[inline]
    pub fn depth(self) -> u32 {
        self.depth
    }

    #[inline]
    pub fn index(self) -> i64 {
        self.index
    }

    /// Numerator when expressed at the finer level `depth`.
    #[inline]
    pub fn numerator_at(self, depth: u32) -> Option<i64> {
        if depth < self.depth {
            return None;
        }
        self.index.checked_mul(1i64 << (depth - self.depth))
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.index as f64 / (1u64 << self.depth) as f64
    }

    #[inline]
    pub fn to_scalar<S: Scalar>(self) -> S {
        S::lit(self.to_f64())
    }

    /// True for `0 <= self <= 1`.
    pub fn in_unit(self) -> bool {
        self >= Self::ZERO && self <= Self::ONE
    }

    pub fn checked_add(self, other: Self) -> Result<Self> {
        let d = self.depth.max(other.depth);
        let a = self.numerator_at(d).zip(other.numerator_at(d));
        match a.and_then(|(a, b)| a.checked_add(b)) {
            Some(n) => Self::lattice(d, n),
            None => Err(Error::InvalidPoint {
                depth: d,
                index: i64::MAX,
            }),
        }
    }

    pub fn checked_sub(self, other: Self) -> Result<Self> {
        self.checked_add(Self {
            depth: other.depth,
            index: -other.index,
        })
    }

    /// Midpoint of `self` and `other`.
    pub fn midpoint(self, other: Self) -> Result<Self> {
        let d = self.depth.max(other.depth);
        let a = self.numerator_at(d).zip(other.numerator_at(d));
        match a.and_then(|(a, b)| a.checked_add(b)) {
            Some(n) => Self::lattice(d + 1, n),
            None => Err(Error::InvalidPoint {
                depth: d + 1,
                index: i64::MAX,
            }),
        }
    }

    /// Width `other - self` as a float.
    #[inline]
    pub fn distance_to(self, other: Self) -> f64 {
        other.to_f64() - self.to_f64()
    }
}

impl Ord for DyadicPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        let d = self.depth.max(other.depth);
        let a = (self.index as i128) << (d - self.depth);
        let b = (other.index as i128) << (d - other.depth);
        a.cmp(&b)
    }
}

impl PartialOrd for DyadicPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for DyadicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.index, self.depth)
    }
}

impl fmt::Display for DyadicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.depth == 0 {
            write!(f, "{}", self.index)
        } else {
            write!(f, "{}/{}", self.index, 1u64 << self.depth)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_form() {
        let a = DyadicPoint::new(3, 4).unwrap();
        let b = DyadicPoint::new(1, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.depth(), 1);
        assert_eq!(DyadicPoint::new(5, 0).unwrap(), DyadicPoint::ZERO);
        assert_eq!(DyadicPoint::new(4, 16).unwrap(), DyadicPoint::ONE);
    }

    #[test]
    fn unit_range_enforced() {
        assert!(DyadicPoint::new(2, 5).is_err());
        assert!(DyadicPoint::new(MAX_DEPTH + 1, 1).is_err());
        assert!(DyadicPoint::lattice(2, -3).is_ok());
    }

    #[test]
    fn float_round_trip() {
        let p = DyadicPoint::from_f64(0.375).unwrap();
        assert_eq!(p, DyadicPoint::new(3, 3).unwrap());
        assert_eq!(p.to_f64(), 0.375);
        assert!(DyadicPoint::from_f64(0.1).is_err());
        assert_eq!(
            DyadicPoint::from_f64(-0.25).unwrap(),
            DyadicPoint::lattice(2, -1).unwrap()
        );
    }

    #[test]
    fn arithmetic() {
        let a = DyadicPoint::new(2, 1).unwrap();
        let b = DyadicPoint::new(1, 1).unwrap();
        assert_eq!(a.midpoint(b).unwrap(), DyadicPoint::new(3, 3).unwrap());
        assert_eq!(b.checked_sub(a).unwrap(), a);
        assert_eq!(a.checked_add(a).unwrap(), b);
    }

    proptest! {
        #[test]
        fn order_matches_floats(h1 in 0u32..20, k1 in 0u64..1 << 20, h2 in 0u32..20, k2 in 0u64..1 << 20) {
            let a = DyadicPoint::new(h1, k1 % ((1 << h1) + 1)).unwrap();
            let b = DyadicPoint::new(h2, k2 % ((1 << h2) + 1)).unwrap();
            prop_assert_eq!(a.cmp(&b), a.to_f64().partial_cmp(&b.to_f64()).unwrap());
            prop_assert_eq!(a == b, a.to_f64() == b.to_f64());
        }
    }
}
