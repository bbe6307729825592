//! Subsets of coordinate indices `{1, .., d}` as fixed-width bit patterns.
//!
//! Indices are 1-based externally (matching the usual QMC notation) and the
//! textual form is `{1,3}` with `{}` for the empty set. Bit `j-1` of `bits`
//! is set when index `j` belongs to the subset.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Widest supported ambient dimension for explicit subset handling.
pub const MAX_DIM: usize = 128;

/// A subset `u` of `{1, .., d}`.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetMask {
    bits: u128,
    d: u8,
}

impl SubsetMask {
    pub fn empty(d: usize) -> Self {
        assert!(d <= MAX_DIM, "ambient dimension {d} exceeds {MAX_DIM}");
        SubsetMask { bits: 0, d: d as u8 }
    }

    pub fn full(d: usize) -> Self {
        let mut m = Self::empty(d);
        m.bits = if d == MAX_DIM { u128::MAX } else { (1u128 << d) - 1 };
        m
    }

    /// The singleton `{j}` (1-based).
    pub fn singleton(d: usize, j: usize) -> Self {
        Self::from_indices(d, &[j])
    }

    /// The prefix `{1, .., s}`; `s = 0` gives the empty set.
    pub fn prefix(d: usize, s: usize) -> Self {
        assert!(s <= d, "prefix length {s} exceeds dimension {d}");
        let mut m = Self::empty(d);
        m.bits = if s == MAX_DIM { u128::MAX } else { (1u128 << s) - 1 };
        m
    }

    /// Build from 1-based indices.
    pub fn from_indices(d: usize, indices: &[usize]) -> Self {
        let mut m = Self::empty(d);
        for &j in indices {
            assert!(j >= 1 && j <= d, "index {j} outside 1..={d}");
            m.bits |= 1u128 << (j - 1);
        }
        m
    }

    pub fn from_bits(d: usize, bits: u128) -> Self {
        let m = Self::empty(d);
        assert!(
            bits & !Self::full(d).bits == 0,
            "bit set above position {d}"
        );
        SubsetMask { bits, d: m.d }
    }

    pub fn bits(&self) -> u128 {
        self.bits
    }

    pub fn dim(&self) -> usize {
        self.d as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    /// `|u|`.
    pub fn cardinality(&self) -> u32 {
        self.bits.count_ones()
    }

    /// `max { j : j in u }`, with 0 for the empty set.
    pub fn ceiling(&self) -> usize {
        (128 - self.bits.leading_zeros()) as usize
    }

    /// `min { j : j in u }`, with 0 for the empty set.
    pub fn min_index(&self) -> usize {
        if self.bits == 0 {
            0
        } else {
            self.bits.trailing_zeros() as usize + 1
        }
    }

    pub fn contains(&self, j: usize) -> bool {
        j >= 1 && j <= self.dim() && (self.bits >> (j - 1)) & 1 == 1
    }

    pub fn insert(&self, j: usize) -> Self {
        assert!(j >= 1 && j <= self.dim());
        SubsetMask { bits: self.bits | (1u128 << (j - 1)), d: self.d }
    }

    /// `-u`, the complement within `{1, .., d}`.
    pub fn complement(&self) -> Self {
        SubsetMask { bits: Self::full(self.dim()).bits & !self.bits, d: self.d }
    }

    pub fn is_subset_of(&self, other: &SubsetMask) -> bool {
        self.bits & !other.bits == 0
    }

    /// 1-based member indices in increasing order.
    pub fn indices(&self) -> Vec<usize> {
        (1..=self.dim()).filter(|&j| self.contains(j)).collect()
    }

    /// All `2^d` subsets of `{1, .., d}` in increasing bit order.
    pub fn all(d: usize) -> impl Iterator<Item = SubsetMask> {
        assert!(d <= 25, "refusing to enumerate 2^{d} subsets");
        (0u128..(1u128 << d)).map(move |bits| SubsetMask { bits, d: d as u8 })
    }

    /// All subsets of `self`, in increasing bit order (includes empty and self).
    pub fn subsets(&self) -> impl Iterator<Item = SubsetMask> {
        let bits = self.bits;
        let d = self.d;
        assert!(self.cardinality() <= 25);
        let k = self.cardinality();
        let members: Vec<u128> = (0..128)
            .filter(|&i| (bits >> i) & 1 == 1)
            .map(|i| 1u128 << i)
            .collect();
        (0u64..(1u64 << k)).map(move |pick| {
            let mut b = 0u128;
            for (i, m) in members.iter().enumerate() {
                if (pick >> i) & 1 == 1 {
                    b |= m;
                }
            }
            SubsetMask { bits: b, d }
        })
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        let mut first = true;
        for j in self.indices() {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
            first = false;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SubsetMask({self}, d={})", self.d)
    }
}

impl SubsetMask {
    /// Parse `"{1,3}"` (or `"{}"`) against an ambient dimension.
    pub fn parse(s: &str, d: usize) -> Result<Self> {
        let inner = s
            .strip_prefix('{')
            .and_then(|t| t.strip_suffix('}'))
            .ok_or_else(|| Error::InvalidInput(format!("subset `{s}` is not brace-delimited")))?;
        let mut m = Self::empty(d);
        for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let j: usize = part
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad index `{part}` in subset `{s}`")))?;
            if j < 1 || j > d {
                return Err(Error::InvalidInput(format!(
                    "index {j} in subset `{s}` outside 1..={d}"
                )));
            }
            m.bits |= 1u128 << (j - 1);
        }
        Ok(m)
    }
}

impl FromStr for SubsetMask {
    type Err = Error;

    /// Parse with the ambient dimension taken as the largest index present.
    fn from_str(s: &str) -> Result<Self> {
        let probe = Self::parse(s, MAX_DIM)?;
        let d = probe.ceiling().max(1);
        Self::parse(s, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinality_ceiling_and_complement() {
        let u = SubsetMask::from_indices(5, &[1, 3]);
        assert_eq!(u.cardinality(), 2);
        assert_eq!(u.ceiling(), 3);
        assert_eq!(u.min_index(), 1);
        assert_eq!(u.complement().indices(), vec![2, 4, 5]);

        let empty = SubsetMask::empty(4);
        assert_eq!(empty.cardinality(), 0);
        assert_eq!(empty.ceiling(), 0);
        assert_eq!(empty.complement(), SubsetMask::full(4));
    }

    #[test]
    fn display_and_parse_round_trip() {
        for u in SubsetMask::all(6) {
            let s = u.to_string();
            let back = SubsetMask::parse(&s, 6).unwrap();
            assert_eq!(u, back, "round trip failed for {s}");
        }
        assert_eq!(SubsetMask::empty(3).to_string(), "{}");
        assert_eq!(SubsetMask::from_indices(4, &[2, 4]).to_string(), "{2,4}");
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(SubsetMask::parse("1,2", 4).is_err());
        assert!(SubsetMask::parse("{0}", 4).is_err());
        assert!(SubsetMask::parse("{5}", 4).is_err());
        assert!(SubsetMask::parse("{x}", 4).is_err());
    }

    #[test]
    fn subset_enumeration_orders() {
        let all: Vec<_> = SubsetMask::all(3).collect();
        assert_eq!(all.len(), 8);
        assert_eq!(all[0], SubsetMask::empty(3));
        assert_eq!(all[7], SubsetMask::full(3));

        let u = SubsetMask::from_indices(4, &[2, 4]);
        let subs: Vec<_> = u.subsets().collect();
        assert_eq!(subs.len(), 4);
        assert!(subs.iter().all(|v| v.is_subset_of(&u)));
    }

    #[test]
    fn prefix_and_singleton() {
        assert_eq!(SubsetMask::prefix(5, 3).indices(), vec![1, 2, 3]);
        assert_eq!(SubsetMask::prefix(5, 0), SubsetMask::empty(5));
        assert_eq!(SubsetMask::singleton(64, 64).ceiling(), 64);
        assert_eq!(SubsetMask::full(128).cardinality(), 128);
    }
}
