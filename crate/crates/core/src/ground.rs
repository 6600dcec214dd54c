//! Ground-set encoding.
//!
//! Elements are dense indices `0..n_total`; after dummy augmentation the dummies occupy the
//! top indices. Subsets are fixed-width 128-bit masks, so every set operation is O(1) and the
//! natural ordering of masks (by numeric value) gives a canonical iteration order.

use std::fmt;
use std::ops::{BitAnd, BitOr, Not, Sub};

/// Maximum number of elements (originals plus dummies) an instance may use.
pub const MAX_ELEMENTS: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementId(pub usize);

impl ElementId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for ElementId {
    fn from(i: usize) -> Self {
        ElementId(i)
    }
}

/// A subset of the (augmented) ground set.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubsetMask(pub u128);

impl SubsetMask {
    pub const EMPTY: SubsetMask = SubsetMask(0);

    /// `{0, 1, .., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_ELEMENTS, "ground set of {n} elements exceeds {MAX_ELEMENTS}");
        if n == MAX_ELEMENTS {
            SubsetMask(u128::MAX)
        } else {
            SubsetMask((1u128 << n) - 1)
        }
    }

    /// `{lo, .., hi-1}`.
    pub fn range(lo: usize, hi: usize) -> Self {
        SubsetMask(Self::full(hi).0 & !Self::full(lo).0)
    }

    pub fn singleton(u: usize) -> Self {
        assert!(u < MAX_ELEMENTS);
        SubsetMask(1u128 << u)
    }

    #[inline]
    pub fn bits(self) -> u128 {
        self.0
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn contains(self, u: usize) -> bool {
        u < MAX_ELEMENTS && (self.0 >> u) & 1 == 1
    }

    #[inline]
    pub fn with(self, u: usize) -> Self {
        SubsetMask(self.0 | (1u128 << u))
    }

    #[inline]
    pub fn without(self, u: usize) -> Self {
        SubsetMask(self.0 & !(1u128 << u))
    }

    #[inline]
    pub fn insert(&mut self, u: usize) {
        self.0 |= 1u128 << u;
    }

    #[inline]
    pub fn remove(&mut self, u: usize) {
        self.0 &= !(1u128 << u);
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        SubsetMask(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        SubsetMask(self.0 & other.0)
    }

    #[inline]
    pub fn difference(self, other: Self) -> Self {
        SubsetMask(self.0 & !other.0)
    }

    #[inline]
    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    /// Smallest element, if any.
    #[inline]
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Elements in ascending id order.
    pub fn iter(self) -> Elements {
        Elements(self.0)
    }

    /// All subsets of `self`, in ascending numeric order of the mask (starting at the empty set).
    pub fn subsets(self) -> Subsets {
        Subsets {
            universe: self.0,
            next: Some(0),
        }
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for SubsetMask {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut m = SubsetMask::EMPTY;
        for u in iter {
            m.insert(u);
        }
        m
    }
}

impl BitOr for SubsetMask {
    type Output = SubsetMask;
    fn bitor(self, rhs: Self) -> Self {
        self.union(rhs)
    }
}

impl BitAnd for SubsetMask {
    type Output = SubsetMask;
    fn bitand(self, rhs: Self) -> Self {
        self.intersection(rhs)
    }
}

impl Sub for SubsetMask {
    type Output = SubsetMask;
    fn sub(self, rhs: Self) -> Self {
        self.difference(rhs)
    }
}

impl Not for SubsetMask {
    type Output = SubsetMask;
    fn not(self) -> Self {
        SubsetMask(!self.0)
    }
}

pub struct Elements(u128);

impl Iterator for Elements {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let u = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(u)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Elements {}

/// Enumerates submasks of a universe in increasing numeric order.
pub struct Subsets {
    universe: u128,
    next: Option<u128>,
}

impl Iterator for Subsets {
    type Item = SubsetMask;

    fn next(&mut self) -> Option<SubsetMask> {
        let cur = self.next?;
        // next submask in increasing order: (cur - universe) & universe, with wraparound
        let succ = cur.wrapping_sub(self.universe) & self.universe;
        self.next = (succ != 0).then_some(succ);
        Some(SubsetMask(cur))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra() {
        let a: SubsetMask = [0, 2, 5].into_iter().collect();
        let b: SubsetMask = [2, 3].into_iter().collect();
        assert_eq!((a | b).len(), 4);
        assert_eq!((a & b).iter().collect::<Vec<_>>(), vec![2]);
        assert_eq!((a - b).iter().collect::<Vec<_>>(), vec![0, 5]);
        assert!((a & b).is_subset(a));
        assert!(!b.is_subset(a));
        assert_eq!(a.first(), Some(0));
        assert_eq!(SubsetMask::EMPTY.first(), None);
    }

    #[test]
    fn full_width_masks() {
        assert_eq!(SubsetMask::full(0), SubsetMask::EMPTY);
        assert_eq!(SubsetMask::full(128).len(), 128);
        assert_eq!(SubsetMask::range(3, 6).iter().collect::<Vec<_>>(), vec![3, 4, 5]);
    }

    #[test]
    fn subsets_enumerate_in_numeric_order() {
        let u: SubsetMask = [1, 3, 4].into_iter().collect();
        let subs: Vec<u128> = u.subsets().map(|s| s.bits()).collect();
        assert_eq!(subs.len(), 8);
        assert!(subs.windows(2).all(|w| w[0] < w[1]));
        assert!(subs.iter().all(|&s| SubsetMask(s).is_subset(u)));
        assert_eq!(SubsetMask::EMPTY.subsets().count(), 1);
    }
}
