//! Sparse vectors indexed by subsets, their marginal vectors, and the ∨ / ⊕ algebra.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::ground::SubsetMask;
use crate::prob::{format_rational, prob_sum, Prob, Rational};

/// A point of `[0,1]^{2^N}` stored by its nonzero coordinates.
///
/// Keys are ordered by the numeric value of their mask, and every traversal follows that
/// order. The empty set is never stored: it does not affect the random union, so writes to it
/// are dropped.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct SparseExtVec {
    entries: BTreeMap<SubsetMask, Prob>,
    fractional: usize,
}

impl SparseExtVec {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `χ_S`: a single coordinate equal to one.
    pub fn indicator(set: SubsetMask) -> Self {
        let mut y = Self::zero();
        y.set(set, Prob::one());
        y
    }

    pub fn from_entries<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (SubsetMask, Prob)>,
    {
        let mut y = Self::zero();
        for (k, p) in entries {
            y.set(k, p);
        }
        y
    }

    /// Number of nonzero coordinates.
    pub fn supp(&self) -> usize {
        self.entries.len()
    }

    /// Number of coordinates strictly between zero and one.
    pub fn ff(&self) -> usize {
        self.fractional
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: SubsetMask) -> Rational {
        self.entries
            .get(&key)
            .map(|p| p.value().clone())
            .unwrap_or_else(Rational::zero)
    }

    pub fn get_prob(&self, key: SubsetMask) -> Option<&Prob> {
        self.entries.get(&key)
    }

    pub fn set(&mut self, key: SubsetMask, value: Prob) {
        if key.is_empty() {
            return;
        }
        if let Some(old) = self.entries.remove(&key) {
            if old.is_fractional() {
                self.fractional -= 1;
            }
        }
        if value.is_zero() {
            return;
        }
        if value.is_fractional() {
            self.fractional += 1;
        }
        self.entries.insert(key, value);
    }

    pub fn remove(&mut self, key: SubsetMask) {
        self.set(key, Prob::zero());
    }

    pub fn iter(&self) -> impl Iterator<Item = (SubsetMask, &Prob)> + '_ {
        self.entries.iter().map(|(k, p)| (*k, p))
    }

    pub fn keys(&self) -> impl Iterator<Item = SubsetMask> + '_ {
        self.entries.keys().copied()
    }

    /// `χ_A ∨ y`: coordinate `A` raised to one.
    pub fn join_indicator(&self, set: SubsetMask) -> Self {
        let mut z = self.clone();
        z.set(set, Prob::one());
        z
    }

    /// Coordinate-wise probabilistic sum `1 - (1-y)(1-z)`.
    pub fn psum(&self, other: &Self) -> Self {
        let mut z = self.clone();
        for (k, p) in other.iter() {
            let merged = match z.entries.get(&k) {
                Some(q) => q.psum(p),
                None => p.clone(),
            };
            z.set(k, merged);
        }
        z
    }

    /// `scale · Σ_j χ_{sets[j]}`; the sets must be pairwise distinct, empty sets are skipped.
    pub fn scaled_indicators(scale: &Prob, sets: &[SubsetMask]) -> Self {
        let mut z = Self::zero();
        for &s in sets {
            debug_assert!(s.is_empty() || z.get_prob(s).is_none(), "duplicate key {s:?}");
            z.set(s, scale.clone());
        }
        z
    }

    /// `marg_u(y) = 1 - ∏_{S ∋ u} (1 - y_S)` for every `u < width`.
    pub fn marginals(&self, width: usize) -> MarginalVec {
        let mut keep = vec![Rational::one(); width];
        for (k, p) in self.iter() {
            let miss = Rational::one() - p.value();
            for u in k.iter() {
                assert!(u < width, "key {k:?} exceeds marginal width {width}");
                keep[u] *= &miss;
            }
        }
        MarginalVec(keep.into_iter().map(|q| Rational::one() - q).collect())
    }

    /// Union of all keys whose coordinate equals one.
    pub fn integral_union(&self) -> SubsetMask {
        self.iter()
            .filter(|(_, p)| p.is_one())
            .fold(SubsetMask::EMPTY, |acc, (k, _)| acc | k)
    }

    pub fn support_union(&self) -> SubsetMask {
        self.keys().fold(SubsetMask::EMPTY, |acc, k| acc | k)
    }

    /// `u` is relaxed when no key other than `{u}` contains it.
    pub fn is_relaxed(&self, u: usize) -> bool {
        let single = SubsetMask::singleton(u);
        self.keys().all(|k| k == single || !k.contains(u))
    }

    /// Recomputes supp/ff from the entries and compares with the cached counters.
    pub fn counters_consistent(&self) -> bool {
        let ff = self.entries.values().filter(|p| p.is_fractional()).count();
        ff == self.fractional
            && self.entries.values().all(|p| !p.is_zero())
            && !self.entries.contains_key(&SubsetMask::EMPTY)
    }
}

impl std::fmt::Debug for SparseExtVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_map().entries(self.iter()).finish()
    }
}

/// A point of `[0,1]^N` over the augmented ground set.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct MarginalVec(Vec<Rational>);

impl MarginalVec {
    pub fn zeros(width: usize) -> Self {
        MarginalVec(vec![Rational::zero(); width])
    }

    pub fn from_vec(values: Vec<Rational>) -> Self {
        MarginalVec(values)
    }

    /// The 0/1 vector of `set`.
    pub fn indicator(width: usize, set: SubsetMask) -> Self {
        let mut x = Self::zeros(width);
        for u in set.iter() {
            x.0[u] = Rational::one();
        }
        x
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, u: usize) -> &Rational {
        &self.0[u]
    }

    pub fn set(&mut self, u: usize, value: Rational) {
        self.0[u] = value;
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.0
    }

    /// `x(A) = Σ_{u ∈ A} x_u`.
    pub fn sum_over(&self, set: SubsetMask) -> Rational {
        set.iter().fold(Rational::zero(), |acc, u| acc + &self.0[u])
    }

    pub fn total(&self) -> Rational {
        self.0.iter().fold(Rational::zero(), |acc, v| acc + v)
    }

    pub fn norm_inf(&self) -> Rational {
        self.0.iter().max().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn in_unit_cube(&self) -> bool {
        self.0.iter().all(|v| !(*v < Rational::zero()) && *v <= Rational::one())
    }

    pub fn is_integral_on(&self, set: SubsetMask) -> bool {
        set.iter().all(|u| self.0[u].is_zero() || self.0[u].is_one())
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(|v| v.is_zero() || v.is_one())
    }

    /// Elements with coordinate exactly one.
    pub fn ones(&self) -> SubsetMask {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_one())
            .map(|(u, _)| u)
            .collect()
    }

    /// Elements with coordinate strictly inside (0, 1).
    pub fn fractional(&self) -> SubsetMask {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, v)| crate::prob::is_fractional(v))
            .map(|(u, _)| u)
            .collect()
    }

    /// Coordinates outside `set` set to zero.
    pub fn restricted(&self, set: SubsetMask) -> Self {
        MarginalVec(
            self.0
                .iter()
                .enumerate()
                .map(|(u, v)| if set.contains(u) { v.clone() } else { Rational::zero() })
                .collect(),
        )
    }

    /// Coordinate-wise `1 - (1-a)(1-b)`.
    pub fn psum(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        MarginalVec(self.0.iter().zip(&other.0).map(|(a, b)| prob_sum(a, b)).collect())
    }
}

impl std::fmt::Debug for MarginalVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list()
            .entries(self.0.iter().map(format_rational))
            .finish()
    }
}
