//! Value-oracle access model: built-in objectives, the dummy-element wrapper and query ledgers.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ground::SubsetMask;
use crate::prob::Rational;

/// Result of one value query. Integer-valued objectives answer with `Int`, which lets the
/// extension evaluator skip rational arithmetic on the hot path.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Exact(Rational),
}

impl Value {
    pub fn into_rational(self) -> Rational {
        match self {
            Value::Int(v) => Rational::from_integer(BigInt::from(v)),
            Value::Exact(r) => r,
        }
    }
}

/// Black-box access to a set function `f: 2^N → Q`.
///
/// `query` is the single counted entry point: every call is one oracle query.
pub trait ValueOracle: Send + Sync {
    /// The elements `f` is defined over.
    fn ground(&self) -> SubsetMask;

    fn query(&self, set: SubsetMask) -> Value;

    /// Declared, not verified.
    fn is_monotone(&self) -> bool {
        false
    }

    fn value(&self, set: SubsetMask) -> Rational {
        self.query(set).into_rational()
    }

    /// `f(u | S) = f(S + u) - f(S)`; two queries.
    fn marginal(&self, u: usize, set: SubsetMask) -> Rational {
        self.value(set.with(u)) - self.value(set)
    }
}

impl<T: ValueOracle + ?Sized> ValueOracle for &T {
    fn ground(&self) -> SubsetMask {
        (**self).ground()
    }
    fn query(&self, set: SubsetMask) -> Value {
        (**self).query(set)
    }
    fn is_monotone(&self) -> bool {
        (**self).is_monotone()
    }
}

impl<T: ValueOracle + ?Sized> ValueOracle for Box<T> {
    fn ground(&self) -> SubsetMask {
        (**self).ground()
    }
    fn query(&self, set: SubsetMask) -> Value {
        (**self).query(set)
    }
    fn is_monotone(&self) -> bool {
        (**self).is_monotone()
    }
}

impl<T: ValueOracle + ?Sized> ValueOracle for Arc<T> {
    fn ground(&self) -> SubsetMask {
        (**self).ground()
    }
    fn query(&self, set: SubsetMask) -> Value {
        (**self).query(set)
    }
    fn is_monotone(&self) -> bool {
        (**self).is_monotone()
    }
}

/// Objective families with element ids already resolved.
#[derive(Clone, Debug, PartialEq)]
pub enum ObjectiveSpec {
    /// `f(S) = Σ weight(i)` over items `i` covered by some element of `S`.
    Coverage {
        covers: Vec<Vec<usize>>,
        item_weights: Vec<i64>,
    },
    /// Undirected cut over `n` vertices (the elements); `f(S)` is the weight crossing `(S, N∖S)`.
    Cut {
        n: usize,
        edges: Vec<(usize, usize, i64)>,
    },
    /// `f(S) = Σ_{u∈S} w_u`.
    Modular { weights: Vec<i64> },
}

impl ObjectiveSpec {
    pub fn n(&self) -> usize {
        match self {
            ObjectiveSpec::Coverage { covers, .. } => covers.len(),
            ObjectiveSpec::Cut { n, .. } => *n,
            ObjectiveSpec::Modular { weights } => weights.len(),
        }
    }
}

/// Builds the exact oracle for `spec`, rejecting negative weights and dangling references.
pub fn build_objective(spec: &ObjectiveSpec) -> Result<Box<dyn ValueOracle>> {
    match spec {
        ObjectiveSpec::Coverage {
            covers,
            item_weights,
        } => Ok(Box::new(Coverage::new(covers, item_weights)?)),
        ObjectiveSpec::Cut { n, edges } => Ok(Box::new(Cut::new(*n, edges)?)),
        ObjectiveSpec::Modular { weights } => Ok(Box::new(Modular::new(weights)?)),
    }
}

#[derive(Clone, Debug)]
pub struct Coverage {
    n: usize,
    // per element, covered items as a bitset of u64 words
    covers: Vec<Vec<u64>>,
    item_weights: Vec<i64>,
    unit_weights: bool,
}

impl Coverage {
    pub fn new(covers: &[Vec<usize>], item_weights: &[i64]) -> Result<Self> {
        check_width(covers.len(), "objective.covers")?;
        let words = item_weights.len().div_ceil(64).max(1);
        for (i, &w) in item_weights.iter().enumerate() {
            if w < 0 {
                return Err(Error::schema(
                    format!("objective.weights[{i}]"),
                    "item weights must be non-negative",
                ));
            }
        }
        let mut bits = Vec::with_capacity(covers.len());
        for (u, items) in covers.iter().enumerate() {
            let mut b = vec![0u64; words];
            for &i in items {
                if i >= item_weights.len() {
                    return Err(Error::schema(
                        format!("objective.covers[{u}]"),
                        format!("item {i} is not declared"),
                    ));
                }
                b[i / 64] |= 1 << (i % 64);
            }
            bits.push(b);
        }
        Ok(Coverage {
            n: covers.len(),
            covers: bits,
            item_weights: item_weights.to_vec(),
            unit_weights: item_weights.iter().all(|&w| w == 1),
        })
    }
}

impl ValueOracle for Coverage {
    fn ground(&self) -> SubsetMask {
        SubsetMask::full(self.n)
    }

    fn query(&self, set: SubsetMask) -> Value {
        let words = self.covers.first().map_or(1, Vec::len);
        let mut covered = vec![0u64; words];
        for u in set.intersection(self.ground()).iter() {
            for (c, w) in covered.iter_mut().zip(&self.covers[u]) {
                *c |= w;
            }
        }
        let total = if self.unit_weights {
            covered.iter().map(|w| w.count_ones() as i64).sum()
        } else {
            let mut t = 0;
            for (wi, &word) in covered.iter().enumerate() {
                let mut word = word;
                while word != 0 {
                    let b = word.trailing_zeros() as usize;
                    t += self.item_weights[wi * 64 + b];
                    word &= word - 1;
                }
            }
            t
        };
        Value::Int(total)
    }

    fn is_monotone(&self) -> bool {
        true
    }
}

#[derive(Clone, Debug)]
pub struct Cut {
    n: usize,
    edges: Vec<(usize, usize, i64)>,
}

impl Cut {
    pub fn new(n: usize, edges: &[(usize, usize, i64)]) -> Result<Self> {
        check_width(n, "objective.vertices")?;
        for (i, &(u, v, w)) in edges.iter().enumerate() {
            let field = format!("objective.edges[{i}]");
            if u >= n || v >= n {
                return Err(Error::schema(field, "endpoint is not an element"));
            }
            if w < 0 {
                return Err(Error::schema(field, "edge weights must be non-negative"));
            }
        }
        Ok(Cut {
            n,
            edges: edges.to_vec(),
        })
    }
}

impl ValueOracle for Cut {
    fn ground(&self) -> SubsetMask {
        SubsetMask::full(self.n)
    }

    fn query(&self, set: SubsetMask) -> Value {
        Value::Int(
            self.edges
                .iter()
                .filter(|&&(u, v, _)| set.contains(u) != set.contains(v))
                .map(|&(_, _, w)| w)
                .sum(),
        )
    }
}

#[derive(Clone, Debug)]
pub struct Modular {
    weights: Vec<i64>,
}

impl Modular {
    pub fn new(weights: &[i64]) -> Result<Self> {
        check_width(weights.len(), "objective.weights")?;
        if let Some(i) = weights.iter().position(|&w| w < 0) {
            return Err(Error::schema(
                format!("objective.weights[{i}]"),
                "weights must be non-negative",
            ));
        }
        Ok(Modular {
            weights: weights.to_vec(),
        })
    }
}

impl ValueOracle for Modular {
    fn ground(&self) -> SubsetMask {
        SubsetMask::full(self.weights.len())
    }

    fn query(&self, set: SubsetMask) -> Value {
        Value::Int(
            set.intersection(self.ground())
                .iter()
                .map(|u| self.weights[u])
                .sum(),
        )
    }

    fn is_monotone(&self) -> bool {
        true
    }
}

fn check_width(n: usize, field: &str) -> Result<()> {
    if n > crate::ground::MAX_ELEMENTS {
        return Err(Error::capability(format!(
            "{field}: {n} elements exceed the {}-bit ground set",
            crate::ground::MAX_ELEMENTS
        )));
    }
    Ok(())
}

/// An arbitrary closure as an oracle. Used for injected objectives in tests and examples.
pub struct FnObjective<F> {
    ground: SubsetMask,
    f: F,
    monotone: bool,
}

impl<F> FnObjective<F>
where
    F: Fn(SubsetMask) -> Rational + Send + Sync,
{
    pub fn new(ground: SubsetMask, monotone: bool, f: F) -> Self {
        FnObjective { ground, f, monotone }
    }
}

impl<F> ValueOracle for FnObjective<F>
where
    F: Fn(SubsetMask) -> Rational + Send + Sync,
{
    fn ground(&self) -> SubsetMask {
        self.ground
    }

    fn query(&self, set: SubsetMask) -> Value {
        Value::Exact((self.f)(set))
    }

    fn is_monotone(&self) -> bool {
        self.monotone
    }
}

/// `f` extended by dummy elements of zero marginal value: `f'(S) = f(S ∖ D)`.
pub struct WithDummies<O> {
    inner: O,
    dummies: SubsetMask,
}

/// Adds `r` dummy elements directly above the ground set of `f`.
pub fn with_dummies<O: ValueOracle>(f: O, r: usize) -> WithDummies<O> {
    let n = f.ground().bits().checked_ilog2().map_or(0, |b| b as usize + 1);
    let dummies = SubsetMask::range(n, n + r);
    WithDummies { inner: f, dummies }
}

impl<O: ValueOracle> WithDummies<O> {
    pub fn new(inner: O, dummies: SubsetMask) -> Self {
        assert!(inner.ground().is_disjoint(dummies));
        WithDummies { inner, dummies }
    }

    pub fn dummies(&self) -> SubsetMask {
        self.dummies
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: ValueOracle> ValueOracle for WithDummies<O> {
    fn ground(&self) -> SubsetMask {
        self.inner.ground() | self.dummies
    }

    fn query(&self, set: SubsetMask) -> Value {
        self.inner.query(set - self.dummies)
    }

    fn is_monotone(&self) -> bool {
        self.inner.is_monotone()
    }
}

/// Query counters. Increments are atomic so wrapped oracles stay shareable.
#[derive(Debug, Default)]
pub struct QueryLedger {
    value_queries: AtomicU64,
    independence_queries: AtomicU64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LedgerCounts {
    pub value_queries: u64,
    pub independence_queries: u64,
}

impl std::ops::Sub for LedgerCounts {
    type Output = LedgerCounts;
    fn sub(self, rhs: Self) -> Self {
        LedgerCounts {
            value_queries: self.value_queries - rhs.value_queries,
            independence_queries: self.independence_queries - rhs.independence_queries,
        }
    }
}

impl QueryLedger {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    pub fn counts(&self) -> LedgerCounts {
        LedgerCounts {
            value_queries: self.value_queries.load(Ordering::Relaxed),
            independence_queries: self.independence_queries.load(Ordering::Relaxed),
        }
    }

    pub fn value_queries(&self) -> u64 {
        self.value_queries.load(Ordering::Relaxed)
    }

    pub fn independence_queries(&self) -> u64 {
        self.independence_queries.load(Ordering::Relaxed)
    }

    pub(crate) fn record_value(&self) {
        self.value_queries.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn record_independence(&self) {
        self.independence_queries.fetch_add(1, Ordering::Relaxed);
    }
}

/// Forwarding wrapper that charges every call to a ledger. No caching.
///
/// Implements [`ValueOracle`] or [`IndependenceOracle`](crate::matroids::IndependenceOracle)
/// depending on what it wraps.
pub struct Counted<O> {
    pub(crate) inner: O,
    pub(crate) ledger: Arc<QueryLedger>,
}

pub fn counted<O>(inner: O, ledger: Arc<QueryLedger>) -> Counted<O> {
    Counted { inner, ledger }
}

impl<O> Counted<O> {
    pub fn ledger(&self) -> &Arc<QueryLedger> {
        &self.ledger
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: ValueOracle> ValueOracle for Counted<O> {
    fn ground(&self) -> SubsetMask {
        self.inner.ground()
    }

    fn query(&self, set: SubsetMask) -> Value {
        self.ledger.record_value();
        self.inner.query(set)
    }

    fn is_monotone(&self) -> bool {
        self.inner.is_monotone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::int;

    fn set(xs: &[usize]) -> SubsetMask {
        xs.iter().copied().collect()
    }

    #[test]
    fn coverage_counts_union() {
        let f = build_objective(&ObjectiveSpec::Coverage {
            covers: vec![vec![0], vec![1]],
            item_weights: vec![1, 1],
        })
        .unwrap();
        assert_eq!(f.value(set(&[0, 1])), int(2));
        assert!(f.is_monotone());
    }

    #[test]
    fn weighted_coverage_over_many_items() {
        let covers = vec![vec![0, 70], vec![70, 130]];
        let mut w = vec![1; 131];
        w[70] = 5;
        w[130] = 2;
        let f = Coverage::new(&covers, &w).unwrap();
        assert_eq!(f.value(set(&[0])), int(6));
        assert_eq!(f.value(set(&[0, 1])), int(8));
    }

    #[test]
    fn cut_counts_crossing_edges() {
        let f = build_objective(&ObjectiveSpec::Cut {
            n: 2,
            edges: vec![(0, 1, 1)],
        })
        .unwrap();
        assert_eq!(f.value(SubsetMask::EMPTY), int(0));
        assert_eq!(f.value(set(&[0])), int(1));
        assert_eq!(f.value(set(&[0, 1])), int(0));
        assert!(!f.is_monotone());
    }

    #[test]
    fn modular_sums_weights() {
        let f = build_objective(&ObjectiveSpec::Modular { weights: vec![3, 2, 1] }).unwrap();
        assert_eq!(f.value(set(&[0, 2])), int(4));
    }

    #[test]
    fn malformed_specs_name_the_field() {
        let err = build_objective(&ObjectiveSpec::Modular { weights: vec![1, -2] }).err().unwrap();
        assert!(err.to_string().contains("objective.weights[1]"), "{err}");
        let err = build_objective(&ObjectiveSpec::Coverage {
            covers: vec![vec![3]],
            item_weights: vec![1],
        }).err().unwrap();
        assert!(err.to_string().contains("objective.covers[0]"), "{err}");
        let err = build_objective(&ObjectiveSpec::Cut {
            n: 2,
            edges: vec![(0, 5, 1)],
        }).err().unwrap();
        assert!(err.to_string().contains("objective.edges[0]"), "{err}");
    }

    #[test]
    fn dummies_never_change_values() {
        let f = Modular::new(&[3, 2, 1]).unwrap();
        let g = with_dummies(&f, 2);
        assert_eq!(g.dummies(), set(&[3, 4]));
        assert_eq!(g.ground(), SubsetMask::full(5));
        for s in SubsetMask::full(5).subsets() {
            assert_eq!(g.value(s), f.value(s - g.dummies()));
        }
        assert_eq!(g.value(g.dummies()), f.value(SubsetMask::EMPTY));
    }

    #[test]
    fn ledger_counts_each_call_without_memoization() {
        let ledger = QueryLedger::new();
        let f = counted(Modular::new(&[1, 1]).unwrap(), ledger.clone());
        assert_eq!(ledger.value_queries(), 0);
        for _ in 0..3 {
            f.value(set(&[0]));
        }
        assert_eq!(ledger.value_queries(), 3);

        let g = with_dummies(counted(Modular::new(&[1]).unwrap(), ledger.clone()), 1);
        g.value(set(&[0, 1]));
        assert_eq!(ledger.value_queries(), 4);
    }
}
