//! Independence oracles, built-in matroid families, dummy extension, minors and polytope checks.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::ground::SubsetMask;
use crate::oracles::Counted;
use crate::prob::Rational;
use crate::vector::MarginalVec;

/// Largest effective ground set for which membership and tight-set questions are answered by
/// enumerating all subsets.
pub const EXHAUSTIVE_CAP: usize = 20;

/// Shape information a matroid may expose so callers can use closed forms instead of
/// enumeration. It never changes what `is_independent` answers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Structure {
    /// Every subset of the ground set of size at most `k`.
    Uniform { k: usize },
    /// At most `cap` elements from each part. Ground elements outside all parts are loops.
    Partition { parts: Vec<(SubsetMask, usize)> },
    /// A partition matroid truncated to rank `cap`: additionally at most `cap` elements overall.
    TruncatedPartition { parts: Vec<(SubsetMask, usize)>, cap: usize },
    Generic,
}

pub trait IndependenceOracle: Send + Sync {
    fn ground(&self) -> SubsetMask;

    /// Counted entry point.
    fn is_independent(&self, set: SubsetMask) -> bool;

    fn structure(&self) -> Structure {
        Structure::Generic
    }

    /// Dummy elements appended by [`extend_with_dummies`]; empty otherwise.
    fn dummies(&self) -> SubsetMask {
        SubsetMask::EMPTY
    }
}

impl<T: IndependenceOracle + ?Sized> IndependenceOracle for &T {
    fn ground(&self) -> SubsetMask {
        (**self).ground()
    }
    fn is_independent(&self, set: SubsetMask) -> bool {
        (**self).is_independent(set)
    }
    fn structure(&self) -> Structure {
        (**self).structure()
    }
    fn dummies(&self) -> SubsetMask {
        (**self).dummies()
    }
}

impl<T: IndependenceOracle + ?Sized> IndependenceOracle for Box<T> {
    fn ground(&self) -> SubsetMask {
        (**self).ground()
    }
    fn is_independent(&self, set: SubsetMask) -> bool {
        (**self).is_independent(set)
    }
    fn structure(&self) -> Structure {
        (**self).structure()
    }
    fn dummies(&self) -> SubsetMask {
        (**self).dummies()
    }
}

impl<T: IndependenceOracle + ?Sized> IndependenceOracle for std::sync::Arc<T> {
    fn ground(&self) -> SubsetMask {
        (**self).ground()
    }
    fn is_independent(&self, set: SubsetMask) -> bool {
        (**self).is_independent(set)
    }
    fn structure(&self) -> Structure {
        (**self).structure()
    }
    fn dummies(&self) -> SubsetMask {
        (**self).dummies()
    }
}

impl<O: IndependenceOracle> IndependenceOracle for Counted<O> {
    fn ground(&self) -> SubsetMask {
        self.inner.ground()
    }

    fn is_independent(&self, set: SubsetMask) -> bool {
        self.ledger.record_independence();
        self.inner.is_independent(set)
    }

    fn structure(&self) -> Structure {
        self.inner.structure()
    }

    fn dummies(&self) -> SubsetMask {
        self.inner.dummies()
    }
}

/// Matroid families with element ids already resolved.
#[derive(Clone, Debug, PartialEq)]
pub enum MatroidSpec {
    Uniform { n: usize, k: usize },
    /// Every element must belong to exactly one part.
    Partition {
        n: usize,
        parts: Vec<(Vec<usize>, usize)>,
    },
    /// Element `i` is the edge `edges[i]` between two vertex labels.
    Graphic { edges: Vec<(usize, usize)> },
}

impl MatroidSpec {
    pub fn n(&self) -> usize {
        match self {
            MatroidSpec::Uniform { n, .. } | MatroidSpec::Partition { n, .. } => *n,
            MatroidSpec::Graphic { edges } => edges.len(),
        }
    }
}

pub fn build_matroid(spec: &MatroidSpec) -> Result<Box<dyn IndependenceOracle>> {
    match spec {
        MatroidSpec::Uniform { n, k } => Ok(Box::new(Uniform::new(*n, *k)?)),
        MatroidSpec::Partition { n, parts } => Ok(Box::new(Partition::new(*n, parts)?)),
        MatroidSpec::Graphic { edges } => Ok(Box::new(Graphic::new(edges)?)),
    }
}

fn check_width(n: usize) -> Result<()> {
    if n > crate::ground::MAX_ELEMENTS {
        return Err(Error::capability(format!(
            "matroid on {n} elements exceeds the {}-bit ground set",
            crate::ground::MAX_ELEMENTS
        )));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Uniform {
    ground: SubsetMask,
    k: usize,
}

impl Uniform {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        check_width(n)?;
        Ok(Uniform {
            ground: SubsetMask::full(n),
            k,
        })
    }

    pub fn on(ground: SubsetMask, k: usize) -> Self {
        Uniform { ground, k }
    }
}

impl IndependenceOracle for Uniform {
    fn ground(&self) -> SubsetMask {
        self.ground
    }

    fn is_independent(&self, set: SubsetMask) -> bool {
        set.is_subset(self.ground) && set.len() <= self.k
    }

    fn structure(&self) -> Structure {
        Structure::Uniform { k: self.k }
    }
}

#[derive(Clone, Debug)]
pub struct Partition {
    ground: SubsetMask,
    parts: Vec<(SubsetMask, usize)>,
}

impl Partition {
    pub fn new(n: usize, parts: &[(Vec<usize>, usize)]) -> Result<Self> {
        check_width(n)?;
        let mut seen = SubsetMask::EMPTY;
        let mut masks = Vec::with_capacity(parts.len());
        for (i, (members, cap)) in parts.iter().enumerate() {
            let mut m = SubsetMask::EMPTY;
            for &u in members {
                if u >= n {
                    return Err(Error::schema(
                        format!("matroid.parts[{i}]"),
                        format!("element {u} is not in the ground set"),
                    ));
                }
                if seen.contains(u) {
                    return Err(Error::schema(
                        format!("matroid.parts[{i}]"),
                        format!("element {u} already belongs to another part"),
                    ));
                }
                seen.insert(u);
                m.insert(u);
            }
            masks.push((m, *cap));
        }
        if seen != SubsetMask::full(n) {
            let missing = (SubsetMask::full(n) - seen).first().unwrap();
            return Err(Error::schema(
                "matroid.parts",
                format!("element {missing} is not covered by any part"),
            ));
        }
        Ok(Partition {
            ground: seen,
            parts: masks,
        })
    }
}

impl IndependenceOracle for Partition {
    fn ground(&self) -> SubsetMask {
        self.ground
    }

    fn is_independent(&self, set: SubsetMask) -> bool {
        set.is_subset(self.ground)
            && self
                .parts
                .iter()
                .all(|&(p, cap)| (set & p).len() <= cap)
    }

    fn structure(&self) -> Structure {
        Structure::Partition {
            parts: self.parts.clone(),
        }
    }
}

/// Cycle matroid of a multigraph; element `i` is an edge, independent sets are forests.
#[derive(Clone, Debug)]
pub struct Graphic {
    edges: Vec<(usize, usize)>,
    vertices: usize,
}

impl Graphic {
    /// Vertex labels are compacted to `0..V`.
    pub fn new(edges: &[(usize, usize)]) -> Result<Self> {
        check_width(edges.len())?;
        let mut labels: Vec<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        labels.sort_unstable();
        labels.dedup();
        let idx = |v: usize| labels.binary_search(&v).unwrap();
        Ok(Graphic {
            edges: edges.iter().map(|&(a, b)| (idx(a), idx(b))).collect(),
            vertices: labels.len(),
        })
    }
}

impl IndependenceOracle for Graphic {
    fn ground(&self) -> SubsetMask {
        SubsetMask::full(self.edges.len())
    }

    fn is_independent(&self, set: SubsetMask) -> bool {
        if !set.is_subset(self.ground()) {
            return false;
        }
        let mut parent: Vec<usize> = (0..self.vertices).collect();
        fn find(parent: &mut [usize], mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        for e in set.iter() {
            let (a, b) = self.edges[e];
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return false;
            }
            parent[ra] = rb;
        }
        true
    }
}

/// `M` with `r_M(N)` dummy elements: `S` is independent iff `|S| ≤ r` and `S ∖ D` is
/// independent in `M`.
pub struct DummyExtended<M> {
    inner: M,
    dummies: SubsetMask,
    rank: usize,
}

/// Requires `|D| = r_M(N)` and `D` disjoint from the ground set; computes the rank greedily
/// (`|N|` queries against `m`).
pub fn extend_with_dummies<M: IndependenceOracle>(m: M, dummies: SubsetMask) -> Result<DummyExtended<M>> {
    if !dummies.is_disjoint(m.ground()) {
        return Err(Error::contract("dummy ids overlap the ground set"));
    }
    let r = rank(&m, m.ground());
    if dummies.len() != r {
        return Err(Error::contract(format!(
            "{} dummies for a matroid of rank {r}",
            dummies.len()
        )));
    }
    Ok(DummyExtended {
        inner: m,
        dummies,
        rank: r,
    })
}

/// The `r` ids directly above the highest ground element.
pub fn dummy_block(ground: SubsetMask, r: usize) -> SubsetMask {
    let n = 128 - ground.bits().leading_zeros() as usize;
    SubsetMask::range(n, n + r)
}

impl<M> DummyExtended<M> {
    pub fn inner(&self) -> &M {
        &self.inner
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}

impl<M: IndependenceOracle> IndependenceOracle for DummyExtended<M> {
    fn ground(&self) -> SubsetMask {
        self.inner.ground() | self.dummies
    }

    fn is_independent(&self, set: SubsetMask) -> bool {
        // always exactly one inner query
        let inner = self.inner.is_independent(set - self.dummies);
        inner && set.len() <= self.rank && set.is_subset(self.ground())
    }

    fn structure(&self) -> Structure {
        match self.inner.structure() {
            // |S ∖ D| ≤ |S| ≤ r = min(k, n) ≤ k, so only the size bound binds
            Structure::Uniform { .. } => Structure::Uniform { k: self.rank },
            // the size bound is a truncation; dummies form one more part that never binds
            Structure::Partition { mut parts } | Structure::TruncatedPartition { mut parts, .. } => {
                parts.push((self.dummies, self.rank));
                Structure::TruncatedPartition { parts, cap: self.rank }
            }
            Structure::Generic => Structure::Generic,
        }
    }

    fn dummies(&self) -> SubsetMask {
        self.dummies
    }
}

/// Greedy rank: scans `a` in ascending order, exactly `|a|` queries.
pub fn rank<M: IndependenceOracle + ?Sized>(m: &M, a: SubsetMask) -> usize {
    grow(m, SubsetMask::EMPTY, a).len()
}

/// Extends the independent set `basis` greedily by the elements of `a`.
pub(crate) fn grow<M: IndependenceOracle + ?Sized>(m: &M, basis: SubsetMask, a: SubsetMask) -> SubsetMask {
    let mut b = basis;
    for u in a.iter() {
        if m.is_independent(b.with(u)) {
            b.insert(u);
        }
    }
    b
}

/// `(M / D')|_C` over a borrowed base matroid.
#[derive(Clone, Copy)]
pub struct MinorHandle<'a> {
    base: &'a dyn IndependenceOracle,
    restricted_to: SubsetMask,
    contracted_by: SubsetMask,
}

impl std::fmt::Debug for MinorHandle<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MinorHandle")
            .field("restricted_to", &self.restricted_to)
            .field("contracted_by", &self.contracted_by)
            .finish()
    }
}

impl<'a> MinorHandle<'a> {
    /// The trivial minor: the whole matroid.
    pub fn whole(base: &'a dyn IndependenceOracle) -> Self {
        MinorHandle {
            base,
            restricted_to: base.ground(),
            contracted_by: SubsetMask::EMPTY,
        }
    }

    pub fn new(base: &'a dyn IndependenceOracle, restricted_to: SubsetMask, contracted_by: SubsetMask) -> Result<Self> {
        if !restricted_to.is_disjoint(contracted_by) {
            return Err(Error::contract("restriction and contraction overlap"));
        }
        if !(restricted_to | contracted_by).is_subset(base.ground()) {
            return Err(Error::contract("minor sets leave the base ground set"));
        }
        Ok(MinorHandle {
            base,
            restricted_to,
            contracted_by,
        })
    }

    pub fn base(&self) -> &'a dyn IndependenceOracle {
        self.base
    }

    pub fn restricted_to(&self) -> SubsetMask {
        self.restricted_to
    }

    pub fn contracted_by(&self) -> SubsetMask {
        self.contracted_by
    }

    /// `M'|_C` for `C ⊆` the current ground.
    pub fn restrict(&self, c: SubsetMask) -> Self {
        assert!(c.is_subset(self.restricted_to));
        MinorHandle {
            restricted_to: c,
            ..*self
        }
    }

    /// `M'/C` for `C ⊆` the current ground.
    pub fn contract(&self, c: SubsetMask) -> Self {
        assert!(c.is_subset(self.restricted_to));
        MinorHandle {
            base: self.base,
            restricted_to: self.restricted_to - c,
            contracted_by: self.contracted_by | c,
        }
    }

    /// Greedy basis of `D'`; `|D'|` queries.
    pub fn contraction_basis(&self) -> SubsetMask {
        grow(self.base, SubsetMask::EMPTY, self.contracted_by)
    }

    /// `r_M(A ∪ D') - r_M(D')` by growing `A` on top of a `D'`-basis; `|A ∪ D'|` queries.
    pub fn minor_rank(&self, a: SubsetMask) -> usize {
        debug_assert!(a.is_subset(self.restricted_to));
        let b = self.contraction_basis();
        grow(self.base, b, a).len() - b.len()
    }
}

impl IndependenceOracle for MinorHandle<'_> {
    fn ground(&self) -> SubsetMask {
        self.restricted_to
    }

    fn is_independent(&self, set: SubsetMask) -> bool {
        set.is_subset(self.restricted_to) && self.minor_rank(set) == set.len()
    }

    fn structure(&self) -> Structure {
        let d = self.contracted_by;
        let c = self.restricted_to;
        match self.base.structure() {
            Structure::Uniform { k } => Structure::Uniform {
                k: k - d.len().min(k),
            },
            Structure::Partition { parts } => Structure::Partition {
                parts: parts
                    .into_iter()
                    .map(|(p, cap)| (p & c, cap - (p & d).len().min(cap)))
                    .filter(|(p, _)| !p.is_empty())
                    .collect(),
            },
            Structure::TruncatedPartition { parts, cap } => {
                let used: usize = parts.iter().map(|&(p, pc)| (p & d).len().min(pc)).sum();
                Structure::TruncatedPartition {
                    parts: parts
                        .into_iter()
                        .map(|(p, pc)| (p & c, pc - (p & d).len().min(pc)))
                        .filter(|(p, _)| !p.is_empty())
                        .collect(),
                    cap: cap - used.min(cap),
                }
            }
            Structure::Generic => Structure::Generic,
        }
    }
}

/// Scales `values` to integers over their common denominator.
pub(crate) fn common_scale(values: &[&Rational]) -> (Vec<BigInt>, BigInt) {
    use num_integer::Integer;
    let mut l = BigInt::from(1);
    for v in values {
        l = l.lcm(v.denom());
    }
    let scaled = values
        .iter()
        .map(|v| v.numer() * (&l / v.denom()))
        .collect();
    (scaled, l)
}

/// Depth-first walk over all subsets of `elements`, maintaining the greedy rank on top of
/// `start` (one query per include step) and the sum of `weights`. `visit` receives every
/// subset once, with its rank and weight.
pub(crate) fn walk_subsets<M: IndependenceOracle + ?Sized>(
    m: &M,
    start: SubsetMask,
    elements: &[usize],
    weights: &[BigInt],
    visit: &mut dyn FnMut(SubsetMask, usize, &BigInt),
) {
    #[allow(clippy::too_many_arguments)]
    fn rec<M: IndependenceOracle + ?Sized>(
        m: &M,
        elements: &[usize],
        weights: &[BigInt],
        set: SubsetMask,
        basis: SubsetMask,
        rank: usize,
        sum: &BigInt,
        visit: &mut dyn FnMut(SubsetMask, usize, &BigInt),
    ) {
        let Some((&e, rest)) = elements.split_first() else {
            visit(set, rank, sum);
            return;
        };
        rec(m, rest, &weights[1..], set, basis, rank, sum, visit);
        let (b, r) = if m.is_independent(basis.with(e)) {
            (basis.with(e), rank + 1)
        } else {
            (basis, rank)
        };
        let s = sum + &weights[0];
        rec(m, rest, &weights[1..], set.with(e), b, r, &s, visit);
    }
    rec(m, elements, weights, SubsetMask::EMPTY, start, 0, &BigInt::zero(), visit);
}

/// Largest prefix-sum violation test for a uniform block: every `m`-subset of `block` has
/// `x`-sum ≤ `min(m, cap)`.
fn block_within(x: &MarginalVec, block: SubsetMask, cap: usize) -> bool {
    let mut vals: Vec<&Rational> = block.iter().map(|u| x.get(u)).collect();
    vals.sort_by(|a, b| b.cmp(a));
    let mut acc = Rational::zero();
    for (i, v) in vals.into_iter().enumerate() {
        acc += v;
        if acc > Rational::from_integer(BigInt::from((i + 1).min(cap))) {
            return false;
        }
    }
    true
}

fn structured_rank(structure: &Structure, ground: SubsetMask) -> Option<usize> {
    match structure {
        Structure::Uniform { k } => Some(ground.len().min(*k)),
        Structure::Partition { parts } => Some(
            parts
                .iter()
                .map(|&(p, cap)| (p & ground).len().min(cap))
                .sum(),
        ),
        Structure::TruncatedPartition { parts, cap } => Some(
            parts
                .iter()
                .map(|&(p, pc)| (p & ground).len().min(pc))
                .sum::<usize>()
                .min(*cap),
        ),
        Structure::Generic => None,
    }
}

/// `x|_ground ∈ P(M)`. Coordinates outside the ground set are ignored.
pub fn in_matroid_polytope<M: IndependenceOracle + ?Sized>(m: &M, x: &MarginalVec) -> Result<bool> {
    let g = m.ground();
    if g.iter().any(|u| x.get(u).is_negative()) {
        return Ok(false);
    }
    match m.structure() {
        Structure::Uniform { k } => Ok(block_within(x, g, k)),
        Structure::Partition { parts } => {
            let covered = parts.iter().fold(SubsetMask::EMPTY, |a, &(p, _)| a | p);
            Ok((g - covered).iter().all(|u| x.get(u).is_zero())
                && parts.iter().all(|&(p, cap)| block_within(x, p & g, cap)))
        }
        // the truncation adds only the ground-set constraint
        Structure::TruncatedPartition { parts, cap } => {
            let covered = parts.iter().fold(SubsetMask::EMPTY, |a, &(p, _)| a | p);
            Ok((g - covered).iter().all(|u| x.get(u).is_zero())
                && parts.iter().all(|&(p, pc)| block_within(x, p & g, pc))
                && x.sum_over(g) <= Rational::from_integer(BigInt::from(cap)))
        }
        Structure::Generic => {
            let elements: Vec<usize> = g.iter().collect();
            if elements.len() > EXHAUSTIVE_CAP {
                return Err(Error::capability(format!(
                    "polytope membership over {} elements exceeds the exhaustive cap of {EXHAUSTIVE_CAP}",
                    elements.len()
                )));
            }
            let vals: Vec<&Rational> = elements.iter().map(|&u| x.get(u)).collect();
            let (w, l) = common_scale(&vals);
            let mut ok = true;
            walk_subsets(m, SubsetMask::EMPTY, &elements, &w, &mut |_, r, s| {
                if *s > &l * BigInt::from(r) {
                    ok = false;
                }
            });
            Ok(ok)
        }
    }
}

/// `x|_ground ∈ B(M)`: polytope membership plus `x(ground) = r(ground)`.
pub fn in_base_polytope<M: IndependenceOracle + ?Sized>(m: &M, x: &MarginalVec) -> Result<bool> {
    if !in_matroid_polytope(m, x)? {
        return Ok(false);
    }
    let g = m.ground();
    let r = structured_rank(&m.structure(), g).unwrap_or_else(|| rank(m, g));
    Ok(x.sum_over(g) == Rational::from_integer(BigInt::from(r)))
}
