//! Greedy partition of an independent set into `ℓ` parts: the exact argmax variant and the
//! descending-threshold variant.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ground::SubsetMask;
use crate::matroids::{rank, IndependenceOracle, Structure};
use crate::oracles::ValueOracle;
use crate::prob::{to_f64, Rational};

/// Disjoint parts `T_1..T_ℓ` whose union is independent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub parts: Vec<SubsetMask>,
}

impl Partition {
    pub fn empty(l: usize) -> Self {
        Partition {
            parts: vec![SubsetMask::EMPTY; l],
        }
    }

    pub fn union(&self) -> SubsetMask {
        self.parts.iter().fold(SubsetMask::EMPTY, |a, &p| a | p)
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn pairwise_disjoint(&self) -> bool {
        self.parts.iter().map(|p| p.len()).sum::<usize>() == self.union().len()
    }

    /// `Σ_j f(T_j | ∅)`.
    pub fn gain<F: ValueOracle + ?Sized>(&self, f: &F) -> Rational {
        let base = f.value(SubsetMask::EMPTY);
        self.parts.iter().map(|&p| f.value(p) - &base).sum()
    }

    /// `Σ_j f(T_j)`.
    pub fn total<F: ValueOracle + ?Sized>(&self, f: &F) -> Rational {
        self.parts.iter().map(|&p| f.value(p)).sum()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SplitOptions {
    /// Re-check disjointness and independence of the union after every addition. The checks
    /// issue extra independence queries.
    pub paranoid: bool,
}

fn check_parts(l: usize) -> Result<()> {
    if l == 0 {
        return Err(Error::contract("the number of parts must be at least one"));
    }
    Ok(())
}

fn paranoid_check<M: IndependenceOracle + ?Sized>(m: &M, p: &Partition) -> Result<()> {
    if !p.pairwise_disjoint() {
        return Err(Error::contract(format!("parts overlap: {:?}", p.parts)));
    }
    if !m.is_independent(p.union()) {
        return Err(Error::contract(format!("union {:?} is dependent", p.union())));
    }
    Ok(())
}

/// Repeatedly adds the pair `(u, j)` maximizing `f(u | T_j)` over elements that keep the union
/// independent, until the union is a base. Ties go to the smallest `u`, then the smallest `j`.
pub fn split<M, F>(m: &M, f: &F, l: usize) -> Result<Partition>
where
    M: IndependenceOracle + ?Sized,
    F: ValueOracle + ?Sized,
{
    split_with(m, f, l, SplitOptions::default())
}

pub fn split_with<M, F>(m: &M, f: &F, l: usize, opts: SplitOptions) -> Result<Partition>
where
    M: IndependenceOracle + ?Sized,
    F: ValueOracle + ?Sized,
{
    check_parts(l)?;
    let ground = m.ground();
    let mut out = Partition::empty(l);
    let mut cache = vec![f.value(SubsetMask::EMPTY); l];
    loop {
        let t = out.union();
        let candidates: Vec<usize> = (ground - t)
            .iter()
            .filter(|&u| m.is_independent(t.with(u)))
            .collect();
        if candidates.is_empty() {
            break;
        }
        let mut best: Option<(Rational, usize, usize, Rational)> = None;
        for &u in &candidates {
            for j in 0..l {
                let v = f.value(out.parts[j].with(u));
                let gain = &v - &cache[j];
                if best.as_ref().is_none_or(|(g, ..)| gain > *g) {
                    best = Some((gain, u, j, v));
                }
            }
        }
        let (_, u, j, v) = best.expect("candidates is nonempty");
        out.parts[j].insert(u);
        cache[j] = v;
        if opts.paranoid {
            paranoid_check(m, &out)?;
        }
    }
    Ok(out)
}

/// Number of threshold passes `⌈(2/ε)·ln(2r/ε)⌉`.
pub fn threshold_passes(r: usize, eps: &Rational) -> usize {
    if r == 0 {
        return 0;
    }
    let e = to_f64(eps);
    let i = ((2.0 / e) * (2.0 * r as f64 / e).ln()).ceil();
    i.max(0.0) as usize
}

/// Explicit query budget of [`accelerated_split`] for `n` ground elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AcceleratedBudget {
    pub passes: usize,
    pub value_queries: u64,
    pub independence_queries: u64,
}

impl AcceleratedBudget {
    pub fn new(n: usize, l: usize, r: usize, eps: &Rational) -> Self {
        let passes = threshold_passes(r, eps);
        let (n, l, i) = (n as u64, l as u64, passes as u64);
        AcceleratedBudget {
            passes,
            value_queries: i * n * l + 2 * n,
            independence_queries: i * n + n,
        }
    }
}

fn matroid_rank_hint<M: IndependenceOracle + ?Sized>(m: &M, nonloops: SubsetMask) -> usize {
    let d = m.dummies();
    if !d.is_empty() {
        return d.len();
    }
    match m.structure() {
        Structure::Uniform { k } => nonloops.len().min(k),
        Structure::Partition { parts } => parts
            .iter()
            .map(|&(p, cap)| (p & nonloops).len().min(cap))
            .sum(),
        Structure::TruncatedPartition { parts, cap } => parts
            .iter()
            .map(|&(p, pc)| (p & nonloops).len().min(pc))
            .sum::<usize>()
            .min(cap),
        Structure::Generic => rank(m, nonloops),
    }
}

/// Descending-threshold greedy. Removes self-loops, sets `τ₀ = max_u f({u})` and runs
/// `⌈(2/ε)·ln(2r/ε)⌉` passes with `τ_k = (1 − ε/2)·τ_{k−1}`. In each pass every element is
/// checked for independence once and placed into the first part whose marginal reaches the
/// threshold. Finally `T_1` is padded with dummies up to a base.
///
/// `r` is `|D|` for a dummy-extended matroid. Otherwise it comes from the exposed structure, or
/// from a greedy rank computation (`n` extra independence queries).
pub fn accelerated_split<M, F>(m: &M, f: &F, l: usize, eps: &Rational) -> Result<Partition>
where
    M: IndependenceOracle + ?Sized,
    F: ValueOracle + ?Sized,
{
    accelerated_split_with(m, f, l, eps, SplitOptions::default())
}

pub fn accelerated_split_with<M, F>(
    m: &M,
    f: &F,
    l: usize,
    eps: &Rational,
    opts: SplitOptions,
) -> Result<Partition>
where
    M: IndependenceOracle + ?Sized,
    F: ValueOracle + ?Sized,
{
    check_parts(l)?;
    if !eps.is_positive() || *eps > Rational::one() {
        return Err(Error::contract("accelerated split needs 0 < ε ≤ 1"));
    }
    let ground = m.ground();
    let nonloops: SubsetMask = ground
        .iter()
        .filter(|&u| m.is_independent(SubsetMask::singleton(u)))
        .collect();
    let dummies = m.dummies();
    let r = matroid_rank_hint(m, nonloops);
    let passes = threshold_passes(r, eps);

    let empty_value = f.value(SubsetMask::EMPTY);
    let mut tau = nonloops
        .iter()
        .map(|u| f.value(SubsetMask::singleton(u)))
        .max()
        .unwrap_or_else(Rational::zero);
    let shrink = Rational::one() - eps / Rational::from_integer(BigInt::from(2));

    let mut out = Partition::empty(l);
    let mut t = SubsetMask::EMPTY;
    let mut cache = vec![empty_value; l];
    'passes: for _ in 0..passes {
        tau = &tau * &shrink;
        for u in nonloops.iter() {
            if t.len() >= r {
                break 'passes;
            }
            if t.contains(u) || !m.is_independent(t.with(u)) {
                continue;
            }
            for j in 0..l {
                let v = f.value(out.parts[j].with(u));
                if &v - &cache[j] >= tau {
                    out.parts[j].insert(u);
                    t.insert(u);
                    cache[j] = v;
                    if opts.paranoid {
                        paranoid_check(m, &out)?;
                    }
                    break;
                }
            }
        }
    }

    // |T ∖ D| stays independent and |T| ≤ r, so topping up with dummies keeps independence
    for d in (dummies - t).iter() {
        if t.len() >= r {
            break;
        }
        out.parts[0].insert(d);
        t.insert(d);
    }
    if opts.paranoid {
        paranoid_check(m, &out)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroids::{dummy_block, extend_with_dummies, Uniform};
    use crate::oracles::{counted, with_dummies, Modular, QueryLedger};
    use crate::prob::{int, rat};

    fn set(xs: &[usize]) -> SubsetMask {
        xs.iter().copied().collect()
    }

    #[test]
    fn split_reduces_to_greedy() {
        let f = Modular::new(&[3, 2, 1]).unwrap();
        let m = Uniform::new(3, 2).unwrap();
        let p = split(&m, &f, 1).unwrap();
        assert_eq!(p.parts, vec![set(&[0, 1])]);
        assert_eq!(f.value(p.union()), int(5));
    }

    #[test]
    fn split_tie_break_prefers_first_part() {
        let f = Modular::new(&[3, 2]).unwrap();
        let m = Uniform::new(2, 2).unwrap();
        let p = split(&m, &f, 2).unwrap();
        assert_eq!(p.parts, vec![set(&[0, 1]), SubsetMask::EMPTY]);
    }

    #[test]
    fn split_with_dummies_completes_a_base() {
        let f = Modular::new(&[0, 4, 0, 1]).unwrap();
        let m = Uniform::new(4, 3).unwrap();
        let d = dummy_block(m.ground(), 3);
        let em = extend_with_dummies(&m, d).unwrap();
        let fd = with_dummies(&f, 3);
        let p = split_with(&em, &fd, 2, SplitOptions { paranoid: true }).unwrap();
        assert_eq!(p.union().len(), 3);
        assert!(em.is_independent(p.union()));
        assert_eq!(f.value(p.union() - d), int(5));
    }

    #[test]
    fn accelerated_first_pass() {
        let f = Modular::new(&[1, 1, 1]).unwrap();
        let m = Uniform::new(3, 2).unwrap();
        let eps = rat(1, 2);
        assert_eq!(threshold_passes(2, &eps), 9);
        let p = accelerated_split(&m, &f, 1, &eps).unwrap();
        assert_eq!(p.parts, vec![set(&[0, 1])]);
    }

    #[test]
    fn accelerated_respects_budget_and_pads() {
        let f = Modular::new(&[5, 0, 3, 0, 2, 1]).unwrap();
        let m = Uniform::new(6, 3).unwrap();
        let d = dummy_block(m.ground(), 3);
        let ledger = QueryLedger::new();
        let em = counted(extend_with_dummies(&m, d).unwrap(), ledger.clone());
        let fd = counted(with_dummies(&f, 3), ledger.clone());
        let eps = rat(1, 3);
        let p = accelerated_split(&em, &fd, 2, &eps).unwrap();
        let budget = AcceleratedBudget::new(9, 2, 3, &eps);
        assert!(ledger.value_queries() <= budget.value_queries);
        assert!(ledger.independence_queries() <= budget.independence_queries);
        assert_eq!(p.union().len(), 3);
        assert!(p.pairwise_disjoint());
        assert_eq!(f.value(p.union() - d), int(10));
    }

    #[test]
    fn accelerated_skips_loops() {
        struct WithLoop;
        impl IndependenceOracle for WithLoop {
            fn ground(&self) -> SubsetMask {
                SubsetMask::full(3)
            }
            fn is_independent(&self, s: SubsetMask) -> bool {
                !s.contains(0) && s.len() <= 1
            }
        }
        let f = Modular::new(&[9, 1, 2]).unwrap();
        let p = accelerated_split_with(&WithLoop, &f, 1, &rat(1, 2), SplitOptions { paranoid: true }).unwrap();
        assert_eq!(p.parts, vec![set(&[2])]);
    }

    #[test]
    fn rejects_bad_parameters() {
        let f = Modular::new(&[1]).unwrap();
        let m = Uniform::new(1, 1).unwrap();
        assert!(split(&m, &f, 0).is_err());
        assert!(accelerated_split(&m, &f, 1, &rat(3, 2)).is_err());
        assert!(accelerated_split(&m, &f, 1, &rat(0, 1)).is_err());
    }
}
