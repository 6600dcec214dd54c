//! Deterministic pipage rounding of a point of the extended multilinear extension.
//!
//! Works over a dummy-extended matroid: the input is first lifted so its marginals lie in the
//! base polytope, then singleton coordinates are moved in pairs until every marginal is
//! integral, recursing into minors along the way.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::ExtensionEvaluator;
use crate::ground::SubsetMask;
use crate::matroids::{
    common_scale, grow, in_base_polytope, in_matroid_polytope, walk_subsets, IndependenceOracle,
    MinorHandle, Structure, EXHAUSTIVE_CAP,
};
use crate::mcg::width_of;
use crate::oracles::ValueOracle;
use crate::prob::{format_rational, is_fractional, Prob, Rational};
use crate::vector::{MarginalVec, SparseExtVec};

/// Raises the coordinate of the dummy set `D` until the marginals sum to `r = |D|`.
///
/// The coordinate becomes `1 − (1 − y_D)(1 − β)` with `β = (r − Σ_u marg_u) / Σ_{d∈D}(1 −
/// marg_d)`, which adds exactly `β·(1 − marg_d)` to every dummy marginal. When the dummies
/// start with zero marginals this is `β = (r − Σ_u marg_u)/r`.
///
/// `F` does not change since dummies never change `f`. Requires `marg(y) ∈ P(m)`, verified
/// whenever the ground set is small enough for an exact check.
pub fn lift_to_base_polytope<M: IndependenceOracle + ?Sized>(y: &SparseExtVec, m: &M) -> Result<SparseExtVec> {
    let d = m.dummies();
    let r = d.len();
    let width = width_of(m.ground());
    let x = y.marginals(width);
    match in_matroid_polytope(m, &x) {
        Ok(true) | Err(Error::Capability(_)) => {}
        Ok(false) => return Err(Error::contract("marginals are not in the matroid polytope")),
        Err(e) => return Err(e),
    }
    let deficit = Rational::from_integer(BigInt::from(r)) - x.sum_over(m.ground());
    if deficit.is_zero() {
        return Ok(y.clone());
    }
    let room: Rational = d.iter().map(|u| Rational::one() - x.get(u)).sum();
    if room.is_zero() || deficit > room {
        return Err(Error::contract(format!(
            "dummy coordinates cannot absorb a deficit of {}",
            format_rational(&deficit)
        )));
    }
    let beta = Prob::new(deficit / room)?;
    let mut z = y.clone();
    let cur = z.get_prob(d).cloned().unwrap_or_else(Prob::zero);
    z.set(d, cur.psum(&beta));
    Ok(z)
}

/// Makes `u` relaxed without changing any marginal: `y_{u} ← marg_u(y)` and every other key
/// `K ∋ u` is folded into `K − u`.
pub fn relax(y: &SparseExtVec, u: usize) -> SparseExtVec {
    let single = SubsetMask::singleton(u);
    let keep: Rational = y
        .iter()
        .filter(|(k, _)| k.contains(u))
        .map(|(_, p)| p.complement().into_inner())
        .product();
    let mut z = y.clone();
    for (k, p) in y.iter() {
        if k.contains(u) && k != single {
            let rest = k.without(u);
            let merged = match z.get_prob(rest) {
                Some(q) => q.psum(p),
                None => p.clone(),
            };
            z.set(rest, merged);
            z.remove(k);
        }
    }
    z.set(single, Prob::new(Rational::one() - keep).expect("marginal in [0, 1]"));
    z
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TightSet {
    /// `r(A) − x(A)` at the witness.
    pub delta: Rational,
    pub witness: SubsetMask,
}

/// `min { r(A) − x(A) : {u} ⊆ A ⊆ N' − v }` in the minor `h`, ties to the smallest `|A|` and
/// then the smallest mask. Closed forms for uniform and partition minors; exhaustive search
/// otherwise, capped at 20 ground elements.
pub fn tight_set_min(h: &MinorHandle<'_>, x: &MarginalVec, u: usize, v: usize) -> Result<TightSet> {
    let g = h.restricted_to();
    if u == v || !g.contains(u) || !g.contains(v) {
        return Err(Error::contract(format!(
            "tight-set endpoints {u}, {v} must be distinct elements of the minor"
        )));
    }
    let free = g.without(u).without(v);
    match h.structure() {
        Structure::Uniform { k } => Ok(uniform_tight(x, u, free, k)),
        Structure::Partition { parts } => Ok(partition_tight(x, u, v, g, &parts)),
        Structure::TruncatedPartition { parts, cap } => Ok(truncated_tight(x, u, v, g, &parts, cap)),
        Structure::Generic => exhaustive_tight(h, x, u, free),
    }
}

/// Elements of `pool` sorted by `x` descending, id ascending.
fn by_weight(x: &MarginalVec, pool: SubsetMask) -> Vec<usize> {
    let mut els: Vec<usize> = pool.iter().collect();
    els.sort_by(|&a, &b| x.get(b).cmp(x.get(a)).then(a.cmp(&b)));
    els
}

fn better(cand: &(Rational, SubsetMask), best: &Option<(Rational, SubsetMask)>) -> bool {
    match best {
        None => true,
        Some((bv, bs)) => {
            cand.0 < *bv || (cand.0 == *bv && (cand.1.len(), cand.1.bits()) < (bs.len(), bs.bits()))
        }
    }
}

/// Best `A ⊇ forced` within `forced ∪ pool` for a block of rank `min(|A|, cap)`.
fn block_best(x: &MarginalVec, forced: SubsetMask, pool: SubsetMask, cap: usize) -> (Rational, SubsetMask) {
    let order = by_weight(x, pool);
    let mut a = forced;
    let mut xs = x.sum_over(forced);
    let value = |a: SubsetMask, xs: &Rational| Rational::from_integer(BigInt::from(a.len().min(cap))) - xs;
    let mut best = Some((value(a, &xs), a));
    for w in order {
        a.insert(w);
        xs += x.get(w);
        let cand = (value(a, &xs), a);
        if better(&cand, &best) {
            best = Some(cand);
        }
    }
    best.unwrap()
}

fn uniform_tight(x: &MarginalVec, u: usize, free: SubsetMask, k: usize) -> TightSet {
    let (delta, witness) = block_best(x, SubsetMask::singleton(u), free, k);
    TightSet { delta, witness }
}

fn partition_tight(x: &MarginalVec, u: usize, v: usize, g: SubsetMask, parts: &[(SubsetMask, usize)]) -> TightSet {
    let covered = parts.iter().fold(SubsetMask::EMPTY, |a, &(p, _)| a | p);
    let mut blocks: Vec<(SubsetMask, usize)> = parts.iter().map(|&(p, c)| (p & g, c)).collect();
    // loops form a block of rank zero
    blocks.push((g - covered, 0));
    let mut delta = Rational::zero();
    let mut witness = SubsetMask::EMPTY;
    for (p, cap) in blocks {
        let forced = if p.contains(u) { SubsetMask::singleton(u) } else { SubsetMask::EMPTY };
        let pool = p.without(u).without(v);
        let (d, a) = block_best(x, forced, pool, cap);
        delta += d;
        witness = witness | a;
    }
    TightSet { delta, witness }
}

/// `r(A) = min(cap, R(A))`, so the minimum is the smaller of the partition optimum and
/// `cap − x(A)`, the latter minimized by `u` plus every positive coordinate.
fn truncated_tight(
    x: &MarginalVec,
    u: usize,
    v: usize,
    g: SubsetMask,
    parts: &[(SubsetMask, usize)],
    cap: usize,
) -> TightSet {
    let part = partition_tight(x, u, v, g, parts);
    let heavy: SubsetMask = g
        .without(v)
        .iter()
        .filter(|&w| w == u || x.get(w).is_positive())
        .collect();
    let whole = (
        Rational::from_integer(BigInt::from(cap)) - x.sum_over(heavy),
        heavy,
    );
    if better(&whole, &Some((part.delta.clone(), part.witness))) {
        TightSet {
            delta: whole.0,
            witness: whole.1,
        }
    } else {
        part
    }
}

fn exhaustive_tight(h: &MinorHandle<'_>, x: &MarginalVec, u: usize, free: SubsetMask) -> Result<TightSet> {
    let n = free.len() + 2;
    if n > EXHAUSTIVE_CAP {
        return Err(Error::capability(format!(
            "tight-set search over {n} elements exceeds the exhaustive cap of {EXHAUSTIVE_CAP}"
        )));
    }
    let base = h.base();
    let b0 = h.contraction_basis();
    let b1 = grow(base, b0, SubsetMask::singleton(u));
    let offset = b1.len() - b0.len();
    let elements: Vec<usize> = free.iter().collect();
    let mut vals: Vec<&Rational> = elements.iter().map(|&w| x.get(w)).collect();
    vals.push(x.get(u));
    let (mut w, l) = common_scale(&vals);
    let xu = w.pop().unwrap();
    let mut best: Option<(BigInt, SubsetMask)> = None;
    walk_subsets(base, b1, &elements, &w, &mut |s, r, sum| {
        let a = s.with(u);
        let val = &l * BigInt::from(r + offset) - (sum + &xu);
        let take = match &best {
            None => true,
            Some((bv, bs)) => val < *bv || (val == *bv && (a.len(), a.bits()) < (bs.len(), bs.bits())),
        };
        if take {
            best = Some((val, a));
        }
    });
    let (val, witness) = best.unwrap();
    Ok(TightSet {
        delta: Rational::new(val, l),
        witness,
    })
}

/// Moves mass from `{v}` to `{u}` until a rank constraint becomes tight or `y_{v}` is exhausted.
/// Returns the new vector and the constraint `A'` that stopped the movement.
pub fn hit_constraint(
    y: &SparseExtVec,
    h: &MinorHandle<'_>,
    width: usize,
    u: usize,
    v: usize,
) -> Result<(SparseExtVec, SubsetMask)> {
    let x = y.marginals(width);
    let tight = tight_set_min(h, &x, u, v)?;
    let yu = y.get(SubsetMask::singleton(u));
    let yv = y.get(SubsetMask::singleton(v));
    let mut z = y.clone();
    let (nu, nv, a) = if yv < tight.delta {
        (yu + &yv, Rational::zero(), SubsetMask::singleton(v))
    } else {
        (yu + &tight.delta, yv - &tight.delta, tight.witness)
    };
    z.set(SubsetMask::singleton(u), Prob::new(nu)?);
    z.set(SubsetMask::singleton(v), Prob::new(nv)?);
    Ok((z, a))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PipageOptions {
    /// Assert the invariants after every mutation: `F` never decreases, marginals stay in the
    /// base polytope of the current minor (ground sets up to 10), the `ff` and iteration
    /// bounds. Costs extra `F` evaluations and independence queries.
    pub paranoid: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipageStats {
    pub iterations: usize,
    pub relax_calls: usize,
    pub max_depth: usize,
    pub ff_initial: usize,
    pub max_ff: usize,
    pub f_evaluations: usize,
}

#[derive(Clone, Debug)]
pub struct PipageOutcome {
    /// `{u : marg_u(y) = 1} ∖ D`.
    pub set: SubsetMask,
    pub y: SparseExtVec,
    pub stats: PipageStats,
}

struct Pipage<'e, O> {
    ev: &'e ExtensionEvaluator<O>,
    width: usize,
    n: usize,
    relaxed: SubsetMask,
    y: SparseExtVec,
    stats: PipageStats,
    opts: PipageOptions,
    // F(y) tracked in paranoid mode
    current: Option<Rational>,
}

pub(crate) fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

impl<O: ValueOracle> Pipage<'_, O> {
    fn eval(&mut self, y: &SparseExtVec) -> Result<Rational> {
        self.stats.f_evaluations += 1;
        self.ev.eval_f(y)
    }

    fn assign(&mut self, y: SparseExtVec, value: Option<Rational>, h: &MinorHandle<'_>) -> Result<()> {
        self.stats.max_ff = self.stats.max_ff.max(y.ff());
        if self.opts.paranoid {
            let bound = self.stats.ff_initial + 2 + ceil_log2(self.n);
            if y.ff() > bound {
                return Err(Error::contract(format!("ff(y) = {} exceeds {bound}", y.ff())));
            }
            let now = match value {
                Some(v) => v,
                None => self.eval(&y)?,
            };
            if let Some(prev) = &self.current {
                if now < *prev {
                    return Err(Error::contract(format!(
                        "F decreased from {} to {}",
                        format_rational(prev),
                        format_rational(&now)
                    )));
                }
            }
            self.current = Some(now);
            if h.restricted_to().len() <= 10 {
                let x = y.marginals(self.width).restricted(h.restricted_to());
                if !in_base_polytope(h, &x)? {
                    return Err(Error::contract("marginals left the base polytope of the minor"));
                }
            }
        }
        self.y = y;
        Ok(())
    }

    fn fractional_singleton(&self, w: usize) -> bool {
        is_fractional(&self.y.get(SubsetMask::singleton(w)))
    }

    fn run(&mut self, h: MinorHandle<'_>, depth: usize) -> Result<()> {
        self.stats.max_depth = self.stats.max_depth.max(depth);
        if self.opts.paranoid && depth > ceil_log2(self.n) {
            return Err(Error::contract(format!("recursion depth {depth} exceeds ⌈log₂ n⌉")));
        }
        let g = h.restricted_to();
        while !self.y.marginals(self.width).is_integral_on(g) {
            self.stats.iterations += 1;
            if self.stats.iterations > 2 * self.n {
                return Err(Error::contract(format!(
                    "more than 2n = {} rounding iterations",
                    2 * self.n
                )));
            }
            let mut s: Vec<usize> = (self.relaxed & g)
                .iter()
                .filter(|&w| self.fractional_singleton(w))
                .collect();
            while s.len() < 2 {
                let x = self.y.marginals(self.width);
                let w = (g - self.relaxed)
                    .iter()
                    .find(|&w| is_fractional(x.get(w)))
                    .ok_or_else(|| Error::contract("no fractional element left to relax"))?;
                let z = relax(&self.y, w);
                self.relaxed.insert(w);
                self.stats.relax_calls += 1;
                self.assign(z, None, &h)?;
                s = (self.relaxed & g)
                    .iter()
                    .filter(|&w| self.fractional_singleton(w))
                    .collect();
            }
            if self.opts.paranoid && s.len() > 2 {
                return Err(Error::contract(format!("|S| = {} after relaxing", s.len())));
            }
            let (u, v) = (s[0], s[1]);
            let (plus, a_plus) = hit_constraint(&self.y, &h, self.width, u, v)?;
            let (minus, a_minus) = hit_constraint(&self.y, &h, self.width, v, u)?;
            let f_plus = self.eval(&plus)?;
            let f_minus = self.eval(&minus)?;
            let c = if f_plus >= f_minus {
                self.assign(plus, Some(f_plus), &h)?;
                a_plus
            } else {
                self.assign(minus, Some(f_minus), &h)?;
                a_minus
            };
            if self.fractional_singleton(u) && self.fractional_singleton(v) {
                let next = if 2 * c.len() <= g.len() { h.restrict(c) } else { h.contract(c) };
                self.run(next, depth + 1)?;
            }
        }
        Ok(())
    }
}

/// Rounds `y` (with `marg(y)` in the base polytope of the dummy-extended `m`) to an
/// independent set `T` of the original matroid with `f(T) ≥ F(y)`.
pub fn deterministic_pipage<M, O>(
    m: &M,
    ev: &ExtensionEvaluator<O>,
    y: &SparseExtVec,
    opts: PipageOptions,
) -> Result<PipageOutcome>
where
    M: IndependenceOracle,
    O: ValueOracle,
{
    let width = width_of(m.ground());
    let n = m.ground().len();
    let mut run = Pipage {
        ev,
        width,
        n,
        relaxed: SubsetMask::EMPTY,
        y: y.clone(),
        stats: PipageStats {
            ff_initial: y.ff(),
            max_ff: y.ff(),
            ..PipageStats::default()
        },
        opts,
        current: None,
    };
    if opts.paranoid {
        run.current = Some(run.eval(y)?);
    }
    run.run(MinorHandle::whole(m), 0)?;
    let x = run.y.marginals(width);
    Ok(PipageOutcome {
        set: x.ones() & (m.ground() - m.dummies()),
        y: run.y,
        stats: run.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroids::{dummy_block, extend_with_dummies, Partition, Uniform};
    use crate::oracles::{with_dummies, Modular};
    use crate::prob::{int, rat};

    fn set(xs: &[usize]) -> SubsetMask {
        xs.iter().copied().collect()
    }

    fn p(n: i64, d: i64) -> Prob {
        Prob::new(rat(n, d)).unwrap()
    }

    #[test]
    fn lift_examples() {
        let m = Uniform::new(2, 2).unwrap();
        let d = dummy_block(m.ground(), 2);
        let em = extend_with_dummies(&m, d).unwrap();
        let y = SparseExtVec::indicator(set(&[0]));
        let z = lift_to_base_polytope(&y, &em).unwrap();
        assert_eq!(z.get(d), rat(1, 2));
        let x = z.marginals(4);
        assert_eq!(x.total(), int(2));
        assert!(in_base_polytope(&em, &x).unwrap());

        let full = SparseExtVec::indicator(set(&[0, 1]));
        assert_eq!(lift_to_base_polytope(&full, &em).unwrap(), full);
        let zero = lift_to_base_polytope(&SparseExtVec::zero(), &em).unwrap();
        assert_eq!(zero.marginals(4), MarginalVec::indicator(4, d));
    }

    #[test]
    fn lift_accounts_for_dummy_mass() {
        let m = Uniform::new(2, 2).unwrap();
        let d = dummy_block(m.ground(), 2);
        let em = extend_with_dummies(&m, d).unwrap();
        let y = SparseExtVec::from_entries([(set(&[0, 2]), p(1, 2))]);
        let z = lift_to_base_polytope(&y, &em).unwrap();
        assert!(in_base_polytope(&em, &z.marginals(4)).unwrap());
        assert_eq!(z.ff(), y.ff() + 1);
    }

    #[test]
    fn relax_examples() {
        let y = SparseExtVec::from_entries([(set(&[0]), p(1, 2)), (set(&[1]), p(1, 3))]);
        assert_eq!(relax(&y, 0), y);
        let y = SparseExtVec::from_entries([(set(&[0, 1]), p(1, 2))]);
        let z = relax(&y, 0);
        assert_eq!(z, SparseExtVec::from_entries([(set(&[0]), p(1, 2)), (set(&[1]), p(1, 2))]));
        assert_eq!(z.marginals(2), y.marginals(2));
        let y = SparseExtVec::indicator(set(&[0, 1]));
        assert_eq!(
            relax(&y, 0),
            SparseExtVec::from_entries([(set(&[0]), Prob::one()), (set(&[1]), Prob::one())])
        );
    }

    #[test]
    fn truncated_tight_sets_match_exhaustive() {
        use crate::matroids::{dummy_block, extend_with_dummies, Partition};
        struct Opaque<'a>(&'a dyn IndependenceOracle);
        impl IndependenceOracle for Opaque<'_> {
            fn ground(&self) -> SubsetMask {
                self.0.ground()
            }
            fn is_independent(&self, s: SubsetMask) -> bool {
                self.0.is_independent(s)
            }
        }
        let p = Partition::new(5, &[(vec![0, 1, 2], 1), (vec![3, 4], 1)]).unwrap();
        let e = extend_with_dummies(p, dummy_block(SubsetMask::full(5), 2)).unwrap();
        let o = Opaque(&e);
        let g = e.ground();
        let vals = [rat(0, 1), rat(1, 4), rat(1, 2), rat(3, 4), rat(1, 1)];
        for seed in 0..60u64 {
            let x = MarginalVec::from_vec(
                (0..7)
                    .map(|i| vals[((seed * 3 + i as u64 * (seed % 7 + 1)) % 5) as usize].clone())
                    .collect(),
            );
            for d in [SubsetMask::EMPTY, SubsetMask::singleton(0), SubsetMask::singleton(5)] {
                let hs = MinorHandle::new(&e, g - d, d).unwrap();
                let ho = MinorHandle::new(&o, g - d, d).unwrap();
                for u in (g - d).iter() {
                    for v in (g - d).iter().filter(|&v| v != u) {
                        let a = tight_set_min(&hs, &x, u, v).unwrap();
                        let b = tight_set_min(&ho, &x, u, v).unwrap();
                        assert_eq!(a, b, "u={u} v={v} d={d:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn tight_set_examples() {
        let m = Uniform::new(2, 1).unwrap();
        let h = MinorHandle::whole(&m);
        let x = MarginalVec::from_vec(vec![rat(1, 2), rat(1, 2)]);
        let t = tight_set_min(&h, &x, 0, 1).unwrap();
        assert_eq!((t.delta, t.witness), (rat(1, 2), set(&[0])));

        let pm = Partition::new(3, &[(vec![0, 1], 1), (vec![2], 1)]).unwrap();
        let h = MinorHandle::whole(&pm);
        let x = MarginalVec::from_vec(vec![rat(1, 2), rat(1, 2), rat(1, 1)]);
        let t = tight_set_min(&h, &x, 0, 1).unwrap();
        assert_eq!((t.delta, t.witness), (rat(1, 2), set(&[0])));

        let x = MarginalVec::from_vec(vec![rat(1, 1), rat(0, 1)]);
        let t = tight_set_min(&MinorHandle::whole(&m), &x, 0, 1).unwrap();
        assert_eq!(t.delta, int(0));
    }

    #[test]
    fn hit_constraint_examples() {
        let m = Uniform::new(2, 1).unwrap();
        let h = MinorHandle::whole(&m);
        let y = SparseExtVec::from_entries([(set(&[0]), p(1, 2)), (set(&[1]), p(1, 2))]);
        let (z, a) = hit_constraint(&y, &h, 2, 0, 1).unwrap();
        assert_eq!(z, SparseExtVec::indicator(set(&[0])));
        assert_eq!(a, set(&[0]));

        let y = SparseExtVec::indicator(set(&[0]));
        let (z, a) = hit_constraint(&y, &h, 2, 0, 1).unwrap();
        assert_eq!(z, y);
        assert_eq!(a, set(&[0]));

        let pm = Partition::new(3, &[(vec![0, 1], 1), (vec![2], 1)]).unwrap();
        let y = SparseExtVec::from_entries([(set(&[0]), p(1, 2)), (set(&[1]), p(1, 2)), (set(&[2]), Prob::one())]);
        let (z, a) = hit_constraint(&y, &MinorHandle::whole(&pm), 3, 0, 1).unwrap();
        assert_eq!(z.get(set(&[0])), int(1));
        assert_eq!(z.get(set(&[1])), int(0));
        assert_eq!(a, set(&[0]));
    }

    #[test]
    fn pipage_hand_trace() {
        let f = Modular::new(&[2, 1]).unwrap();
        let m = Uniform::new(2, 1).unwrap();
        let d = dummy_block(m.ground(), 1);
        let em = extend_with_dummies(&m, d).unwrap();
        let fd = with_dummies(&f, 1);
        let ev = ExtensionEvaluator::new(&fd);
        let y = SparseExtVec::from_entries([(set(&[0]), p(1, 2)), (set(&[1]), p(1, 2))]);
        assert_eq!(ev.eval_f(&y).unwrap(), rat(3, 2));
        let out = deterministic_pipage(&em, &ev, &y, PipageOptions { paranoid: true }).unwrap();
        assert_eq!(out.set, set(&[0]));
        assert_eq!(out.stats.iterations, 1);
        assert!(m.is_independent(out.set));
    }

    #[test]
    fn pipage_integral_input_returns_immediately() {
        let f = Modular::new(&[2, 1, 1]).unwrap();
        let m = Uniform::new(3, 2).unwrap();
        let d = dummy_block(m.ground(), 2);
        let em = extend_with_dummies(&m, d).unwrap();
        let fd = with_dummies(&f, 2);
        let ev = ExtensionEvaluator::new(&fd);
        let y = SparseExtVec::from_entries([(set(&[0, 3]), Prob::one())]);
        let out = deterministic_pipage(&em, &ev, &y, PipageOptions::default()).unwrap();
        assert_eq!(out.set, set(&[0]));
        assert_eq!(out.stats.iterations, 0);
    }
}
