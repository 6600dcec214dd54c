//! Exact evaluation of the extended multilinear extension `F`, of `g_y(A) = F(χ_A ∨ y)`, and of
//! the standard multilinear extension `F̄`.
//!
//! `F(y)` is the expected value of `f` on the union of independently drawn keys, key `S` drawn
//! with probability `y_S`. Keys equal to one are folded into a fixed union, so an evaluation
//! enumerates only the `2^ff(y)` choices of fractional keys and costs exactly that many value
//! queries. Weights are kept as integers over the common denominator `∏ q_S`.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ground::SubsetMask;
use crate::oracles::{Value, ValueOracle};
use crate::prob::{format_rational, is_fractional, to_f64, Prob, Rational};
use crate::vector::{MarginalVec, SparseExtVec};

pub const DEFAULT_FF_CAP: usize = 24;

/// Cap on fractional coordinates for the exact `F̄` evaluator.
pub const FBAR_EXACT_CAP: usize = 20;

/// Term tables are materialized up to this many fractional keys; beyond it the enumeration is
/// regenerated on every call.
const TABLE_CAP: usize = 18;

pub struct ExtensionEvaluator<O> {
    objective: O,
    ff_cap: usize,
}

/// One fractional coordinate `p/q` as integer factors for the include and exclude branches.
struct Factor {
    key: SubsetMask,
    take: BigInt,
    skip: BigInt,
}

/// Weights are integers over `denom = ∏ q_S`. When `denom` fits in 63 bits every partial
/// product does too, and the enumeration runs on machine words.
struct Expansion {
    fixed: SubsetMask,
    factors: Vec<Factor>,
    small: Option<Vec<(SubsetMask, u64, u64)>>,
    denom: BigInt,
}

#[derive(Clone, Copy)]
enum Weight<'a> {
    Small(u64),
    Big(&'a BigInt),
}

impl Expansion {
    fn new(entries: impl Iterator<Item = (SubsetMask, Rational)>) -> Self {
        let mut fixed = SubsetMask::EMPTY;
        let mut factors = Vec::new();
        let mut denom = BigInt::one();
        for (key, v) in entries {
            if v.is_one() {
                fixed = fixed | key;
            } else if is_fractional(&v) {
                let q = v.denom().clone();
                let p = v.numer().clone();
                denom *= &q;
                factors.push(Factor {
                    key,
                    skip: &q - &p,
                    take: p,
                });
            }
        }
        let small = if denom.bits() <= 63 {
            Some(
                factors
                    .iter()
                    .map(|f| (f.key, f.take.to_u64().unwrap(), f.skip.to_u64().unwrap()))
                    .collect(),
            )
        } else {
            None
        };
        Expansion {
            fixed,
            factors,
            small,
            denom,
        }
    }

    /// Calls `visit(union, weight)` once per subset of the fractional keys.
    fn for_each(&self, visit: &mut dyn FnMut(SubsetMask, Weight<'_>)) {
        fn small(fs: &[(SubsetMask, u64, u64)], union: SubsetMask, w: u64, visit: &mut dyn FnMut(SubsetMask, Weight<'_>)) {
            let Some((&(key, take, skip), rest)) = fs.split_first() else {
                visit(union, Weight::Small(w));
                return;
            };
            small(rest, union, w * skip, visit);
            small(rest, union | key, w * take, visit);
        }
        fn big(fs: &[Factor], union: SubsetMask, w: &BigInt, visit: &mut dyn FnMut(SubsetMask, Weight<'_>)) {
            let Some((f, rest)) = fs.split_first() else {
                visit(union, Weight::Big(w));
                return;
            };
            big(rest, union, &(w * &f.skip), visit);
            big(rest, union | f.key, &(w * &f.take), visit);
        }
        match &self.small {
            Some(fs) => small(fs, self.fixed, 1, visit),
            None => big(&self.factors, self.fixed, &BigInt::one(), visit),
        }
    }
}

/// Exact accumulator for `Σ value · weight`.
#[derive(Default)]
struct Accumulator {
    small: i128,
    big: BigInt,
    exact: Rational,
}

impl Accumulator {
    fn add(&mut self, v: Value, w: Weight<'_>) {
        match (v, w) {
            (Value::Int(0), _) => {}
            (Value::Int(k), Weight::Small(w)) => {
                // |k| ≤ 2^63 and w < 2^63, so the product fits
                let p = k as i128 * w as i128;
                match self.small.checked_add(p) {
                    Some(s) => self.small = s,
                    None => {
                        self.big += self.small;
                        self.small = p;
                    }
                }
            }
            (Value::Int(k), Weight::Big(w)) => self.big += w * k,
            (Value::Exact(r), w) => {
                if !r.is_zero() {
                    let w = match w {
                        Weight::Small(w) => BigInt::from(w),
                        Weight::Big(w) => w.clone(),
                    };
                    self.exact += r * Rational::from_integer(w);
                }
            }
        }
    }

    fn finish(self, denom: &BigInt) -> Rational {
        let total = self.big + self.small;
        (Rational::from_integer(total) + self.exact) / Rational::from_integer(denom.clone())
    }
}

/// `F(y)` prepared for repeated evaluations of `g_y(A)` at different `A`.
pub struct Prepared {
    ff: usize,
    denom: BigInt,
    body: PreparedBody,
}

enum PreparedBody {
    Small(Vec<(SubsetMask, u64)>),
    Big(Vec<(SubsetMask, BigInt)>),
    Stream(Expansion),
}

impl Prepared {
    /// Value queries per call to [`Prepared::eval`].
    pub fn cost(&self) -> u64 {
        1u64 << self.ff
    }

    pub fn ff(&self) -> usize {
        self.ff
    }

    /// `g_y(a) = F(χ_a ∨ y) = Σ_J f(a ∪ ⋃J) · Pr[J]`; exactly `2^ff(y)` queries.
    pub fn eval<O: ValueOracle + ?Sized>(&self, f: &O, a: SubsetMask) -> Rational {
        let mut acc = Accumulator::default();
        match &self.body {
            PreparedBody::Small(terms) => {
                for &(u, w) in terms {
                    acc.add(f.query(a | u), Weight::Small(w));
                }
            }
            PreparedBody::Big(terms) => {
                for (u, w) in terms {
                    acc.add(f.query(a | *u), Weight::Big(w));
                }
            }
            PreparedBody::Stream(e) => e.for_each(&mut |u, w| acc.add(f.query(a | u), w)),
        }
        acc.finish(&self.denom)
    }
}

impl<O: ValueOracle> ExtensionEvaluator<O> {
    pub fn new(objective: O) -> Self {
        ExtensionEvaluator {
            objective,
            ff_cap: DEFAULT_FF_CAP,
        }
    }

    pub fn with_ff_cap(mut self, cap: usize) -> Self {
        self.ff_cap = cap;
        self
    }

    pub fn ff_cap(&self) -> usize {
        self.ff_cap
    }

    pub fn objective(&self) -> &O {
        &self.objective
    }

    fn check_cap(&self, ff: usize) -> Result<()> {
        if ff > self.ff_cap {
            return Err(Error::capability(format!(
                "ff(y) = {ff} exceeds the evaluation cap of {} (2^{ff} value queries)",
                self.ff_cap
            )));
        }
        Ok(())
    }

    pub fn prepare(&self, y: &SparseExtVec) -> Result<Prepared> {
        self.check_cap(y.ff())?;
        let e = Expansion::new(y.iter().map(|(k, p)| (k, p.value().clone())));
        let denom = e.denom.clone();
        let body = if e.factors.len() > TABLE_CAP {
            PreparedBody::Stream(e)
        } else if e.small.is_some() {
            let mut terms = Vec::with_capacity(1 << e.factors.len());
            e.for_each(&mut |u, w| {
                if let Weight::Small(w) = w {
                    terms.push((u, w));
                }
            });
            PreparedBody::Small(terms)
        } else {
            let mut terms = Vec::with_capacity(1 << e.factors.len());
            e.for_each(&mut |u, w| {
                if let Weight::Big(w) = w {
                    terms.push((u, w.clone()));
                }
            });
            PreparedBody::Big(terms)
        };
        Ok(Prepared {
            ff: y.ff(),
            denom,
            body,
        })
    }

    /// `F(y)`; exactly `2^ff(y)` value queries.
    pub fn eval_f(&self, y: &SparseExtVec) -> Result<Rational> {
        self.check_cap(y.ff())?;
        let e = Expansion::new(y.iter().map(|(k, p)| (k, p.value().clone())));
        let mut acc = Accumulator::default();
        e.for_each(&mut |u, w| acc.add(self.objective.query(u), w));
        Ok(acc.finish(&e.denom))
    }

    /// `g_y(a) = F(χ_a ∨ y)`; at most `2^ff(y)` value queries.
    pub fn eval_g(&self, y: &SparseExtVec, a: SubsetMask) -> Result<Rational> {
        self.eval_f(&y.join_indicator(a))
    }

    /// `∂F/∂y_s`, exact by multilinearity: `F(y | y_s ← 1) − F(y | y_s ← 0)`.
    pub fn partial_wrt(&self, y: &SparseExtVec, s: SubsetMask) -> Result<Rational> {
        let mut hi = y.clone();
        hi.set(s, Prob::one());
        let mut lo = y.clone();
        lo.remove(s);
        Ok(self.eval_f(&hi)? - self.eval_f(&lo)?)
    }

    /// `F̄(x) = E[f(R(x))]` exactly; `2^k` queries for `k` fractional coordinates (at most 20).
    pub fn eval_fbar_exact(&self, x: &MarginalVec) -> Result<Rational> {
        check_unit(x)?;
        let k = x.fractional().len();
        if k > FBAR_EXACT_CAP {
            return Err(Error::capability(format!(
                "{k} fractional coordinates exceed the exact multilinear cap of {FBAR_EXACT_CAP}"
            )));
        }
        let e = Expansion::new(
            x.as_slice()
                .iter()
                .enumerate()
                .map(|(u, v)| (SubsetMask::singleton(u), v.clone())),
        );
        let mut acc = Accumulator::default();
        e.for_each(&mut |u, w| acc.add(self.objective.query(u), w));
        Ok(acc.finish(&e.denom))
    }

    /// Monte Carlo estimate of `F̄(x)` from `samples` independent-inclusion draws; one query each.
    pub fn eval_fbar_sample(&self, x: &MarginalVec, samples: u64, seed: u64) -> Result<f64> {
        check_unit(x)?;
        if samples == 0 {
            return Err(Error::contract("at least one sample is required"));
        }
        let probs: Vec<f64> = x.as_slice().iter().map(to_f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sum = 0.0;
        for _ in 0..samples {
            let s: SubsetMask = probs
                .iter()
                .enumerate()
                .filter(|(_, &p)| rng.gen::<f64>() < p)
                .map(|(u, _)| u)
                .collect();
            sum += to_f64(&self.objective.value(s));
        }
        Ok(sum / samples as f64)
    }

    /// `g_y` as a value oracle over the same ground set.
    pub fn g_oracle(&self, y: &SparseExtVec) -> Result<GOracle<'_, O>> {
        Ok(GOracle {
            objective: &self.objective,
            prepared: self.prepare(y)?,
        })
    }
}

fn check_unit(x: &MarginalVec) -> Result<()> {
    if let Some(v) = x
        .as_slice()
        .iter()
        .find(|v| v.is_negative() || **v > Rational::one())
    {
        return Err(Error::contract(format!(
            "coordinate {} outside [0, 1]",
            format_rational(v)
        )));
    }
    Ok(())
}

/// `A ↦ F(χ_A ∨ y)` for a fixed `y`. Each query costs `2^ff(y)` queries to `f`.
pub struct GOracle<'a, O> {
    objective: &'a O,
    prepared: Prepared,
}

impl<O> GOracle<'_, O> {
    pub fn cost(&self) -> u64 {
        self.prepared.cost()
    }
}

impl<O: ValueOracle> ValueOracle for GOracle<'_, O> {
    fn ground(&self) -> SubsetMask {
        self.objective.ground()
    }

    fn query(&self, set: SubsetMask) -> Value {
        Value::Exact(self.prepared.eval(self.objective, set))
    }

    fn is_monotone(&self) -> bool {
        self.objective.is_monotone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{counted, Coverage, Cut, Modular, QueryLedger};
    use crate::prob::{int, rat};

    fn set(xs: &[usize]) -> SubsetMask {
        xs.iter().copied().collect()
    }

    fn p(n: i64, d: i64) -> Prob {
        Prob::new(rat(n, d)).unwrap()
    }

    fn card(n: usize) -> Modular {
        Modular::new(&vec![1; n]).unwrap()
    }

    /// Reference: enumerate all subsets of the support, including keys equal to one.
    fn naive_f(f: &dyn ValueOracle, y: &SparseExtVec) -> Rational {
        let keys: Vec<(SubsetMask, Rational)> = y.iter().map(|(k, p)| (k, p.value().clone())).collect();
        let mut total = Rational::zero();
        for pick in 0u32..(1 << keys.len()) {
            let mut u = SubsetMask::EMPTY;
            let mut w = Rational::one();
            for (i, (k, v)) in keys.iter().enumerate() {
                if pick >> i & 1 == 1 {
                    u = u | *k;
                    w *= v;
                } else {
                    w *= Rational::one() - v;
                }
            }
            total += f.value(u) * w;
        }
        total
    }

    #[test]
    fn evaluation_examples() {
        let f = card(2);
        let ev = ExtensionEvaluator::new(&f);
        assert_eq!(ev.eval_f(&SparseExtVec::indicator(set(&[0, 1]))).unwrap(), int(2));
        assert_eq!(ev.eval_f(&SparseExtVec::zero()).unwrap(), int(0));
        let y = SparseExtVec::from_entries([(set(&[0]), p(1, 2)), (set(&[1]), p(1, 2))]);
        assert_eq!(ev.eval_f(&y).unwrap(), int(1));

        let y = SparseExtVec::from_entries([(set(&[1]), p(1, 2))]);
        assert_eq!(ev.eval_g(&y, set(&[0])).unwrap(), rat(3, 2));
        assert_eq!(ev.eval_g(&y, SubsetMask::EMPTY).unwrap(), ev.eval_f(&y).unwrap());
        assert_eq!(ev.eval_g(&SparseExtVec::zero(), set(&[0, 1])).unwrap(), int(2));
    }

    #[test]
    fn partial_examples() {
        let f = Modular::new(&[1, 0, 0]).unwrap();
        let ev = ExtensionEvaluator::new(&f);
        assert_eq!(ev.partial_wrt(&SparseExtVec::zero(), set(&[0])).unwrap(), int(1));
        let y = SparseExtVec::from_entries([(set(&[0]), p(1, 3))]);
        assert_eq!(ev.partial_wrt(&y, set(&[1, 2])).unwrap(), int(0));
    }

    #[test]
    fn fbar_examples() {
        let f = Modular::new(&[3, 5]).unwrap();
        let ev = ExtensionEvaluator::new(&f);
        let x = MarginalVec::from_vec(vec![rat(1, 2), rat(1, 3)]);
        assert_eq!(ev.eval_fbar_exact(&x).unwrap(), rat(3, 2) + rat(5, 3));
        let x = MarginalVec::indicator(2, set(&[1]));
        assert_eq!(ev.eval_fbar_exact(&x).unwrap(), int(5));
        assert_eq!(ev.eval_fbar_sample(&x, 10, 1).unwrap(), 5.0);
        let c = card(2);
        let ev = ExtensionEvaluator::new(&c);
        let half = MarginalVec::from_vec(vec![rat(1, 2), rat(1, 2)]);
        assert_eq!(ev.eval_fbar_exact(&half).unwrap(), int(1));
        let a = ev.eval_fbar_sample(&half, 1000, 7).unwrap();
        assert_eq!(a, ev.eval_fbar_sample(&half, 1000, 7).unwrap());
    }

    #[test]
    fn sampling_converges() {
        let f = Coverage::new(&[vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3], vec![4]], &[1, 2, 1, 3, 1]).unwrap();
        let ev = ExtensionEvaluator::new(&f);
        let x = MarginalVec::from_vec(vec![rat(1, 3), rat(1, 2), rat(3, 4), rat(1, 5), rat(2, 3)]);
        let exact = to_f64(&ev.eval_fbar_exact(&x).unwrap());
        let n = 100_000;
        let est = ev.eval_fbar_sample(&x, n, 42).unwrap();
        // f ≤ 8 so the standard deviation of one draw is below 4
        let sigma = 4.0 / (n as f64).sqrt();
        assert!((est - exact).abs() <= 3.0 * sigma, "{est} vs {exact}");
    }

    #[test]
    fn query_count_is_two_to_ff() {
        let ledger = QueryLedger::new();
        let f = counted(card(6), ledger.clone());
        let ev = ExtensionEvaluator::new(&f);
        let y = SparseExtVec::from_entries([
            (set(&[0]), p(1, 2)),
            (set(&[1, 2]), p(1, 3)),
            (set(&[3]), Prob::one()),
            (set(&[2, 4]), p(2, 5)),
            (set(&[5]), Prob::one()),
        ]);
        ev.eval_f(&y).unwrap();
        assert_eq!(ledger.value_queries(), 8);
        let before = ledger.value_queries();
        let prep = ev.prepare(&y).unwrap();
        for a in [set(&[0]), set(&[1, 5]), SubsetMask::EMPTY] {
            assert_eq!(prep.eval(&f, a), ev.eval_g(&y, a).unwrap());
        }
        // three prepared calls plus three eval_g calls (one joins an existing fractional key)
        assert_eq!(ledger.value_queries() - before, 8 * 3 + 4 + 8 + 8);
    }

    #[test]
    fn capability_cap_names_ff() {
        let f = card(30);
        let ev = ExtensionEvaluator::new(&f).with_ff_cap(4);
        let y = SparseExtVec::from_entries((0..5).map(|u| (set(&[u]), p(1, 2))));
        let err = ev.eval_f(&y).unwrap_err();
        assert!(matches!(err, Error::Capability(_)));
        assert!(err.to_string().contains("ff(y) = 5"));
    }

    #[test]
    fn streaming_agrees_with_naive() {
        let f = Cut::new(20, &(0..19).map(|i| (i, i + 1, 1 + i as i64 % 3)).collect::<Vec<_>>()).unwrap();
        let ev = ExtensionEvaluator::new(&f);
        let y = SparseExtVec::from_entries((0..TABLE_CAP + 1).map(|u| (set(&[u, u + 1]), p(1, 2 + u as i64 % 3))));
        let prep = ev.prepare(&y).unwrap();
        assert!(matches!(prep.body, PreparedBody::Stream(_)));
        assert_eq!(prep.eval(&f, SubsetMask::EMPTY), ev.eval_f(&y).unwrap());
        let small = SparseExtVec::from_entries((0..6).map(|u| (set(&[u, u + 3]), p(1, 2 + u as i64))));
        assert_eq!(ev.eval_f(&small).unwrap(), naive_f(&f, &small));
    }

    #[test]
    fn wide_denominators_agree_with_naive() {
        let f = Coverage::new(&[vec![0, 1], vec![1], vec![2, 3], vec![0, 3]], &[2, 1, 4, 3]).unwrap();
        let ev = ExtensionEvaluator::new(&f);
        let y = SparseExtVec::from_entries([
            (set(&[0]), p(1, 1_000_003)),
            (set(&[1, 2]), p(999_999, 1_000_033)),
            (set(&[3]), p(5, 2_147_483_647)),
            (set(&[0, 3]), p(2, 3)),
        ]);
        let prep = ev.prepare(&y).unwrap();
        assert!(matches!(prep.body, PreparedBody::Big(_)));
        assert_eq!(ev.eval_f(&y).unwrap(), naive_f(&f, &y));
        assert_eq!(prep.eval(&f, set(&[1])), naive_f(&f, &y.join_indicator(set(&[1]))));
    }
}
