//! Deterministic measured continuous greedy over the extended multilinear extension, and the
//! query-free random decomposition of its output into independent sets.

use num_bigint::{BigInt, RandBigInt};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::extension::ExtensionEvaluator;
use crate::ground::SubsetMask;
use crate::matroids::IndependenceOracle;
use crate::oracles::{counted, QueryLedger, ValueOracle};
use crate::prob::{format_rational, Prob, Rational};
use crate::split::{accelerated_split_with, Partition, SplitOptions};
use crate::vector::{MarginalVec, SparseExtVec};

/// Step parameters derived from the requested accuracy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct McgParams {
    pub eps_raw: Rational,
    /// `1/⌈1/ε⌉`, so that `1/ε` parts and `1/δ` iterations are integers.
    pub eps_effective: Rational,
    /// `ε_eff³`.
    pub delta: Rational,
    pub parts: usize,
    pub iterations: usize,
}

impl McgParams {
    pub fn new(eps: &Rational) -> Result<Self> {
        if !eps.is_positive() || *eps > Rational::one() {
            return Err(Error::contract(format!(
                "ε = {} must lie in (0, 1]",
                format_rational(eps)
            )));
        }
        let inv = (Rational::one() / eps).ceil().to_integer();
        let parts = inv
            .to_usize()
            .ok_or_else(|| Error::capability("1/ε does not fit in a machine word"))?;
        let iterations = parts
            .checked_pow(3)
            .ok_or_else(|| Error::capability("1/ε³ iterations overflow"))?;
        let eps_effective = Rational::new(BigInt::one(), inv);
        let delta = eps_effective.pow(3);
        Ok(McgParams {
            eps_raw: eps.clone(),
            eps_effective,
            delta,
            parts,
            iterations,
        })
    }

    /// Upper bound on `ff` of the final point: each iteration adds at most `1/ε` keys.
    pub fn projected_ff(&self) -> usize {
        self.parts.saturating_mul(self.iterations)
    }
}

#[derive(Clone, Debug)]
pub struct McgRecord {
    /// 1-based iteration index.
    pub i: usize,
    pub parts: Partition,
    pub y_before: SparseExtVec,
    pub y_after: SparseExtVec,
    /// `F(y_after)`, when requested.
    pub value_after: Option<Rational>,
    /// Queries to `g_{y_before}` issued by the split call.
    pub g_queries: u64,
    /// Independence queries issued by the split call.
    pub independence_queries: u64,
}

impl McgRecord {
    pub fn union(&self) -> SubsetMask {
        self.parts.union()
    }
}

#[derive(Clone, Debug)]
pub struct McgTrace {
    pub params: McgParams,
    /// Number of coordinates of the marginal vectors (the augmented ground width).
    pub width: usize,
    pub records: Vec<McgRecord>,
    pub y_final: SparseExtVec,
}

impl McgTrace {
    pub fn marginals(&self) -> MarginalVec {
        self.y_final.marginals(self.width)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct McgOptions {
    /// Evaluate `F(y^i)` after every iteration (`2^ff` queries each).
    pub record_values: bool,
    pub paranoid: bool,
}

pub(crate) fn width_of(ground: SubsetMask) -> usize {
    128 - ground.bits().leading_zeros() as usize
}

/// Runs `1/δ` iterations; iteration `i` splits for `g(S) = F(χ_S ∨ y^{i−1})` with `1/ε` parts
/// and sets `y^i = y^{i−1} ⊕ δ·Σ_j χ_{T_j}`.
///
/// `m` should be dummy-extended and the evaluator's objective should carry the same dummies.
/// Fails before doing any work when `1/ε⁴` exceeds the evaluator's ff cap.
pub fn measured_continuous_greedy<M, O>(
    m: &M,
    ev: &ExtensionEvaluator<O>,
    eps: &Rational,
    opts: McgOptions,
) -> Result<McgTrace>
where
    M: IndependenceOracle + ?Sized,
    O: ValueOracle,
{
    let params = McgParams::new(eps)?;
    let projected = params.projected_ff();
    if projected > ev.ff_cap() {
        return Err(Error::capability(format!(
            "ε = {} gives up to 1/ε⁴ = {projected} fractional coordinates, above the ff cap of {}",
            format_rational(eps),
            ev.ff_cap()
        )));
    }
    let delta = Prob::new(params.delta.clone())?;
    let width = width_of(m.ground() | ev.objective().ground());
    let mut y = SparseExtVec::zero();
    let mut records = Vec::with_capacity(params.iterations);
    for i in 1..=params.iterations {
        let g_ledger = QueryLedger::new();
        let m_ledger = QueryLedger::new();
        let g = counted(ev.g_oracle(&y)?, g_ledger.clone());
        let mc = counted(m, m_ledger.clone());
        let parts = accelerated_split_with(
            &mc,
            &g,
            params.parts,
            &params.eps_effective,
            SplitOptions {
                paranoid: opts.paranoid,
            },
        )?;
        let step = SparseExtVec::scaled_indicators(&delta, &parts.parts);
        let next = y.psum(&step);
        let value_after = if opts.record_values {
            Some(ev.eval_f(&next)?)
        } else {
            None
        };
        records.push(McgRecord {
            i,
            parts,
            y_before: y,
            y_after: next.clone(),
            value_after,
            g_queries: g_ledger.value_queries(),
            independence_queries: m_ledger.independence_queries(),
        });
        y = next;
    }
    Ok(McgTrace {
        params,
        width,
        records,
        y_final: y,
    })
}

/// `V = F(y_final)`.
pub fn value_estimate<O: ValueOracle>(trace: &McgTrace, ev: &ExtensionEvaluator<O>) -> Result<Rational> {
    ev.eval_f(&trace.y_final)
}

/// Draws `S_i ⊆ T_i` (the iteration-`i` union) keeping each `u` with probability
/// `(1−δ)^{c_u(i)}`, where `c_u(i)` counts earlier iterations whose union holds `u`, and
/// returns `(S_1..S_{1/δ}, δ·Σ_i 𝟙_{S_i})`. Makes no oracle queries.
pub fn random_decomposition(trace: &McgTrace, seed: u64) -> (Vec<SubsetMask>, MarginalVec) {
    let delta = &trace.params.delta;
    let keep = Rational::one() - delta;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u32; trace.width];
    let mut sets = Vec::with_capacity(trace.records.len());
    let mut hits = vec![0u64; trace.width];
    for rec in &trace.records {
        let t = rec.union();
        let mut s = SubsetMask::EMPTY;
        for u in t.iter() {
            let p = keep.pow(counts[u] as i32);
            if bernoulli(&mut rng, &p) {
                s.insert(u);
                hits[u] += 1;
            }
            counts[u] += 1;
        }
        sets.push(s);
    }
    let x = MarginalVec::from_vec(
        hits.into_iter()
            .map(|h| delta * Rational::from_integer(BigInt::from(h)))
            .collect(),
    );
    (sets, x)
}

/// Exact Bernoulli draw for a rational probability.
fn bernoulli(rng: &mut ChaCha8Rng, p: &Rational) -> bool {
    if p.is_one() {
        return true;
    }
    if p.is_zero() {
        return false;
    }
    let den = p.denom().magnitude();
    let draw = rng.gen_biguint_below(den);
    draw < *p.numer().magnitude()
}
