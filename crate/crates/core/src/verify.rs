//! Exhaustive optimum, exact inequality checkers over runs, and a seeded property suite.
//!
//! Every checker emits [`CheckLine`]s: one per inequality instance, with the slack
//! `lhs − rhs` as an exact fraction (and a float for eyeballing).

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::ExtensionEvaluator;
use crate::ground::SubsetMask;
use crate::instance::Instance;
use crate::matroids::{in_base_polytope, IndependenceOracle, MatroidSpec};
use crate::mcg::{measured_continuous_greedy, random_decomposition, McgOptions, McgTrace};
use crate::oracles::{counted, ObjectiveSpec, QueryLedger, ValueOracle};
use crate::pipeline::Extended;
use crate::prob::{format_rational, int, rat, to_f64, Prob, Rational};
use crate::rounding::{ceil_log2, deterministic_pipage, lift_to_base_polytope, relax, PipageOptions};
use crate::split::{accelerated_split_with, split_with, AcceleratedBudget, Partition, SplitOptions};
use crate::vector::SparseExtVec;

pub const BRUTE_FORCE_CAP: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruteForceResult {
    pub opt_set: SubsetMask,
    pub opt_value: Rational,
}

/// Maximum of `f` over all independent sets; ties go to the numerically smallest mask.
pub fn brute_force_opt<M, F>(m: &M, f: &F) -> Result<BruteForceResult>
where
    M: IndependenceOracle + ?Sized,
    F: ValueOracle + ?Sized,
{
    let ground = m.ground();
    if ground.len() > BRUTE_FORCE_CAP {
        return Err(Error::capability(format!(
            "brute force over {} elements exceeds the cap of {BRUTE_FORCE_CAP}",
            ground.len()
        )));
    }
    let elems: Vec<usize> = ground.iter().collect();
    let mut best = BruteForceResult {
        opt_set: SubsetMask::EMPTY,
        opt_value: f.value(SubsetMask::EMPTY),
    };
    fn walk<M, F>(m: &M, f: &F, elems: &[usize], s: SubsetMask, best: &mut BruteForceResult)
    where
        M: IndependenceOracle + ?Sized,
        F: ValueOracle + ?Sized,
    {
        for (k, &u) in elems.iter().enumerate() {
            let t = s.with(u);
            if !m.is_independent(t) {
                continue;
            }
            let v = f.value(t);
            if v > best.opt_value || (v == best.opt_value && t.bits() < best.opt_set.bits()) {
                best.opt_set = t;
                best.opt_value = v;
            }
            walk(m, f, &elems[k + 1..], t, best);
        }
    }
    walk(m, f, &elems, SubsetMask::EMPTY, &mut best);
    Ok(best)
}

pub type Params = BTreeMap<String, String>;

pub fn params<const N: usize>(kv: [(&str, String); N]) -> Params {
    kv.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub check: String,
    pub instance_id: String,
    pub params: Params,
    pub pass: bool,
    pub slack_num: String,
    pub slack_den: String,
    pub slack: f64,
}

impl CheckLine {
    fn with_slack(check: &str, instance_id: &str, params: Params, slack: Rational, pass: bool) -> Self {
        CheckLine {
            check: check.to_string(),
            instance_id: instance_id.to_string(),
            params,
            pass,
            slack_num: slack.numer().to_string(),
            slack_den: slack.denom().to_string(),
            slack: to_f64(&slack),
        }
    }

    /// `lhs ≥ rhs`.
    pub fn at_least(check: &str, instance_id: &str, params: Params, lhs: &Rational, rhs: &Rational) -> Self {
        let slack = lhs - rhs;
        let pass = !slack.is_negative();
        Self::with_slack(check, instance_id, params, slack, pass)
    }

    /// `lhs = rhs`.
    pub fn equal(check: &str, instance_id: &str, params: Params, lhs: &Rational, rhs: &Rational) -> Self {
        let slack = lhs - rhs;
        let pass = slack.is_zero();
        Self::with_slack(check, instance_id, params, slack, pass)
    }

    /// A yes/no property; slack is zero either way.
    pub fn holds(check: &str, instance_id: &str, params: Params, ok: bool) -> Self {
        Self::with_slack(check, instance_id, params, Rational::zero(), ok)
    }

    pub fn slack_exact(&self) -> Rational {
        let n = self.slack_num.parse().expect("integer numerator");
        let d = self.slack_den.parse().expect("integer denominator");
        Rational::new(n, d)
    }
}

pub fn all_pass(lines: &[CheckLine]) -> bool {
    lines.iter().all(|l| l.pass)
}

/// Per-iteration inequalities of a continuous-greedy run, evaluated with the rescaled `ε`.
///
/// For iteration `i` with `G = F(χ_OPT ∨ y^{i−1})`:
/// - `mcg.recursion`: `(F(y^i) − F(y^{i−1}))/δ ≥ (1−4ε)·G − F(y^{i−1})`
/// - `mcg.split_call`: `Σ_j [F(χ_{T_j} ∨ y^{i−1}) − F(y^{i−1})] ≥ (1−3ε)·G − (1−ε)·F(y^{i−1})`
/// - `mcg.supp`: `supp(y^i) ≤ i/ε`; `mcg.marg_inf`: `‖marg(y^i)‖∞ ≤ 1 − (1−δ)^i`
/// - `mcg.value_lower`: `F(y^i) ≥ δi(1−δ)^{i−1}(1−4ε)·f(OPT)`, or `(1−(1−δ)^i)(1−4ε)·f(OPT)`
///   when the objective is monotone
///
/// plus one `mcg.estimate_upper` line `F(y_final) ≤ f(OPT)`. Recorded `value_after`s are used
/// as `F(y^i)` when present.
pub fn check_mcg_trace<O: ValueOracle>(
    trace: &McgTrace,
    ev: &ExtensionEvaluator<O>,
    opt: &BruteForceResult,
    instance_id: &str,
) -> Result<Vec<CheckLine>> {
    let p = &trace.params;
    let (eps, delta) = (&p.eps_effective, &p.delta);
    let one = Rational::one();
    let f = ev.objective();
    let monotone = f.is_monotone();
    let keep = &one - delta;
    let opt_factor = &one - eps * int(4);
    let mut out = Vec::new();
    let mut prev = ev.eval_f(&SparseExtVec::zero())?;
    for rec in &trace.records {
        let i = rec.i;
        let ps = || params([("eps", format_rational(eps)), ("i", i.to_string())]);
        let table = ev.prepare(&rec.y_before)?;
        let g_opt = table.eval(f, opt.opt_set);
        let cur = match &rec.value_after {
            Some(v) => v.clone(),
            None => ev.eval_f(&rec.y_after)?,
        };

        let lhs = (&cur - &prev) / delta;
        let rhs = &opt_factor * &g_opt - &prev;
        out.push(CheckLine::at_least("mcg.recursion", instance_id, ps(), &lhs, &rhs));

        let gain: Rational = rec.parts.parts.iter().map(|&t| table.eval(f, t) - &prev).sum();
        let rhs = (&one - eps * int(3)) * &g_opt - (&one - eps) * &prev;
        out.push(CheckLine::at_least("mcg.split_call", instance_id, ps(), &gain, &rhs));

        let supp_bound = int((p.parts * i) as i64);
        let supp = int(rec.y_after.supp() as i64);
        out.push(CheckLine::at_least("mcg.supp", instance_id, ps(), &supp_bound, &supp));

        let decay = keep.pow(i as i32);
        let marg = rec.y_after.marginals(trace.width).norm_inf();
        out.push(CheckLine::at_least("mcg.marg_inf", instance_id, ps(), &(&one - &decay), &marg));

        let lower = if monotone {
            (&one - &decay) * &opt_factor * &opt.opt_value
        } else {
            delta * int(i as i64) * keep.pow(i as i32 - 1) * &opt_factor * &opt.opt_value
        };
        out.push(CheckLine::at_least("mcg.value_lower", instance_id, ps(), &cur, &lower));
        prev = cur;
    }
    let estimate = ev.eval_f(&trace.y_final)?;
    out.push(CheckLine::at_least(
        "mcg.estimate_upper",
        instance_id,
        params([("eps", format_rational(eps))]),
        &opt.opt_value,
        &estimate,
    ));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SplitVariant {
    Greedy,
    Accelerated { eps: Rational },
}

/// `split.lower_bound`: `Σ_j f(T_j|∅) ≥ c·f(OPT) − (1/ℓ)·Σ_j f(T_j)` with `c = 1 − 1/ℓ` for the
/// greedy variant and `1 − 1/ℓ − ε` for the accelerated one; `c` loses the `−1/ℓ` term for
/// monotone `f`. `split.nonnegative`: `Σ_j f(T_j|∅) ≥ 0`. `split.disjoint`.
pub fn check_split_guarantee<F: ValueOracle + ?Sized>(
    partition: &Partition,
    f: &F,
    opt: &BruteForceResult,
    variant: &SplitVariant,
    instance_id: &str,
) -> Vec<CheckLine> {
    let l = partition.len();
    let one = Rational::one();
    let inv_l = rat(1, l.max(1) as i64);
    let mut c = if f.is_monotone() { one.clone() } else { &one - &inv_l };
    let mut ps = params([("l", l.to_string()), ("variant", "greedy".to_string())]);
    if let SplitVariant::Accelerated { eps } = variant {
        c -= eps;
        ps.insert("variant".into(), "accelerated".into());
        ps.insert("eps".into(), format_rational(eps));
    }
    let gain = partition.gain(f);
    let total = partition.total(f);
    let rhs = c * &opt.opt_value - &inv_l * total;
    vec![
        CheckLine::at_least("split.lower_bound", instance_id, ps.clone(), &gain, &rhs),
        CheckLine::at_least("split.nonnegative", instance_id, ps.clone(), &gain, &Rational::zero()),
        CheckLine::holds("split.disjoint", instance_id, ps, partition.pairwise_disjoint()),
    ]
}

/// Both split variants for `ℓ = 1..=max_parts` on the dummy-extended pair: the guarantee lines,
/// `split.base` (the union is a base), and for the accelerated variant `split.value_budget` and
/// `split.independence_budget`.
pub fn check_splits(
    instance_id: &str,
    f: &dyn ValueOracle,
    m: &dyn IndependenceOracle,
    opt: &BruteForceResult,
    max_parts: usize,
    eps: &Rational,
) -> Result<Vec<CheckLine>> {
    let ext = Extended::new(f, m)?;
    let n = ext.m.ground().len();
    let opts = SplitOptions { paranoid: true };
    let mut out = Vec::new();
    for l in 1..=max_parts {
        let greedy = split_with(&ext.m, &ext.f, l, opts)?;
        out.extend(check_split_guarantee(&greedy, &ext.f, opt, &SplitVariant::Greedy, instance_id));
        let u = greedy.union();
        let base = u.len() == ext.rank && ext.m.is_independent(u);
        out.push(CheckLine::holds(
            "split.base",
            instance_id,
            params([("l", l.to_string()), ("variant", "greedy".to_string())]),
            base,
        ));

        let before = ext.counts();
        let acc = accelerated_split_with(&ext.m, &ext.f, l, eps, SplitOptions::default())?;
        let used = ext.counts() - before;
        let budget = AcceleratedBudget::new(n, l, ext.rank, eps);
        let variant = SplitVariant::Accelerated { eps: eps.clone() };
        out.extend(check_split_guarantee(&acc, &ext.f, opt, &variant, instance_id));
        let ps = || {
            params([
                ("eps", format_rational(eps)),
                ("l", l.to_string()),
                ("variant", "accelerated".to_string()),
            ])
        };
        out.push(CheckLine::at_least(
            "split.value_budget",
            instance_id,
            ps(),
            &int(budget.value_queries as i64),
            &int(used.value_queries as i64),
        ));
        out.push(CheckLine::at_least(
            "split.independence_budget",
            instance_id,
            ps(),
            &int(budget.independence_queries as i64),
            &int(used.independence_queries as i64),
        ));
        let u = acc.union();
        let base = u.len() == ext.rank && ext.m.is_independent(u);
        out.push(CheckLine::holds("split.base", instance_id, ps(), base));
    }
    Ok(out)
}

/// Full deterministic run at `eps` with every intermediate guarantee checked: the trace
/// inequalities, a query-free decomposition into independent sets, the lift into the base
/// polytope, and lossless rounding (`f(T) ≥ F(y)`, `T` independent, iteration and `ff` bounds).
pub fn check_pipeline(
    instance_id: &str,
    f: &dyn ValueOracle,
    m: &dyn IndependenceOracle,
    eps: &Rational,
    opt: &BruteForceResult,
    seed: u64,
) -> Result<Vec<CheckLine>> {
    let ext = Extended::new(f, m)?;
    let ev = ext.evaluator();
    let opts = McgOptions {
        record_values: false,
        paranoid: true,
    };
    let trace = measured_continuous_greedy(&ext.m, &ev, eps, opts)?;
    let mut out = check_mcg_trace(&trace, &ev, opt, instance_id)?;
    let ps = || params([("eps", format_rational(&trace.params.eps_effective))]);

    let before = ext.counts();
    let (sets, _) = random_decomposition(&trace, seed);
    let zero = ext.counts() == before;
    out.push(CheckLine::holds("decomposition.no_queries", instance_id, ps(), zero));
    let indep = sets.iter().all(|&s| m.is_independent(s - ext.dummies));
    out.push(CheckLine::holds("decomposition.independent", instance_id, ps(), indep));

    let estimate = ev.eval_f(&trace.y_final)?;
    let lifted = lift_to_base_polytope(&trace.y_final, &ext.m)?;
    match in_base_polytope(&ext.m, &lifted.marginals(trace.width)) {
        Ok(ok) => out.push(CheckLine::holds("lift.base_polytope", instance_id, ps(), ok)),
        Err(Error::Capability(_)) => {}
        Err(e) => return Err(e),
    }
    let lifted_value = ev.eval_f(&lifted)?;
    out.push(CheckLine::equal("lift.value", instance_id, ps(), &lifted_value, &estimate));

    let outcome = deterministic_pipage(&ext.m, &ev, &lifted, PipageOptions { paranoid: true })?;
    let n = ext.m.ground().len();
    let value = f.value(outcome.set);
    out.push(CheckLine::at_least("pipage.lossless", instance_id, ps(), &value, &estimate));
    out.push(CheckLine::holds(
        "pipage.independent",
        instance_id,
        ps(),
        m.is_independent(outcome.set),
    ));
    let st = &outcome.stats;
    out.push(CheckLine::at_least(
        "pipage.iterations",
        instance_id,
        ps(),
        &int(2 * n as i64),
        &int(st.iterations as i64),
    ));
    out.push(CheckLine::at_least(
        "pipage.ff_bound",
        instance_id,
        ps(),
        &int((st.ff_initial + 2 + ceil_log2(n)) as i64),
        &int(st.max_ff as i64),
    ));
    Ok(out)
}

const DENOMS: [(i64, i64); 10] = [
    (1, 2),
    (1, 3),
    (2, 3),
    (1, 4),
    (3, 4),
    (1, 5),
    (2, 5),
    (1, 8),
    (5, 8),
    (7, 9),
];

/// A fractional value from a small fixed menu.
pub fn random_fraction(rng: &mut impl Rng) -> Rational {
    let (a, b) = DENOMS[rng.gen_range(0..DENOMS.len())];
    rat(a, b)
}

/// A nonempty subset of `ground` chosen uniformly among nonempty subsets.
pub fn random_nonempty_subset(rng: &mut impl Rng, ground: SubsetMask) -> SubsetMask {
    let elems: Vec<usize> = ground.iter().collect();
    loop {
        let s: SubsetMask = elems.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        if !s.is_empty() || elems.is_empty() {
            return s;
        }
    }
}

/// Up to `keys` random coordinates over nonempty subsets of `ground`; about one in eight
/// is exactly 1, the rest come from [`random_fraction`].
pub fn random_point(rng: &mut impl Rng, ground: SubsetMask, keys: usize) -> SparseExtVec {
    let mut y = SparseExtVec::zero();
    if ground.is_empty() {
        return y;
    }
    for _ in 0..keys {
        let k = random_nonempty_subset(rng, ground);
        let v = if rng.gen_range(0..8) == 0 {
            Rational::one()
        } else {
            random_fraction(rng)
        };
        y.set(k, Prob::new(v).expect("menu values lie in [0, 1]"));
    }
    y
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveKind {
    Coverage,
    Cut,
    Modular,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatroidKind {
    Uniform,
    Partition,
    Graphic,
}

pub const OBJECTIVE_KINDS: [ObjectiveKind; 3] = [ObjectiveKind::Coverage, ObjectiveKind::Cut, ObjectiveKind::Modular];
pub const MATROID_KINDS: [MatroidKind; 3] = [MatroidKind::Uniform, MatroidKind::Partition, MatroidKind::Graphic];

/// A small random instance on `n ≥ 1` elements.
///
/// Coverage: each element covers 1 to 3 of `⌈3n/2⌉` items weighted `1..=4`. Cut: each pair is an
/// edge with probability 2/5, weight `1..=3`. Modular: weights `0..=5`. Uniform: `k` in
/// `1..=⌈n/2⌉`. Partition: up to 3 parts with capacities 1 or 2. Graphic: random edges (loops
/// allowed) on 3 to 5 vertices.
pub fn random_instance(rng: &mut impl Rng, objective: ObjectiveKind, matroid: MatroidKind, n: usize) -> Instance {
    let objective = match objective {
        ObjectiveKind::Coverage => {
            let items = (3 * n).div_ceil(2);
            let covers = (0..n)
                .map(|_| {
                    let k = rng.gen_range(1..=3.min(items));
                    rand::seq::index::sample(rng, items, k).into_vec()
                })
                .collect();
            let item_weights = (0..items).map(|_| rng.gen_range(1..=4)).collect();
            ObjectiveSpec::Coverage { covers, item_weights }
        }
        ObjectiveKind::Cut => {
            let mut edges = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if rng.gen_bool(0.4) {
                        edges.push((a, b, rng.gen_range(1..=3)));
                    }
                }
            }
            ObjectiveSpec::Cut { n, edges }
        }
        ObjectiveKind::Modular => ObjectiveSpec::Modular {
            weights: (0..n).map(|_| rng.gen_range(0..=5)).collect(),
        },
    };
    let matroid = match matroid {
        MatroidKind::Uniform => MatroidSpec::Uniform {
            n,
            k: rng.gen_range(1..=n.div_ceil(2)),
        },
        MatroidKind::Partition => {
            let parts = rng.gen_range(1..=3.min(n));
            let mut members = vec![Vec::new(); parts];
            for u in 0..n {
                // the first `parts` elements seed one part each
                let p = if u < parts { u } else { rng.gen_range(0..parts) };
                members[p].push(u);
            }
            MatroidSpec::Partition {
                n,
                parts: members.into_iter().map(|m| (m, rng.gen_range(1..=2))).collect(),
            }
        }
        MatroidKind::Graphic => {
            let v = rng.gen_range(3..=5);
            MatroidSpec::Graphic {
                edges: (0..n).map(|_| (rng.gen_range(0..v), rng.gen_range(0..v))).collect(),
            }
        }
    };
    Instance::from_specs("random", objective, matroid).expect("generated instances are well-formed")
}

fn width(ground: SubsetMask) -> usize {
    128 - ground.bits().leading_zeros() as usize
}

/// Nonnegativity and diminishing returns of `f` on `draws` random triples `S ⊆ T`, `u ∉ T`.
pub fn check_objective<F: ValueOracle + ?Sized>(
    instance_id: &str,
    f: &F,
    rng: &mut impl Rng,
    draws: usize,
) -> Vec<CheckLine> {
    let ground = f.ground();
    let elems: Vec<usize> = ground.iter().collect();
    let mut out = Vec::new();
    for d in 0..draws {
        let ps = || params([("draw", d.to_string())]);
        let s: SubsetMask = elems.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        out.push(CheckLine::at_least("objective.nonnegative", instance_id, ps(), &f.value(s), &Rational::zero()));
        let Some(&u) = elems.choose(rng) else { continue };
        let small: SubsetMask = (s.without(u)).iter().filter(|_| rng.gen_bool(0.5)).collect();
        let big = s.without(u);
        out.push(CheckLine::at_least(
            "objective.submodular",
            instance_id,
            ps(),
            &f.marginal(u, small),
            &f.marginal(u, big),
        ));
    }
    out
}

/// Identities of `F` at one point `y`: multilinearity and the derivative identity for every
/// key, the `⊕` expansion against a random `z` with at most 3 keys, `F̄(marg(y)) ≥ F(y)`,
/// `g_y(S) ≥ (1−‖marg(y)‖∞)·f(S)`, convexity along `χ_{u} − χ_{v}`, and the `2^ff` query count.
pub fn check_extension_identities<O: ValueOracle>(
    instance_id: &str,
    ev: &ExtensionEvaluator<O>,
    y: &SparseExtVec,
    rng: &mut impl Rng,
    draw: usize,
) -> Result<Vec<CheckLine>> {
    let f = ev.objective();
    let ground = f.ground();
    let one = Rational::one();
    let ps = || params([("draw", draw.to_string()), ("ff", y.ff().to_string())]);
    let mut out = Vec::new();
    let fy = ev.eval_f(y)?;

    for (key, p) in y.iter() {
        let a = p.value();
        let mut lo = y.clone();
        lo.remove(key);
        let mut hi = y.clone();
        hi.set(key, Prob::one());
        let rhs = (&one - a) * ev.eval_f(&lo)? + a * ev.eval_f(&hi)?;
        out.push(CheckLine::equal("extension.multilinearity", instance_id, ps(), &fy, &rhs));
        let lhs = (&one - a) * ev.partial_wrt(y, key)?;
        let rhs = ev.eval_g(y, key)? - &fy;
        out.push(CheckLine::equal("extension.derivative", instance_id, ps(), &lhs, &rhs));
    }

    let zkeys = rng.gen_range(1..=3);
    let z = random_point(rng, ground, zkeys);
    let zk: Vec<(SubsetMask, Rational)> = z.iter().map(|(k, p)| (k, p.value().clone())).collect();
    let mut expansion = Rational::zero();
    for pick in 0u32..(1 << zk.len()) {
        let mut w = one.clone();
        let mut u = SubsetMask::EMPTY;
        for (b, (k, p)) in zk.iter().enumerate() {
            if pick >> b & 1 == 1 {
                w *= p;
                u = u | *k;
            } else {
                w *= &one - p;
            }
        }
        if !w.is_zero() {
            expansion += w * ev.eval_g(y, u)?;
        }
    }
    out.push(CheckLine::equal(
        "extension.psum_expansion",
        instance_id,
        ps(),
        &ev.eval_f(&y.psum(&z))?,
        &expansion,
    ));

    let marg = y.marginals(width(ground));
    match ev.eval_fbar_exact(&marg) {
        Ok(fbar) => out.push(CheckLine::at_least("extension.marginal_domination", instance_id, ps(), &fbar, &fy)),
        Err(Error::Capability(_)) => {}
        Err(e) => return Err(e),
    }

    let damp = &one - marg.norm_inf();
    let table = ev.prepare(y)?;
    let probe: Vec<SubsetMask> = if ground.len() <= 6 {
        ground.subsets().collect()
    } else {
        (0..16).map(|_| random_nonempty_subset(rng, ground)).collect()
    };
    for s in probe {
        let lhs = table.eval(f, s);
        let rhs = &damp * f.value(s);
        out.push(CheckLine::at_least("extension.opt_preservation", instance_id, ps(), &lhs, &rhs));
    }

    let elems: Vec<usize> = ground.iter().collect();
    if elems.len() >= 2 {
        let pair: Vec<usize> = elems.choose_multiple(rng, 2).copied().collect();
        let (u, v) = (SubsetMask::singleton(pair[0]), SubsetMask::singleton(pair[1]));
        let (a, b) = (random_fraction(rng), random_fraction(rng));
        let t = [a.clone(), b.clone(), &one - &a, &one - &b].into_iter().min().expect("four values");
        let at = |du: &Rational, dv: &Rational| -> Result<Rational> {
            let mut w = y.clone();
            w.set(u, Prob::new(du.clone())?);
            w.set(v, Prob::new(dv.clone())?);
            ev.eval_f(&w)
        };
        let mid = at(&a, &b)?;
        let plus = at(&(&a + &t), &(&b - &t))?;
        let minus = at(&(&a - &t), &(&b + &t))?;
        let avg = (plus + minus) / int(2);
        out.push(CheckLine::at_least("extension.convexity", instance_id, ps(), &avg, &mid));
    }

    let ledger = QueryLedger::new();
    let probe_ev = ExtensionEvaluator::new(counted(f, ledger.clone())).with_ff_cap(ev.ff_cap());
    probe_ev.eval_f(y)?;
    out.push(CheckLine::equal(
        "extension.query_count",
        instance_id,
        ps(),
        &int(ledger.value_queries() as i64),
        &int(1i64 << y.ff()),
    ));
    Ok(out)
}

/// `relax(y, u)` at a random `u`: marginals unchanged, `F` does not drop, `u` becomes relaxed,
/// previously relaxed elements stay relaxed, `ff` grows by at most one.
pub fn check_relax<O: ValueOracle>(
    instance_id: &str,
    ev: &ExtensionEvaluator<O>,
    y: &SparseExtVec,
    rng: &mut impl Rng,
    draw: usize,
) -> Result<Vec<CheckLine>> {
    let ground = ev.objective().ground();
    let elems: Vec<usize> = ground.iter().collect();
    let Some(&u) = elems.choose(rng) else {
        return Ok(Vec::new());
    };
    let ps = || params([("draw", draw.to_string()), ("u", u.to_string())]);
    let w = width(ground);
    let z = relax(y, u);
    let relaxed_before: Vec<usize> = elems.iter().copied().filter(|&e| e != u && y.is_relaxed(e)).collect();
    Ok(vec![
        CheckLine::holds("relax.marginals", instance_id, ps(), z.marginals(w) == y.marginals(w)),
        CheckLine::at_least("relax.value", instance_id, ps(), &ev.eval_f(&z)?, &ev.eval_f(y)?),
        CheckLine::holds("relax.relaxed", instance_id, ps(), z.is_relaxed(u)),
        CheckLine::holds(
            "relax.keeps_relaxed",
            instance_id,
            ps(),
            relaxed_before.iter().all(|&e| z.is_relaxed(e)),
        ),
        CheckLine::at_least("relax.ff", instance_id, ps(), &int(y.ff() as i64 + 1), &int(z.ff() as i64)),
    ])
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    /// Random points per family of identities.
    pub draws: usize,
    /// Largest number of keys per random point.
    pub max_keys: usize,
    /// Accuracies for the full-pipeline checks.
    pub eps: Vec<Rational>,
    pub max_parts: usize,
    pub split_eps: Rational,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            draws: 20,
            max_keys: 6,
            eps: vec![int(1), rat(1, 2)],
            max_parts: 3,
            split_eps: rat(1, 10),
        }
    }
}

pub const SUITE_MAX_ELEMENTS: usize = 10;

pub fn property_suite(
    instance_id: &str,
    f: &dyn ValueOracle,
    m: &dyn IndependenceOracle,
    seed: u64,
) -> Result<Vec<CheckLine>> {
    property_suite_with(instance_id, f, m, seed, &SuiteOptions::default())
}

/// Every checker in this module on one instance, deterministically from `seed`.
pub fn property_suite_with(
    instance_id: &str,
    f: &dyn ValueOracle,
    m: &dyn IndependenceOracle,
    seed: u64,
    opts: &SuiteOptions,
) -> Result<Vec<CheckLine>> {
    let n = m.ground().len();
    if n > SUITE_MAX_ELEMENTS {
        return Err(Error::capability(format!(
            "the property suite runs on at most {SUITE_MAX_ELEMENTS} elements, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = check_objective(instance_id, f, &mut rng, opts.draws);
    let ev = ExtensionEvaluator::new(f);
    for d in 0..opts.draws {
        let keys = rng.gen_range(1..=opts.max_keys);
        let y = random_point(&mut rng, f.ground(), keys);
        out.extend(check_extension_identities(instance_id, &ev, &y, &mut rng, d)?);
        out.extend(check_relax(instance_id, &ev, &y, &mut rng, d)?);
    }
    let opt = brute_force_opt(m, f)?;
    out.extend(check_splits(instance_id, f, m, &opt, opts.max_parts, &opts.split_eps)?);
    for eps in &opts.eps {
        out.extend(check_pipeline(instance_id, f, m, eps, &opt, seed)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroids::{Partition as PartitionMatroid, Uniform};
    use crate::oracles::{Coverage, FnObjective, Modular};
    use crate::split::split;

    fn set(xs: &[usize]) -> SubsetMask {
        xs.iter().copied().collect()
    }

    #[test]
    fn brute_force_examples() {
        let f = Modular::new(&[3, 2, 1]).unwrap();
        let m = Uniform::new(3, 2).unwrap();
        let r = brute_force_opt(&m, &f).unwrap();
        assert_eq!((r.opt_set, r.opt_value), (set(&[0, 1]), int(5)));

        let zero = Modular::new(&[0, 0, 0]).unwrap();
        let r = brute_force_opt(&m, &zero).unwrap();
        assert_eq!((r.opt_set, r.opt_value), (SubsetMask::EMPTY, int(0)));

        let free = Uniform::new(3, 3).unwrap();
        let cov = Coverage::new(&[vec![0], vec![1], vec![0, 2]], &[1, 1, 1]).unwrap();
        let r = brute_force_opt(&free, &cov).unwrap();
        assert_eq!(r.opt_value, int(3));
        assert_eq!(r.opt_set, set(&[1, 2]));

        let big = Uniform::new(21, 1).unwrap();
        let f = Modular::new(&[1; 21]).unwrap();
        assert!(matches!(brute_force_opt(&big, &f), Err(Error::Capability(_))));
    }

    #[test]
    fn greedy_with_l_equal_rank_is_max_weight_base() {
        let f = Modular::new(&[4, 1, 3, 2, 5]).unwrap();
        let m = PartitionMatroid::new(5, &[(vec![0, 1], 1), (vec![2, 3, 4], 2)]).unwrap();
        let opt = brute_force_opt(&m, &f).unwrap();
        let ext = Extended::new(&f, &m).unwrap();
        let p = split(&ext.m, &ext.f, ext.rank).unwrap();
        assert_eq!(p.total(&f), opt.opt_value);
    }

    #[test]
    fn split_check_reduces_for_l_one() {
        let f = Modular::new(&[3, 2, 1]).unwrap();
        let m = Uniform::new(3, 2).unwrap();
        let opt = brute_force_opt(&m, &f).unwrap();
        let ext = Extended::new(&f, &m).unwrap();
        let p = split(&ext.m, &ext.f, 1).unwrap();
        let lines = check_split_guarantee(&p, &ext.f, &opt, &SplitVariant::Greedy, "t");
        assert!(all_pass(&lines));
        // 2·greedy − OPT
        assert_eq!(lines[0].slack_exact(), int(5));
    }

    #[test]
    fn trace_checks_pass_and_catch_corruption() {
        let f = Coverage::new(&[vec![0, 1], vec![1], vec![2], vec![0, 2]], &[2, 1, 1]).unwrap();
        let m = Uniform::new(4, 2).unwrap();
        let opt = brute_force_opt(&m, &f).unwrap();
        let ext = Extended::new(&f, &m).unwrap();
        let ev = ext.evaluator();
        let opts = McgOptions {
            record_values: true,
            paranoid: false,
        };
        let trace = measured_continuous_greedy(&ext.m, &ev, &rat(1, 2), opts).unwrap();
        let lines = check_mcg_trace(&trace, &ev, &opt, "cov").unwrap();
        assert!(all_pass(&lines), "{lines:?}");
        assert_eq!(lines.len(), 5 * 8 + 1);

        // at ε = 1/2 the bounds are loose, so corrupt the first step of a unit-valued run
        let f = Modular::new(&[1, 1]).unwrap();
        let m = Uniform::new(2, 1).unwrap();
        let opt = brute_force_opt(&m, &f).unwrap();
        let ext = Extended::new(&f, &m).unwrap();
        let ev = ext.evaluator();
        let mut trace = measured_continuous_greedy(&ext.m, &ev, &rat(1, 2), opts).unwrap();
        assert!(all_pass(&check_mcg_trace(&trace, &ev, &opt, "unit").unwrap()));
        let v = trace.records[0].value_after.take().unwrap();
        trace.records[0].value_after = Some(v - int(1));
        let lines = check_mcg_trace(&trace, &ev, &opt, "unit").unwrap();
        let bad: Vec<_> = lines.iter().filter(|l| !l.pass).collect();
        assert!(bad.iter().any(|l| l.check == "mcg.recursion" && l.params["i"] == "1"), "{bad:?}");
    }

    #[test]
    fn single_iteration_has_one_recursion_line() {
        let f = Modular::new(&[2, 1]).unwrap();
        let m = Uniform::new(2, 1).unwrap();
        let opt = brute_force_opt(&m, &f).unwrap();
        let ext = Extended::new(&f, &m).unwrap();
        let ev = ext.evaluator();
        let trace = measured_continuous_greedy(&ext.m, &ev, &int(1), McgOptions::default()).unwrap();
        let lines = check_mcg_trace(&trace, &ev, &opt, "one").unwrap();
        assert_eq!(lines.iter().filter(|l| l.check == "mcg.recursion").count(), 1);
        assert!(all_pass(&lines));
    }

    #[test]
    fn suite_passes_and_is_seed_stable() {
        let f = Coverage::new(&[vec![0, 1], vec![1, 2], vec![3], vec![0, 3], vec![2]], &[1, 2, 1, 3]).unwrap();
        let m = PartitionMatroid::new(5, &[(vec![0, 1, 2], 1), (vec![3, 4], 1)]).unwrap();
        let opts = SuiteOptions {
            draws: 6,
            ..SuiteOptions::default()
        };
        let a = property_suite_with("cov", &f, &m, 7, &opts).unwrap();
        let failed: Vec<_> = a.iter().filter(|l| !l.pass).collect();
        assert!(failed.is_empty(), "{failed:?}");
        let b = property_suite_with("cov", &f, &m, 7, &opts).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn supermodular_objective_is_caught() {
        let f = FnObjective::new(SubsetMask::full(4), true, |s: SubsetMask| {
            let k = s.len() as i64;
            int(k * k)
        });
        let ev = ExtensionEvaluator::new(&f);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut caught = false;
        for d in 0..20 {
            let y = random_point(&mut rng, f.ground(), 4);
            let lines = check_extension_identities("sq", &ev, &y, &mut rng, d).unwrap();
            caught |= lines
                .iter()
                .any(|l| l.check == "extension.marginal_domination" && !l.pass);
        }
        assert!(caught);
    }
}
