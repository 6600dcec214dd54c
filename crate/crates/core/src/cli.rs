//! The `solve`, `estimate`, `verify` and `bench` commands and their report formats.
//!
//! JSON reports carry `schema_version` ([`REPORT_SCHEMA_VERSION`]). Exact quantities are
//! strings `p/q` next to a float approximation. Bench CSV columns are [`BENCH_CSV_HEADER`].

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::DEFAULT_FF_CAP;
use crate::ground::SubsetMask;
use crate::instance::Instance;
use crate::matroids::{IndependenceOracle, MatroidSpec};
use crate::mcg::{measured_continuous_greedy, random_decomposition, McgOptions, McgParams, McgTrace};
use crate::oracles::{ObjectiveSpec, ValueOracle};
use crate::pipeline::{phase, total, Extended, PhaseCounts};
use crate::prob::{format_rational, to_f64, Rational};
use crate::rounding::{deterministic_pipage, lift_to_base_polytope, PipageOptions, PipageStats};
use crate::verify::{brute_force_opt, property_suite_with, CheckLine, SuiteOptions};
use crate::vector::MarginalVec;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const BENCH_CSV_HEADER: [&str; 7] = [
    "n",
    "r",
    "eps",
    "phase",
    "value_queries",
    "independence_queries",
    "wall_ms",
];
/// Largest instance for which `--with-opt` runs the exhaustive optimum.
pub const OPT_MAX_ELEMENTS: usize = 14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactValue {
    pub exact: String,
    pub approx: f64,
}

impl From<&Rational> for ExactValue {
    fn from(r: &Rational) -> Self {
        ExactValue {
            exact: format_rational(r),
            approx: to_f64(r),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsReport {
    pub requested: String,
    pub effective: String,
    pub delta: String,
    pub parts: usize,
    pub iterations: usize,
}

impl From<&McgParams> for EpsReport {
    fn from(p: &McgParams) -> Self {
        EpsReport {
            requested: format_rational(&p.eps_raw),
            effective: format_rational(&p.eps_effective),
            delta: format_rational(&p.delta),
            parts: p.parts,
            iterations: p.iterations,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementValue {
    pub element: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptReport {
    pub set: Vec<String>,
    pub value: ExactValue,
    /// `f(S)/f(OPT)` for `solve`, `F(y)/f(OPT)` for `estimate`; absent when `f(OPT) = 0`.
    pub ratio: Option<ExactValue>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledReport {
    /// `S_1..S_{1/δ}` of the decomposition.
    pub sets: Vec<Vec<String>>,
    /// `δ·Σ_i 𝟙_{S_i}`.
    pub x: Vec<ElementValue>,
    /// Index (0-based) of the set reported as the solution: the first maximizer of `f`.
    pub best_index: usize,
    /// One draw including each element independently with probability `marg_u(y)`.
    pub inclusion_sample: Vec<String>,
    pub inclusion_sample_independent: bool,
    pub inclusion_sample_value: ExactValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub command: String,
    pub instance: String,
    pub n: usize,
    pub rank: usize,
    pub mode: String,
    pub seed: u64,
    pub eps: EpsReport,
    pub solution: Vec<String>,
    pub solution_value: ExactValue,
    /// `F(y)` of the continuous-greedy output.
    pub estimate: ExactValue,
    /// `f(S) ≥ F(y)`.
    pub lossless: bool,
    pub marginals: Vec<ElementValue>,
    pub support: usize,
    pub fractional: usize,
    pub rounding: Option<PipageStats>,
    pub sampled: Option<SampledReport>,
    pub ledgers: Vec<PhaseCounts>,
    pub opt: Option<OptReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub schema_version: u32,
    pub command: String,
    pub instance: String,
    pub n: usize,
    pub rank: usize,
    pub eps: EpsReport,
    pub estimate: ExactValue,
    pub marginals: Vec<ElementValue>,
    pub support: usize,
    pub fractional: usize,
    pub ledgers: Vec<PhaseCounts>,
    pub opt: Option<OptReport>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Deterministic,
    SampledRounding,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Deterministic => "deterministic",
            Mode::SampledRounding => "sampled-rounding",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub eps: Rational,
    pub mode: Mode,
    pub seed: u64,
    pub paranoid: bool,
    pub with_opt: bool,
    pub ff_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            eps: Rational::new(1.into(), 2.into()),
            mode: Mode::Deterministic,
            seed: 0,
            paranoid: false,
            with_opt: false,
            ff_cap: DEFAULT_FF_CAP,
        }
    }
}

fn element_values(inst: &Instance, x: &MarginalVec) -> Vec<ElementValue> {
    (0..inst.n())
        .map(|u| ElementValue {
            element: inst.elements[u].clone(),
            value: format_rational(x.get(u)),
        })
        .collect()
}

fn opt_report(inst: &Instance, f: &dyn ValueOracle, m: &dyn IndependenceOracle, achieved: &Rational) -> Result<Option<OptReport>> {
    if inst.n() > OPT_MAX_ELEMENTS {
        eprintln!(
            "warning: --with-opt skipped, {} elements exceed {OPT_MAX_ELEMENTS}",
            inst.n()
        );
        return Ok(None);
    }
    let opt = brute_force_opt(m, f)?;
    let ratio = (!opt.opt_value.is_zero()).then(|| ExactValue::from(&(achieved / &opt.opt_value)));
    Ok(Some(OptReport {
        set: inst.names(opt.opt_set),
        value: ExactValue::from(&opt.opt_value),
        ratio,
    }))
}

fn run_mcg(ext: &Extended<'_>, opts: &SolveOptions, phases: &mut Vec<PhaseCounts>) -> Result<(McgTrace, Rational)> {
    let ev = ext.evaluator_with_cap(opts.ff_cap);
    let mcg_opts = McgOptions {
        record_values: false,
        paranoid: opts.paranoid,
    };
    let trace = phase(&ext.ledger, "mcg", phases, || {
        measured_continuous_greedy(&ext.m, &ev, &opts.eps, mcg_opts)
    })?;
    let estimate = phase(&ext.ledger, "estimate", phases, || ev.eval_f(&trace.y_final))?;
    Ok((trace, estimate))
}

pub fn cmd_solve(inst: &Instance, opts: &SolveOptions) -> Result<SolveReport> {
    let f = inst.objective_oracle();
    let m = inst.matroid_oracle();
    let ext = Extended::new(&*f, &*m)?;
    let mut phases = Vec::new();
    let (trace, estimate) = run_mcg(&ext, opts, &mut phases)?;
    let marg = trace.marginals();
    let (solution, rounding, sampled) = match opts.mode {
        Mode::Deterministic => {
            let ev = ext.evaluator_with_cap(opts.ff_cap);
            let out = phase(&ext.ledger, "rounding", &mut phases, || {
                let lifted = lift_to_base_polytope(&trace.y_final, &ext.m)?;
                deterministic_pipage(
                    &ext.m,
                    &ev,
                    &lifted,
                    PipageOptions {
                        paranoid: opts.paranoid,
                    },
                )
            })?;
            (out.set, Some(out.stats), None)
        }
        Mode::SampledRounding => {
            let (sets, x) = phase(&ext.ledger, "decomposition", &mut phases, || {
                Ok(random_decomposition(&trace, opts.seed))
            })?;
            let (best, draw) = phase(&ext.ledger, "sampling", &mut phases, || {
                let mut best = 0;
                let mut best_value = None;
                for (i, s) in sets.iter().enumerate() {
                    let v = ext.f.value(*s);
                    if best_value.as_ref().is_none_or(|b| v > *b) {
                        best = i;
                        best_value = Some(v);
                    }
                }
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
                let draw: SubsetMask = (0..inst.n())
                    .filter(|&u| bernoulli(&mut rng, marg.get(u)))
                    .collect();
                Ok((best, draw))
            })?;
            let draw_value = f.value(draw);
            let report = SampledReport {
                sets: sets.iter().map(|&s| inst.names(s)).collect(),
                x: element_values(inst, &x),
                best_index: best,
                inclusion_sample: inst.names(draw),
                inclusion_sample_independent: m.is_independent(draw),
                inclusion_sample_value: ExactValue::from(&draw_value),
            };
            let solution = sets.get(best).copied().unwrap_or(SubsetMask::EMPTY) - ext.dummies;
            (solution, None, Some(report))
        }
    };
    let value = f.value(solution);
    let opt = if opts.with_opt {
        opt_report(inst, &*f, &*m, &value)?
    } else {
        None
    };
    let t = total(&phases);
    phases.push(t);
    Ok(SolveReport {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "solve".into(),
        instance: inst.name.clone(),
        n: inst.n(),
        rank: inst.rank(),
        mode: opts.mode.name().into(),
        seed: opts.seed,
        eps: EpsReport::from(&trace.params),
        solution: inst.names(solution),
        lossless: value >= estimate,
        solution_value: ExactValue::from(&value),
        estimate: ExactValue::from(&estimate),
        marginals: element_values(inst, &marg),
        support: trace.y_final.supp(),
        fractional: trace.y_final.ff(),
        rounding,
        sampled,
        ledgers: phases,
        opt,
    })
}

fn bernoulli(rng: &mut ChaCha8Rng, p: &Rational) -> bool {
    use num_bigint::RandBigInt;
    if p.is_one() {
        return true;
    }
    if p.is_zero() {
        return false;
    }
    let draw = rng.gen_biguint_below(p.denom().magnitude());
    draw < *p.numer().magnitude()
}

pub fn cmd_estimate(inst: &Instance, opts: &SolveOptions) -> Result<EstimateReport> {
    let f = inst.objective_oracle();
    let m = inst.matroid_oracle();
    let ext = Extended::new(&*f, &*m)?;
    let mut phases = Vec::new();
    let (trace, estimate) = run_mcg(&ext, opts, &mut phases)?;
    let opt = if opts.with_opt {
        opt_report(inst, &*f, &*m, &estimate)?
    } else {
        None
    };
    let t = total(&phases);
    phases.push(t);
    Ok(EstimateReport {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "estimate".into(),
        instance: inst.name.clone(),
        n: inst.n(),
        rank: inst.rank(),
        eps: EpsReport::from(&trace.params),
        estimate: ExactValue::from(&estimate),
        marginals: element_values(inst, &trace.marginals()),
        support: trace.y_final.supp(),
        fractional: trace.y_final.ff(),
        ledgers: phases,
        opt,
    })
}

/// Instance files of a suite directory: every `*.json`, sorted by path.
pub fn suite_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Property suite over instances; one [`CheckLine`] per checked inequality.
pub fn cmd_verify(instances: &[Instance], seed: u64, suite: &SuiteOptions) -> Result<Vec<CheckLine>> {
    let mut out = Vec::new();
    for inst in instances {
        let f = inst.objective_oracle();
        let m = inst.matroid_oracle();
        out.extend(property_suite_with(&inst.name, &*f, &*m, seed, suite)?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    CoverageUniform,
    CutPartition,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::CoverageUniform => "coverage-uniform",
            Family::CutPartition => "cut-partition",
        }
    }
}

/// A seeded benchmark instance with rank about `n/4`.
///
/// `coverage-uniform`: each element covers 3 distinct items out of `max(n, 3)`, item weights in
/// `1..=3`, uniform matroid with `k = max(1, n/4)`. `cut-partition`: every vertex links to two
/// random others with weights in `1..=3`, consecutive blocks of 4 elements with capacity 1.
pub fn bench_instance(family: Family, n: usize, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64) << 32);
    let name = format!("{}-{n}", family.name());
    match family {
        Family::CoverageUniform => {
            let items = n.max(3);
            let covers = (0..n)
                .map(|_| rand::seq::index::sample(&mut rng, items, 3).into_vec())
                .collect();
            let item_weights = (0..items).map(|_| rng.gen_range(1..=3)).collect();
            Instance::from_specs(
                &name,
                ObjectiveSpec::Coverage { covers, item_weights },
                MatroidSpec::Uniform { n, k: (n / 4).max(1) },
            )
        }
        Family::CutPartition => {
            let mut edges = Vec::new();
            if n >= 2 {
                for u in 0..n {
                    for _ in 0..2 {
                        let mut v = rng.gen_range(0..n - 1);
                        if v >= u {
                            v += 1;
                        }
                        edges.push((u, v, rng.gen_range(1..=3)));
                    }
                }
            }
            let parts = (0..n)
                .step_by(4)
                .map(|lo| ((lo..(lo + 4).min(n)).collect(), 1))
                .collect();
            Instance::from_specs(&name, ObjectiveSpec::Cut { n, edges }, MatroidSpec::Partition { n, parts })
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub family: Family,
    pub n_list: Vec<usize>,
    pub eps: Rational,
    pub trials: usize,
    pub with_rounding: bool,
    pub seed: u64,
    pub ff_cap: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub r: usize,
    pub eps: String,
    pub phase: String,
    pub value_queries: u64,
    pub independence_queries: u64,
    pub wall_ms: f64,
}

/// Sweeps `n_list`; each trial reruns the same seeded instance. Sizes that hit a capability
/// limit are skipped with a warning on stderr.
pub fn cmd_bench(opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &n in &opts.n_list {
        match bench_one(opts, n) {
            Ok(mut r) => rows.append(&mut r),
            Err(Error::Capability(msg)) => eprintln!("warning: skipping n = {n}: {msg}"),
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

fn bench_one(opts: &BenchOptions, n: usize) -> Result<Vec<BenchRow>> {
    let inst = bench_instance(opts.family, n, opts.seed)?;
    let f = inst.objective_oracle();
    let m = inst.matroid_oracle();
    let eps = format_rational(&opts.eps);
    let mut rows = Vec::new();
    for _ in 0..opts.trials {
        let ext = Extended::new(&*f, &*m)?;
        let ev = ext.evaluator_with_cap(opts.ff_cap);
        let mut phases = Vec::new();
        let mut walls = Vec::new();
        let start = Instant::now();
        let trace = phase(&ext.ledger, "mcg", &mut phases, || {
            measured_continuous_greedy(&ext.m, &ev, &opts.eps, McgOptions::default())
        })?;
        walls.push(start.elapsed());
        if opts.with_rounding {
            let start = Instant::now();
            phase(&ext.ledger, "rounding", &mut phases, || {
                let lifted = lift_to_base_polytope(&trace.y_final, &ext.m)?;
                deterministic_pipage(&ext.m, &ev, &lifted, PipageOptions::default())
            })?;
            walls.push(start.elapsed());
        }
        for (p, w) in phases.into_iter().zip(walls) {
            rows.push(BenchRow {
                n,
                r: inst.rank(),
                eps: eps.clone(),
                phase: p.phase,
                value_queries: p.value_queries,
                independence_queries: p.independence_queries,
                wall_ms: (w.as_secs_f64() * 1e6).round() / 1e3,
            });
        }
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(out: W, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(BENCH_CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::rat;

    const FIXTURE: &str = r#"{
        "name": "tiny",
        "elements": ["a", "b", "c", "d"],
        "objective": {"type": "coverage", "covers": {"a": ["x", "y"], "b": ["y"], "c": ["z"], "d": ["x", "z"]}},
        "matroid": {"type": "uniform", "k": 2}
    }"#;

    #[test]
    fn solve_is_lossless_and_reproducible() {
        let inst = Instance::from_json_str(FIXTURE).unwrap();
        let opts = SolveOptions {
            with_opt: true,
            paranoid: true,
            ..SolveOptions::default()
        };
        let a = cmd_solve(&inst, &opts).unwrap();
        assert!(a.lossless);
        assert!(a.opt.as_ref().unwrap().ratio.is_some());
        assert_eq!(a.ledgers.last().unwrap().phase, "total");
        let text = serde_json::to_string_pretty(&a).unwrap();
        let back: SolveReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a);
        let b = cmd_solve(&inst, &opts).unwrap();
        assert_eq!(text, serde_json::to_string_pretty(&b).unwrap());
    }

    #[test]
    fn sampled_mode_reports_decomposition() {
        let inst = Instance::from_json_str(FIXTURE).unwrap();
        let opts = SolveOptions {
            mode: Mode::SampledRounding,
            seed: 5,
            ..SolveOptions::default()
        };
        let rep = cmd_solve(&inst, &opts).unwrap();
        let s = rep.sampled.as_ref().unwrap();
        assert_eq!(s.sets.len(), 8);
        assert!(rep.rounding.is_none());
        let dec = rep.ledgers.iter().find(|p| p.phase == "decomposition").unwrap();
        assert_eq!((dec.value_queries, dec.independence_queries), (0, 0));
        assert_eq!(rep.solution, s.sets[s.best_index]);
    }

    #[test]
    fn estimate_stays_below_opt() {
        let inst = Instance::from_json_str(FIXTURE).unwrap();
        let opts = SolveOptions {
            with_opt: true,
            ..SolveOptions::default()
        };
        let rep = cmd_estimate(&inst, &opts).unwrap();
        let ratio = rep.opt.unwrap().ratio.unwrap();
        assert!(ratio.approx <= 1.0);
        assert_eq!(rep.ledgers.iter().map(|p| p.phase.as_str()).collect::<Vec<_>>(), ["mcg", "estimate", "total"]);
        let est = &rep.ledgers[1];
        assert_eq!(est.independence_queries, 0);
    }

    #[test]
    fn bench_rows_and_header() {
        let opts = BenchOptions {
            family: Family::CutPartition,
            n_list: vec![8],
            eps: rat(1, 1),
            trials: 2,
            with_rounding: true,
            seed: 1,
            ff_cap: DEFAULT_FF_CAP,
        };
        let rows = cmd_bench(&opts).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].r, 2);
        assert_eq!(rows[0].value_queries, rows[2].value_queries);
        assert_eq!(rows[1].independence_queries, rows[3].independence_queries);
        let mut buf = Vec::new();
        write_bench_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), BENCH_CSV_HEADER.join(",") + "\n");
    }

    #[test]
    fn bench_families_have_quarter_rank() {
        for fam in [Family::CoverageUniform, Family::CutPartition] {
            for n in [8, 16, 32, 64] {
                let inst = bench_instance(fam, n, 0).unwrap();
                assert_eq!(inst.rank(), n / 4);
            }
        }
    }
}
