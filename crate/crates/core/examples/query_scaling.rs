//! Per-iteration query accounting of the continuous greedy on generated instances of growing
//! size. Shows how `ff(y)` and the split's `g` queries combine into value queries.
//!
//! cargo run --release --example query_scaling -- [coverage-uniform|cut-partition] [n...]

use detsubmod::cli::{bench_instance, Family};
use detsubmod::mcg::{measured_continuous_greedy, McgOptions};
use detsubmod::pipeline::Extended;
use detsubmod::prob::rat;

fn main() -> detsubmod::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let family = match args.next().as_deref() {
        Some("cut-partition") => Family::CutPartition,
        _ => Family::CoverageUniform,
    };
    let mut sizes: Vec<usize> = args.filter_map(|a| a.parse().ok()).collect();
    if sizes.is_empty() {
        sizes = vec![8, 16, 32];
    }
    let mut last = None;
    for n in sizes {
        let inst = bench_instance(family, n, 0)?;
        let f = inst.objective_oracle();
        let m = inst.matroid_oracle();
        let ext = Extended::new(&*f, &*m)?;
        let ev = ext.evaluator();
        let trace = measured_continuous_greedy(&ext.m, &ev, &rat(1, 2), McgOptions::default())?;
        println!("{} n={n} r={}", family.name(), inst.rank());
        for rec in &trace.records {
            println!(
                "  i={} ff(before)={:2} g_queries={:5} value_queries={:9} parts={:?}",
                rec.i,
                rec.y_before.ff(),
                rec.g_queries,
                rec.g_queries << rec.y_before.ff(),
                rec.parts.parts.iter().map(|p| inst.names(*p)).collect::<Vec<_>>()
            );
        }
        let total = ext.counts().value_queries;
        match last {
            Some(prev) => println!("  total={total} ratio={:.2}", total as f64 / prev as f64),
            None => println!("  total={total}"),
        }
        last = Some(total);
    }
    Ok(())
}
