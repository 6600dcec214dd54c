//! Runs the measured continuous greedy and prints the per-iteration value of `F(y^i)`.
//!
//! cargo run --example continuous_greedy -- [epsilon]

use detsubmod::instance::Instance;
use detsubmod::mcg::{measured_continuous_greedy, McgOptions};
use detsubmod::pipeline::Extended;
use detsubmod::prob::{format_rational, parse_rational, to_f64};
use detsubmod::verify::brute_force_opt;

fn main() -> detsubmod::error::Result<()> {
    let eps = parse_rational(&std::env::args().nth(1).unwrap_or_else(|| "1/2".into()))?;
    let inst = Instance::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/coverage.json"))?;
    let f = inst.objective_oracle();
    let m = inst.matroid_oracle();
    let opt = brute_force_opt(&*m, &*f)?;
    let ext = Extended::new(&*f, &*m)?;
    let ev = ext.evaluator();
    let opts = McgOptions {
        record_values: true,
        ..McgOptions::default()
    };
    let trace = measured_continuous_greedy(&ext.m, &ev, &eps, opts)?;
    let p = &trace.params;
    println!(
        "eps {} -> {}, delta {}, {} iterations, {} parts",
        format_rational(&p.eps_raw),
        format_rational(&p.eps_effective),
        format_rational(&p.delta),
        p.iterations,
        p.parts
    );
    for rec in &trace.records {
        let v = rec.value_after.as_ref().expect("values recorded");
        println!(
            "i = {:2}  supp {:2}  ff {:2}  F(y^i) = {:.4}  ({:.3} of OPT)",
            rec.i,
            rec.y_after.supp(),
            rec.y_after.ff(),
            to_f64(v),
            to_f64(&(v / &opt.opt_value))
        );
    }
    println!("marg(y) = {:?}", trace.marginals().restricted(m.ground()));
    println!("queries {:?}", ext.counts());
    Ok(())
}
