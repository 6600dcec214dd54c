//! Lifts the continuous-greedy output onto the base polytope and rounds it without loss.

use detsubmod::instance::Instance;
use detsubmod::mcg::{measured_continuous_greedy, McgOptions};
use detsubmod::pipeline::Extended;
use detsubmod::prob::format_rational;
use detsubmod::prob::rat;
use detsubmod::rounding::{deterministic_pipage, lift_to_base_polytope, PipageOptions};

fn main() -> detsubmod::error::Result<()> {
    let inst = Instance::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/graphic.json"))?;
    let f = inst.objective_oracle();
    let m = inst.matroid_oracle();
    let ext = Extended::new(&*f, &*m)?;
    let ev = ext.evaluator();
    let trace = measured_continuous_greedy(&ext.m, &ev, &rat(1, 2), McgOptions::default())?;
    let lifted = lift_to_base_polytope(&trace.y_final, &ext.m)?;
    println!("F(y)       = {}", format_rational(&ev.eval_f(&trace.y_final)?));
    println!("F(lifted)  = {}", format_rational(&ev.eval_f(&lifted)?));
    let before = ext.counts();
    let out = deterministic_pipage(&ext.m, &ev, &lifted, PipageOptions { paranoid: true })?;
    println!("T          = {:?}", inst.names(out.set));
    println!("f(T)       = {}", format_rational(&f.value(out.set)));
    println!("stats      = {:?}", out.stats);
    println!("queries    = {:?}", ext.counts() - before);
    Ok(())
}
