//! Draws independent sets from the continuous-greedy output with the query-free random
//! decomposition and compares empirical inclusion rates with `marg(y)`.

use detsubmod::instance::Instance;
use detsubmod::mcg::{measured_continuous_greedy, random_decomposition, McgOptions};
use detsubmod::pipeline::Extended;
use detsubmod::prob::{rat, to_f64};

fn main() -> detsubmod::error::Result<()> {
    let inst = Instance::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/modular_uniform.json"))?;
    let f = inst.objective_oracle();
    let m = inst.matroid_oracle();
    let ext = Extended::new(&*f, &*m)?;
    let ev = ext.evaluator();
    let trace = measured_continuous_greedy(&ext.m, &ev, &rat(1, 2), McgOptions::default())?;
    let marg = trace.marginals();
    let draws = 2000u64;
    let mut hits = vec![0.0; inst.n()];
    let before = ext.counts();
    for seed in 0..draws {
        let (_, x) = random_decomposition(&trace, seed);
        for (u, h) in hits.iter_mut().enumerate() {
            *h += to_f64(x.get(u));
        }
    }
    assert_eq!(ext.counts(), before, "decomposition issues no queries");
    let (sets, _) = random_decomposition(&trace, 0);
    println!("seed 0 sets: {:?}", sets.iter().map(|s| inst.names(*s)).collect::<Vec<_>>());
    for (u, h) in hits.iter().enumerate() {
        println!("{:>4}: mean x = {:.3}, marg = {:.3}", inst.elements[u], h / draws as f64, to_f64(marg.get(u)));
    }
    Ok(())
}
