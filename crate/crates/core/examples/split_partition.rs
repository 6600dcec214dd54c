//! Splits a base of the dummy-extended matroid into `ℓ` parts with the greedy and the
//! threshold-accelerated procedures, and prints query counts for both.

use detsubmod::instance::Instance;
use detsubmod::pipeline::Extended;
use detsubmod::prob::{format_rational, rat};
use detsubmod::split::{accelerated_split, split};

fn main() -> detsubmod::error::Result<()> {
    let inst = Instance::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/cut.json"))?;
    let f = inst.objective_oracle();
    let m = inst.matroid_oracle();
    let ext = Extended::new(&*f, &*m)?;
    let show = |label: &str, p: &detsubmod::split::Partition| {
        let parts: Vec<Vec<String>> = p.parts.iter().map(|s| inst.names(*s)).collect();
        println!("  {label}: {parts:?}, gain {}", format_rational(&p.gain(&ext.f)));
    };
    for l in 1..=3 {
        println!("l = {l}");
        let before = ext.counts();
        let greedy = split(&ext.m, &ext.f, l)?;
        let mid = ext.counts();
        let fast = accelerated_split(&ext.m, &ext.f, l, &rat(1, 10))?;
        let after = ext.counts();
        show("greedy", &greedy);
        println!("    queries {:?}", mid - before);
        show("accelerated", &fast);
        println!("    queries {:?}", after - mid);
    }
    Ok(())
}
