//! Runs the property suite on an instance and summarizes pass counts per check.
//!
//! cargo run --example verify_properties -- crates/core/fixtures/cut.json

use std::collections::BTreeMap;

use detsubmod::instance::Instance;
use detsubmod::verify::property_suite;

fn main() -> detsubmod::error::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/cut.json").into());
    let inst = Instance::load(&path)?;
    let f = inst.objective_oracle();
    let m = inst.matroid_oracle();
    let lines = property_suite(&inst.name, &*f, &*m, 0)?;
    let mut per: BTreeMap<&str, (usize, usize, f64)> = BTreeMap::new();
    for l in &lines {
        let e = per.entry(&l.check).or_insert((0, 0, f64::INFINITY));
        e.0 += 1;
        e.1 += usize::from(l.pass);
        e.2 = e.2.min(l.slack);
    }
    for (check, (total, pass, slack)) in &per {
        println!("{check:32} {pass:4}/{total:<4} min slack {slack:.4}");
    }
    Ok(())
}
