//! Loads a JSON instance, prints its size and rank, and finds the exhaustive optimum when the
//! ground set is small enough.
//!
//! cargo run --example load_instance -- crates/core/fixtures/coverage.json

use detsubmod::ground::SubsetMask;
use detsubmod::instance::Instance;
use detsubmod::prob::format_rational;
use detsubmod::verify::{brute_force_opt, BRUTE_FORCE_CAP};

fn main() -> detsubmod::error::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/coverage.json").into());
    let inst = Instance::load(&path)?;
    let f = inst.objective_oracle();
    let m = inst.matroid_oracle();
    println!("{}: n = {}, rank = {}, monotone = {}", inst.name, inst.n(), inst.rank(), f.is_monotone());
    println!("f(N) = {}", format_rational(&f.value(SubsetMask::full(inst.n()))));
    if inst.n() <= BRUTE_FORCE_CAP {
        let opt = brute_force_opt(&*m, &*f)?;
        println!("OPT = {:?} with value {}", inst.names(opt.opt_set), format_rational(&opt.opt_value));
    }
    println!("{}", inst.to_json());
    Ok(())
}
