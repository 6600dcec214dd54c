//! Evaluates the extension `F(y)` at a hand-built point and compares it with the multilinear
//! value `F̄` of its marginals.

use detsubmod::extension::ExtensionEvaluator;
use detsubmod::ground::SubsetMask;
use detsubmod::instance::Instance;
use detsubmod::prob::{format_rational, rat, Prob};
use detsubmod::vector::SparseExtVec;

fn main() -> detsubmod::error::Result<()> {
    let inst = Instance::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/coverage.json"))?;
    let f = inst.objective_oracle();
    let ev = ExtensionEvaluator::new(&*f);

    // Two overlapping sets with probability 1/2 each and one certain singleton.
    let y = SparseExtVec::from_entries([
        (SubsetMask(0b0000_0011), Prob::new(rat(1, 2))?),
        (SubsetMask(0b0000_0110), Prob::new(rat(1, 2))?),
        (SubsetMask(0b1000_0000), Prob::one()),
    ]);
    let x = y.marginals(inst.n());
    println!("y = {y:?}");
    println!("supp = {}, ff = {}, evaluation cost = {}", y.supp(), y.ff(), ev.prepare(&y)?.cost());
    println!("F(y)      = {}", format_rational(&ev.eval_f(&y)?));
    println!("marg(y)   = {x:?}");
    println!("Fbar(x)   = {}", format_rational(&ev.eval_fbar_exact(&x)?));
    for key in y.keys() {
        println!("dF/dy_{:?} = {}", inst.names(key), format_rational(&ev.partial_wrt(&y, key)?));
    }
    Ok(())
}
