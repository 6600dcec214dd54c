use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use detsubmod::extension::ExtensionEvaluator;
use detsubmod::ground::SubsetMask;
use detsubmod::instance::Instance;
use detsubmod::matroids::{rank, IndependenceOracle};
use detsubmod::pipeline::Extended;
use detsubmod::prob::{format_rational, parse_rational, rat, Prob};
use detsubmod::split::split;
use detsubmod::vector::SparseExtVec;
use detsubmod::verify::{random_instance, MATROID_KINDS, OBJECTIVE_KINDS};

const WIDTH: usize = 6;

fn prob() -> impl Strategy<Value = Prob> {
    (0i64..=8, 1i64..=8).prop_map(|(a, b)| Prob::new(rat(a.min(b), b)).unwrap())
}

fn point() -> impl Strategy<Value = SparseExtVec> {
    prop::collection::vec((1u128..(1 << WIDTH), prob()), 0..6)
        .prop_map(|e| SparseExtVec::from_entries(e.into_iter().map(|(k, p)| (SubsetMask(k), p))))
}

fn instance() -> impl Strategy<Value = Instance> {
    (any::<u64>(), 0usize..3, 0usize..3, 1usize..=7).prop_map(|(seed, o, m, n)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_instance(&mut rng, OBJECTIVE_KINDS[o], MATROID_KINDS[m], n)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psum_is_commutative_and_associative(a in point(), b in point(), c in point()) {
        prop_assert_eq!(a.psum(&b), b.psum(&a));
        prop_assert_eq!(a.psum(&b).psum(&c), a.psum(&b.psum(&c)));
        prop_assert_eq!(a.psum(&SparseExtVec::zero()), a.clone());
        prop_assert!(a.psum(&b).counters_consistent());
    }

    #[test]
    fn marginals_commute_with_psum(a in point(), b in point()) {
        prop_assert_eq!(a.psum(&b).marginals(WIDTH), a.marginals(WIDTH).psum(&b.marginals(WIDTH)));
    }

    #[test]
    fn extension_agrees_on_indicators(inst in instance(), bits in any::<u128>()) {
        let f = inst.objective_oracle();
        let s = SubsetMask(bits & SubsetMask::full(inst.n()).bits());
        let ev = ExtensionEvaluator::new(&*f);
        prop_assert_eq!(ev.eval_f(&SparseExtVec::indicator(s)).unwrap(), f.value(s));
        prop_assert_eq!(ev.eval_f(&SparseExtVec::zero()).unwrap(), f.value(SubsetMask::EMPTY));
    }

    #[test]
    fn extension_is_monotone_for_monotone_objectives(inst in instance(), a in point(), b in point()) {
        let f = inst.objective_oracle();
        prop_assume!(f.is_monotone());
        let ground = SubsetMask::full(inst.n());
        let clip = |y: &SparseExtVec| SparseExtVec::from_entries(
            y.iter().map(|(k, p)| (k.intersection(ground), p.clone())).filter(|(k, _)| !k.is_empty()),
        );
        let (a, b) = (clip(&a), clip(&b));
        let ev = ExtensionEvaluator::new(&*f);
        prop_assert!(ev.eval_f(&a.psum(&b)).unwrap() >= ev.eval_f(&a).unwrap());
    }

    #[test]
    fn instance_json_round_trip(inst in instance()) {
        let back = Instance::from_json_str(&inst.to_json()).unwrap();
        prop_assert_eq!(&back.name, &inst.name);
        prop_assert_eq!(&back.elements, &inst.elements);
        prop_assert_eq!(back.rank(), inst.rank());
        let (f, g) = (inst.objective_oracle(), back.objective_oracle());
        let (m, k) = (inst.matroid_oracle(), back.matroid_oracle());
        for s in SubsetMask::full(inst.n()).subsets() {
            prop_assert_eq!(f.value(s), g.value(s));
            prop_assert_eq!(m.is_independent(s), k.is_independent(s));
        }
    }

    #[test]
    fn split_returns_disjoint_parts_of_a_base(inst in instance(), l in 1usize..=4) {
        let f = inst.objective_oracle();
        let m = inst.matroid_oracle();
        let ext = Extended::new(&*f, &*m).unwrap();
        let p = split(&ext.m, &ext.f, l).unwrap();
        prop_assert!(p.parts.len() <= l);
        let mut union = SubsetMask::EMPTY;
        for part in &p.parts {
            prop_assert!(union.is_disjoint(*part));
            union = union.union(*part);
        }
        prop_assert!(ext.m.is_independent(union));
        prop_assert_eq!(union.len(), rank(&ext.m, ext.m.ground()));
    }

    #[test]
    fn rationals_round_trip_through_text(a in -50i64..50, b in 1i64..50) {
        let r = rat(a, b);
        prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
    }
}
