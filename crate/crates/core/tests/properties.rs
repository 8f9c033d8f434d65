use monodelta_core::analysis::{classify, project, remove_empty_deltas, Monotonicity as M};
use monodelta_core::formula::Formula;
use monodelta_core::generation::{activated_deltas, apply_module, enumerate_products, generate_variant};
use monodelta_core::model::{leq, Op, ProductLine, Reference};
use monodelta_core::oracle::{canonicalize, check_equivalence};
use monodelta_core::random::{generate_random_spl, OpWeights, RandomSplSpec};
use monodelta_core::refactor::{refactor_decreasing, refactor_increasing};
use monodelta_core::syntax::{parse_spl, print_spl};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spl(seed: u64) -> ProductLine {
    generate_random_spl(&RandomSplSpec::with_seed(seed)).unwrap()
}

fn spl_with(seed: u64, weights: OpWeights) -> ProductLine {
    generate_random_spl(&RandomSplSpec { weights, ..RandomSplSpec::with_seed(seed) }).unwrap()
}

fn reference() -> impl Strategy<Value = Reference> {
    let class = prop::sample::select(vec!["A", "B"]);
    let attr = prop::option::of(prop::sample::select(vec!["f", "g", "extends"]));
    (class, attr).prop_map(|(c, a)| match a {
        None => Reference::class(c),
        Some(a) => Reference::attr(c, a),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prefix_order_is_partial_order(a in reference(), b in reference(), c in reference()) {
        prop_assert!(leq(&a, &a));
        if leq(&a, &b) && leq(&b, &a) {
            prop_assert_eq!(&a, &b);
        }
        if leq(&a, &b) && leq(&b, &c) {
            prop_assert!(leq(&a, &c));
        }
        prop_assert_eq!(a.comparable(&b), leq(&a, &b) || leq(&b, &a));
    }

    #[test]
    fn class_implications(seed in any::<u64>()) {
        let pl = spl(seed);
        for out in [pl.clone(), refactor_increasing(&pl).unwrap(), refactor_decreasing(&pl).unwrap()] {
            let r = classify(&out);
            let chains = [
                (M::StrictlyIncreasing, M::Increasing),
                (M::Increasing, M::PseudoIncreasing),
                (M::StrictlyDecreasing, M::Decreasing),
                (M::Decreasing, M::PseudoDecreasing),
                (M::ReaddStrictlyDecreasing, M::ReaddDecreasing),
                (M::ReaddDecreasing, M::ReaddPseudoDecreasing),
                (M::StrictlyDecreasing, M::ReaddStrictlyDecreasing),
                (M::Decreasing, M::ReaddDecreasing),
                (M::PseudoDecreasing, M::ReaddPseudoDecreasing),
            ];
            for (strong, weak) in chains {
                prop_assert!(!r.holds(strong) || r.holds(weak), "{} without {}", strong, weak);
            }
        }
    }

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let pl = spl(seed);
        let back = parse_spl(&print_spl(&pl)).unwrap();
        prop_assert_eq!(&back, &pl);
        prop_assert_eq!(print_spl(&back), print_spl(&pl));
    }

    #[test]
    fn generator_is_deterministic(seed in any::<u64>()) {
        prop_assert_eq!(spl(seed), spl(seed));
    }

    #[test]
    fn cleanup_preserves_variants(seed in any::<u64>()) {
        let pl = refactor_decreasing(&spl(seed)).unwrap();
        let clean = remove_empty_deltas(&pl);
        prop_assert!(check_equivalence(&pl, &clean).equivalent);
    }

    #[test]
    fn projection_keeps_surviving_variants(seed in any::<u64>(), pick in any::<prop::sample::Index>(), negate in any::<bool>()) {
        let pl = spl(seed);
        let f = Formula::var(pick.get(&pl.features).clone());
        let keep = if negate { Formula::not(f) } else { f };
        let p = project(&pl, &keep).unwrap();
        for prod in enumerate_products(&p) {
            prop_assert!(keep.eval(&prod));
            let a = generate_variant(&pl, &prod).map(|v| canonicalize(&v.program)).map_err(|e| e.to_string());
            let b = generate_variant(&p, &prod).map(|v| canonicalize(&v.program)).map_err(|e| e.to_string());
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn equivalence_reflexive_and_symmetric(seed in any::<u64>()) {
        let pl = spl(seed);
        let other = project(&pl, &Formula::var(pl.features[0].clone())).unwrap();
        prop_assert!(check_equivalence(&pl, &pl).equivalent);
        prop_assert_eq!(check_equivalence(&pl, &other).equivalent, check_equivalence(&other, &pl).equivalent);
    }

    #[test]
    fn increasing_without_removes_is_identity(seed in any::<u64>()) {
        let weights = OpWeights { remove_class: 0, remove_attribute: 0, ..OpWeights::default() };
        let pl = spl_with(seed, weights);
        prop_assert_eq!(refactor_increasing(&pl).unwrap(), pl);
    }

    #[test]
    fn decreasing_without_adds_is_identity(seed in any::<u64>()) {
        let weights = OpWeights { add_class: 0, add_attribute: 0, ..OpWeights::default() };
        let pl = spl_with(seed, weights);
        prop_assert_eq!(pl.count_op(Op::Adds), 0);
        prop_assert_eq!(refactor_decreasing(&pl).unwrap(), pl);
    }

    #[test]
    fn refactoring_is_idempotent(seed in any::<u64>()) {
        let pl = spl(seed);
        let inc = refactor_increasing(&pl).unwrap();
        prop_assert_eq!(inc.count_op(Op::Removes), 0);
        prop_assert_eq!(refactor_increasing(&inc).unwrap(), inc);
        let dec = refactor_decreasing(&pl).unwrap();
        prop_assert_eq!(dec.count_op(Op::Adds), 0);
        prop_assert_eq!(refactor_decreasing(&dec).unwrap(), dec);
    }

    #[test]
    fn order_within_partition_is_irrelevant(seed in any::<u64>(), shuffle in any::<u64>()) {
        let pl = spl(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle);
        for prod in enumerate_products(&pl) {
            let seq = activated_deltas(&pl, &prod).unwrap();
            let mut blocks: Vec<Vec<&String>> = Vec::new();
            let mut last = None;
            for d in &seq {
                let i = pl.order.partition_of(d);
                if i != last {
                    blocks.push(Vec::new());
                    last = i;
                }
                blocks.last_mut().unwrap().push(d);
            }
            let mut prog = pl.base.clone();
            for block in &mut blocks {
                block.shuffle(&mut rng);
                for d in block.iter() {
                    apply_module(pl.delta(d).unwrap(), &mut prog).unwrap();
                }
            }
            let expected = generate_variant(&pl, &prod).unwrap().program;
            prop_assert_eq!(canonicalize(&prog), canonicalize(&expected));
        }
    }
}
