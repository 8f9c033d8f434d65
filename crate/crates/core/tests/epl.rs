use std::collections::BTreeSet;

use monodelta_core::analysis::{classify, project, remove_empty_deltas, Monotonicity};
use monodelta_core::formula::{Formula, Product};
use monodelta_core::generation::{activated_deltas, enumerate_products, generate_variant, ApplyErrorKind, GenerationError};
use monodelta_core::model::{Op, Reference};
use monodelta_core::oracle::{check_equivalence, diff_modulo_formulas};
use monodelta_core::refactor::{refactor, RefactorError};
use monodelta_core::syntax::{parse_spl, print_spl};
use monodelta_core::{fixtures, Direction};

fn product(names: &[&str]) -> Product {
    names.iter().map(|s| s.to_string()).collect()
}

#[test]
fn golden_increasing() {
    let out = refactor(&fixtures::epl(), Direction::Increasing).unwrap();
    let golden = parse_spl(include_str!("golden/epl_increasing.spl")).unwrap();
    assert_eq!(diff_modulo_formulas(&out, &golden), Vec::<String>::new());
    assert!(check_equivalence(&out, &golden).equivalent);
}

#[test]
fn increasing_output_reparses_identically() {
    let out = refactor(&fixtures::epl(), Direction::Increasing).unwrap();
    assert_eq!(parse_spl(&print_spl(&out)).unwrap(), out);
}

#[test]
fn activated_modules_follow_order() {
    let pl = fixtures::epl();
    let p = product(&["Lit", "Add", "Neg", "Print", "Eval2"]);
    let seq = activated_deltas(&pl, &p).unwrap();
    assert_eq!(seq, ["DNeg", "DNegPrint", "DOptionalPrint", "DAddEval2", "DLitEval2", "DNegEval2"]);
}

#[test]
fn minimal_product_is_base() {
    let pl = fixtures::epl();
    let v = generate_variant(&pl, &product(&["Lit", "Print", "Add"])).unwrap();
    assert_eq!(v.program, pl.base);
}

#[test]
fn removing_add_drops_class() {
    let pl = fixtures::epl();
    let v = generate_variant(&pl, &product(&["Lit", "Print"])).unwrap();
    assert!(v.program.class("Add").is_none());
    assert!(v.program.class("Lit").is_some());
}

#[test]
fn invalid_product_rejected() {
    let pl = fixtures::epl();
    let err = generate_variant(&pl, &product(&["Lit", "Print", "Eval1", "Eval2"])).unwrap_err();
    assert!(matches!(err, GenerationError::InvalidProduct(_)));
}

#[test]
fn missing_target_reports_reference() {
    let src = "features A; constraint true; base { class C extends Object { } }
               delta D when A { modifies C { removes f } } order D;";
    let pl = parse_spl(src).unwrap();
    let err = generate_variant(&pl, &product(&["A"])).unwrap_err();
    match err {
        GenerationError::Apply { delta, error, .. } => {
            assert_eq!(delta, "D");
            assert_eq!(error.kind, ApplyErrorKind::RemoveMissing);
            assert_eq!(error.reference, Reference::attr("C", "f"));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn epl_classification() {
    let r = classify(&fixtures::epl());
    for c in Monotonicity::ALL {
        assert!(!r.holds(c), "{c} should not hold");
    }
    let dec = refactor(&fixtures::epl(), Direction::Decreasing).unwrap();
    let r = classify(&dec);
    assert!(r.holds(Monotonicity::ReaddPseudoDecreasing));
    assert!(!r.holds(Monotonicity::PseudoDecreasing));
}

#[test]
fn decreasing_then_cleanup() {
    let pl = fixtures::epl();
    let dec = refactor(&pl, Direction::Decreasing).unwrap();
    let clean = remove_empty_deltas(&dec);
    assert!(clean.deltas.len() < dec.deltas.len());
    assert_eq!(clean.count_op(Op::Adds), 0);
    assert!(check_equivalence(&pl, &clean).equivalent);
}

#[test]
fn projection_without_eval2() {
    let pl = fixtures::epl();
    let p = project(&pl, &Formula::not(Formula::var("Eval2"))).unwrap();
    let names: BTreeSet<&str> = p.deltas.keys().map(String::as_str).collect();
    for gone in ["DLitEval2", "DAddEval2", "DNegEval2"] {
        assert!(!names.contains(gone));
    }
    assert_eq!(enumerate_products(&p).len(), 8);
    for prod in enumerate_products(&p) {
        assert_eq!(generate_variant(&pl, &prod).unwrap().program, generate_variant(&p, &prod).unwrap().program);
    }
}

#[test]
fn ambiguous_input_refused() {
    let src = "features A, B; constraint true; base { class C extends Object { } }
               delta D1 when A { modifies C { adds int f; } }
               delta D2 when B { modifies C { removes f } }
               order {D1, D2};";
    let pl = parse_spl(src).unwrap();
    for dir in [Direction::Increasing, Direction::Decreasing] {
        assert!(matches!(refactor(&pl, dir), Err(RefactorError::Ambiguous(_))));
    }
}

#[test]
fn exclusive_modules_share_partition() {
    let src = "features A, B; constraint !(A && B); base { class C extends Object { } }
               delta D1 when A { modifies C { adds int f; } }
               delta D2 when B { modifies C { adds int f; } }
               order {D1, D2};";
    let pl = parse_spl(src).unwrap();
    assert!(refactor(&pl, Direction::Increasing).is_ok());
}
