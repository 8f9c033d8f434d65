//! Brute-force extensional equivalence of product lines.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use serde::Serialize;

use crate::formula::{equivalent, Product};
use crate::generation::{enumerate_products, generate_variant, ApplyError, GenerationError};
use crate::model::*;
use crate::syntax::print_program;

/// Classes sorted by name; inside each class, fields then methods, each sorted by name.
pub fn canonicalize(p: &Program) -> Program {
    let mut classes = p.classes.clone();
    classes.sort_by(|a, b| a.name.cmp(&b.name));
    for c in &mut classes {
        c.attributes.sort_by(|a, b| {
            let rank = |x: &Attribute| matches!(x, Attribute::Method(_)) as u8;
            rank(a).cmp(&rank(b)).then_with(|| a.name().cmp(b.name()))
        });
    }
    Program { classes }
}

/// What generation produced for one product, in comparable form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Program(Program),
    Failed(ApplyError),
}

impl Outcome {
    fn of(pl: &ProductLine, p: &Product) -> Outcome {
        match generate_variant(pl, p) {
            Ok(v) => Outcome::Program(canonicalize(&v.program)),
            Err(GenerationError::Apply { error, .. }) => Outcome::Failed(error),
            Err(GenerationError::InvalidProduct(_)) => unreachable!("products come from the feature model"),
        }
    }

    pub fn tag(&self) -> OutcomeTag {
        match self {
            Outcome::Program(prog) => {
                let mut h = DefaultHasher::new();
                print_program(prog).hash(&mut h);
                OutcomeTag::Variant(format!("{:016x}", h.finish()))
            }
            Outcome::Failed(e) => OutcomeTag::Error(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeTag {
    Variant(String),
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProductRow {
    pub product: Vec<FeatureName>,
    pub first: Option<OutcomeTag>,
    pub second: Option<OutcomeTag>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub product: Vec<FeatureName>,
    pub difference: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceVerdict {
    pub equivalent: bool,
    pub witnesses: Vec<Witness>,
    pub table: Vec<ProductRow>,
}

fn describe(a: &Outcome, b: &Outcome) -> String {
    match (a, b) {
        (Outcome::Failed(x), Outcome::Failed(y)) => format!("errors differ: {x} vs {y}"),
        (Outcome::Failed(x), Outcome::Program(_)) => format!("only the first fails: {x}"),
        (Outcome::Program(_), Outcome::Failed(y)) => format!("only the second fails: {y}"),
        (Outcome::Program(p), Outcome::Program(q)) => {
            let names = |pr: &Program| pr.classes.iter().map(|c| c.name.clone()).collect::<BTreeSet<_>>();
            let (np, nq) = (names(p), names(q));
            if np != nq {
                let only_p: Vec<_> = np.difference(&nq).cloned().collect();
                let only_q: Vec<_> = nq.difference(&np).cloned().collect();
                return format!("classes only in first: {only_p:?}; only in second: {only_q:?}");
            }
            for (c, d) in p.classes.iter().zip(&q.classes) {
                if c.superclass != d.superclass {
                    return format!("class `{}` extends `{}` vs `{}`", c.name, c.superclass, d.superclass);
                }
                if c.attributes != d.attributes {
                    let an = |x: &ClassDecl| x.attributes.iter().map(|a| a.name().to_string()).collect::<Vec<_>>();
                    if an(c) != an(d) {
                        return format!("class `{}` attributes {:?} vs {:?}", c.name, an(c), an(d));
                    }
                    let bad = c.attributes.iter().zip(&d.attributes).find(|(x, y)| x != y).expect("differ");
                    return format!("declaration of `{}.{}` differs", c.name, bad.0.name());
                }
            }
            "variants differ".into()
        }
    }
}

/// Same products, and per product the same canonical variant or the same error.
pub fn check_equivalence(a: &ProductLine, b: &ProductLine) -> EquivalenceVerdict {
    let pa: BTreeSet<Product> = enumerate_products(a).into_iter().collect();
    let pb: BTreeSet<Product> = enumerate_products(b).into_iter().collect();
    let all: Vec<Product> = pa.union(&pb).cloned().collect();

    let rows: Vec<(ProductRow, Option<Witness>)> = all
        .par_iter()
        .map(|p| {
            let first = pa.contains(p).then(|| Outcome::of(a, p));
            let second = pb.contains(p).then(|| Outcome::of(b, p));
            let product: Vec<FeatureName> = p.iter().cloned().collect();
            let difference = match (&first, &second) {
                (Some(x), Some(y)) if x == y => None,
                (Some(x), Some(y)) => Some(describe(x, y)),
                (Some(_), None) => Some("product only in the first product line".into()),
                (None, Some(_)) => Some("product only in the second product line".into()),
                (None, None) => unreachable!(),
            };
            let witness = difference.map(|difference| Witness { product: product.clone(), difference });
            let row = ProductRow {
                product,
                first: first.as_ref().map(Outcome::tag),
                second: second.as_ref().map(Outcome::tag),
            };
            (row, witness)
        })
        .collect();

    let mut table = Vec::with_capacity(rows.len());
    let mut witnesses = Vec::new();
    for (row, w) in rows {
        table.push(row);
        witnesses.extend(w);
    }
    EquivalenceVerdict { equivalent: witnesses.is_empty() && pa == pb, witnesses, table }
}

/// Structural comparison that treats formulas as equal when they have the same
/// truth table and ignores the declaration order of modules. Returns the differences.
pub fn diff_modulo_formulas(a: &ProductLine, b: &ProductLine) -> Vec<String> {
    let mut out = Vec::new();
    if a.features != b.features {
        out.push(format!("features {:?} vs {:?}", a.features, b.features));
        return out;
    }
    let fs = &a.features;
    if !equivalent(fs, &a.formula, &b.formula) {
        out.push(format!("constraint {} vs {}", a.formula, b.formula));
    }
    if a.base != b.base {
        out.push("base programs differ".into());
    }
    for (name, da) in &a.deltas {
        let Some(db) = b.deltas.get(name) else {
            out.push(format!("`{name}` only in the first"));
            continue;
        };
        if !equivalent(fs, &da.activation, &db.activation) {
            out.push(format!("activation of `{name}`: {} vs {}", da.activation, db.activation));
        }
        if !da.ops().eq(db.ops()) {
            out.push(format!("operations of `{name}` differ"));
        }
    }
    for name in b.deltas.keys().filter(|n| !a.deltas.contains_key(*n)) {
        out.push(format!("`{name}` only in the second"));
    }
    if a.order != b.order {
        out.push("application orders differ".into());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::project;
    use crate::fixtures;
    use crate::formula::Formula;

    #[test]
    fn canonical_order() {
        let mk = |n: &str| ClassDecl { name: n.into(), superclass: OBJECT.into(), attributes: vec![] };
        let p = Program { classes: vec![mk("B"), mk("A")] };
        let c = canonicalize(&p);
        assert_eq!(c.classes[0].name, "A");
        assert_eq!(canonicalize(&c), c);
    }

    #[test]
    fn fields_before_methods() {
        let pl = fixtures::epl();
        let lit = canonicalize(&pl.base).classes.into_iter().find(|c| c.name == "Lit").unwrap();
        let names: Vec<&str> = lit.attributes.iter().map(|a| a.name()).collect();
        assert_eq!(names, ["value", "setLit", "toString"]);
    }

    #[test]
    fn reflexive() {
        let pl = fixtures::epl();
        let v = check_equivalence(&pl, &pl);
        assert!(v.equivalent);
        assert_eq!(v.table.len(), 12);
    }

    #[test]
    fn projection_is_not_equivalent() {
        let pl = fixtures::epl();
        let projected = project(&pl, &Formula::not(Formula::var("Neg"))).unwrap();
        let v = check_equivalence(&pl, &projected);
        assert!(!v.equivalent);
        let witnessed: BTreeSet<Vec<String>> = v.witnesses.iter().map(|w| w.product.clone()).collect();
        let with_neg: BTreeSet<Vec<String>> = enumerate_products(&pl)
            .into_iter()
            .filter(|p| p.contains("Neg"))
            .map(|p| p.into_iter().collect())
            .collect();
        assert_eq!(witnessed, with_neg);
    }
}
