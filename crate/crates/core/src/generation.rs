//! Variant generation: products, delta activation and ADO application.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::formula::{all_assignments, models, Formula, Product};
use crate::model::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variant {
    pub product: Product,
    pub program: Program,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApplyErrorKind {
    AddExisting,
    RemoveMissing,
    ModifyMissing,
    ExtendsCycle,
}

impl fmt::Display for ApplyErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ApplyErrorKind::AddExisting => "add-existing",
            ApplyErrorKind::RemoveMissing => "remove-missing",
            ApplyErrorKind::ModifyMissing => "modify-missing",
            ApplyErrorKind::ExtendsCycle => "extends-cycle",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Error, Serialize)]
#[error("{kind} on `{reference}`")]
pub struct ApplyError {
    pub kind: ApplyErrorKind,
    pub reference: Reference,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerationError {
    #[error("product {{{}}} violates the feature model", fmt_product(.0))]
    InvalidProduct(Product),
    #[error("delta module `{delta}` fails for product {{{}}}: {error}", fmt_product(.product))]
    Apply { delta: DeltaName, product: Product, error: ApplyError },
}

pub fn fmt_product(p: &Product) -> String {
    p.iter().map(String::as_str).collect::<Vec<_>>().join(", ")
}

/// All products of the feature model, sorted.
pub fn enumerate_products(pl: &ProductLine) -> Vec<Product> {
    models(&pl.features, &pl.formula)
}

fn check_product(pl: &ProductLine, p: &Product) -> Result<(), GenerationError> {
    let known = p.iter().all(|f| pl.features.contains(f));
    if known && pl.formula.eval(p) {
        Ok(())
    } else {
        Err(GenerationError::InvalidProduct(p.clone()))
    }
}

/// Activated modules in application order (partition order, names sorted within a partition).
pub fn activated_deltas(pl: &ProductLine, p: &Product) -> Result<Vec<DeltaName>, GenerationError> {
    check_product(pl, p)?;
    Ok(pl
        .order
        .names()
        .filter(|d| pl.activation(d).is_some_and(|f| f.eval(p)))
        .cloned()
        .collect())
}

/// A module's operations in application order: class removals, class additions,
/// then attribute operations, each group in reference order.
pub fn application_sequence(module: &DeltaModule) -> Vec<&Ado> {
    let rank = |a: &Ado| match (&a.target, a.op) {
        (Reference::Class(_), Op::Removes) => 0,
        (Reference::Class(_), _) => 1,
        _ => 2,
    };
    let mut ops: Vec<&Ado> = module.ops().collect();
    ops.sort_by(|a, b| rank(a).cmp(&rank(b)).then_with(|| a.target.cmp(&b.target)));
    ops
}

fn aux_prefix(method: &str) -> String {
    format!("{method}{ORIGINAL_MARKER}")
}

fn remove_attribute(class: &mut ClassDecl, name: &str) {
    let prefix = aux_prefix(name);
    class.attributes.retain(|a| a.name() != name && !a.name().starts_with(&prefix));
}

/// Applies one operation to `prog` in place. On error `prog` may be partially updated.
pub fn apply_ado_mut(ado: &Ado, prog: &mut Program) -> Result<(), ApplyError> {
    let fail = |kind| Err(ApplyError { kind, reference: ado.target.clone() });
    match (&ado.target, ado.op) {
        (Reference::Class(c), Op::Removes) => {
            let Some(i) = prog.classes.iter().position(|cd| cd.name == *c) else {
                return fail(ApplyErrorKind::RemoveMissing);
            };
            prog.classes.remove(i);
            Ok(())
        }
        (Reference::Class(c), _) => {
            let Payload::Class(decl) = &ado.payload else {
                return fail(ApplyErrorKind::ModifyMissing);
            };
            if prog.class(c).is_some() {
                return fail(ApplyErrorKind::AddExisting);
            }
            prog.classes.push(decl.clone());
            if prog.find_extends_cycle().is_some() {
                return fail(ApplyErrorKind::ExtendsCycle);
            }
            Ok(())
        }
        (Reference::Attr(c, a), op) => {
            let Some(class) = prog.class_mut(c) else {
                // Removing part of an absent class leaves the program unchanged.
                if op == Op::Removes {
                    return Ok(());
                }
                return Err(ApplyError { kind: ApplyErrorKind::ModifyMissing, reference: Reference::class(c) });
            };
            let existing = class.attribute_position(a);
            match (op, &ado.payload) {
                (Op::Modifies, Payload::Superclass(sup)) => {
                    class.superclass = sup.clone();
                    if prog.find_extends_cycle().is_some() {
                        return fail(ApplyErrorKind::ExtendsCycle);
                    }
                    Ok(())
                }
                (Op::Adds, Payload::Attribute(attr)) => {
                    if existing.is_some() {
                        return fail(ApplyErrorKind::AddExisting);
                    }
                    class.attributes.push(attr.clone());
                    Ok(())
                }
                (Op::Removes, _) => {
                    if existing.is_none() {
                        return fail(ApplyErrorKind::RemoveMissing);
                    }
                    remove_attribute(class, a);
                    Ok(())
                }
                (Op::Readds, Payload::Attribute(attr)) => {
                    if existing.is_none() {
                        return fail(ApplyErrorKind::RemoveMissing);
                    }
                    remove_attribute(class, a);
                    class.attributes.push(attr.clone());
                    Ok(())
                }
                (Op::Modifies, Payload::Attribute(Attribute::Method(m))) => {
                    let Some(i) = existing else {
                        return fail(ApplyErrorKind::ModifyMissing);
                    };
                    let Attribute::Method(old) = &class.attributes[i] else {
                        return fail(ApplyErrorKind::ModifyMissing);
                    };
                    let mut new = m.clone();
                    if m.body.contains_original() {
                        let prefix = aux_prefix(a);
                        let k = 1 + class.attributes.iter().filter(|x| x.name().starts_with(&prefix)).count();
                        let aux_name = format!("{prefix}{k}");
                        let mut aux = old.clone();
                        aux.name = aux_name.clone();
                        new.body = m.body.redirect_original(&aux_name);
                        class.attributes.push(Attribute::Method(aux));
                    }
                    class.attributes[i] = Attribute::Method(new);
                    Ok(())
                }
                _ => fail(ApplyErrorKind::ModifyMissing),
            }
        }
    }
}

/// Pure form of [`apply_ado_mut`].
pub fn apply_ado(ado: &Ado, prog: &Program) -> Result<Program, ApplyError> {
    let mut out = prog.clone();
    apply_ado_mut(ado, &mut out)?;
    Ok(out)
}

/// Applies a module to `prog`, naming the module in any error.
pub fn apply_module(module: &DeltaModule, prog: &mut Program) -> Result<(), ApplyError> {
    for ado in application_sequence(module) {
        apply_ado_mut(ado, prog)?;
    }
    Ok(())
}

pub fn generate_variant(pl: &ProductLine, p: &Product) -> Result<Variant, GenerationError> {
    let mut program = pl.base.clone();
    for name in activated_deltas(pl, p)? {
        let module = &pl.deltas[&name];
        apply_module(module, &mut program).map_err(|error| GenerationError::Apply {
            delta: name.clone(),
            product: p.clone(),
            error,
        })?;
    }
    Ok(Variant { product: p.clone(), program })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ambiguity {
    pub partition: usize,
    pub first: DeltaName,
    pub second: DeltaName,
    pub first_ref: Reference,
    pub second_ref: Reference,
}

impl fmt::Display for Ambiguity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "partition {}: `{}` touches `{}` and `{}` touches `{}`",
            self.partition, self.first, self.first_ref, self.second, self.second_ref
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct AmbiguityReport {
    pub conflicts: Vec<Ambiguity>,
}

/// Strong unambiguity: co-activatable modules of one partition touch pairwise
/// incomparable references.
pub fn check_unambiguity(pl: &ProductLine) -> Result<(), AmbiguityReport> {
    let products: Vec<Product> = all_assignments(&pl.features)
        .into_iter()
        .filter(|p| pl.formula.eval(p))
        .collect();
    let co_active = |a: &Formula, b: &Formula| products.iter().any(|p| a.eval(p) && b.eval(p));

    let mut report = AmbiguityReport::default();
    for (idx, part) in pl.order.partitions.iter().enumerate() {
        let names: Vec<&DeltaName> = part.iter().collect();
        for (i, d1) in names.iter().enumerate() {
            for d2 in &names[i + 1..] {
                let (m1, m2) = (&pl.deltas[*d1], &pl.deltas[*d2]);
                if !co_active(&m1.activation, &m2.activation) {
                    continue;
                }
                for r1 in m1.refs() {
                    if let Some(r2) = m2.refs().find(|r2| r1.comparable(r2)) {
                        report.conflicts.push(Ambiguity {
                            partition: idx,
                            first: (*d1).clone(),
                            second: (*d2).clone(),
                            first_ref: r1.clone(),
                            second_ref: r2.clone(),
                        });
                    }
                }
            }
        }
    }
    if report.conflicts.is_empty() {
        Ok(())
    } else {
        Err(report)
    }
}
