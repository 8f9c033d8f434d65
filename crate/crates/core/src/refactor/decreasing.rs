use std::collections::{BTreeMap, BTreeSet};

use super::{check_input, hint, FreshNamer, RefactorError};
use crate::analysis::{before, linearize_down, linearize_up};
use crate::formula::Formula;
use crate::model::*;

/// Eliminates every `adds` operation.
///
/// Every element added anywhere ends up in the base. An addition in `d1` becomes
/// a removal of the new elements under the negation of `d1`'s condition, plus
/// `readds` for elements the base already declares. Earlier removals of the added
/// elements are re-homed so that they only fire when `d1` does not.
pub fn refactor_decreasing(pl: &ProductLine) -> Result<ProductLine, RefactorError> {
    check_input(pl)?;
    let introductions = introduction_counts(pl);
    let mut out = pl.clone();
    let mut namer = FreshNamer::new(out.deltas.keys());
    let snapshot = linearize_up(&out, out.deltas.keys()).expect("declared names");
    for d1 in snapshot {
        let Some(module) = out.delta(&d1) else { continue };
        let adds: Vec<Ado> = module.ops().filter(|a| a.op == Op::Adds).cloned().collect();
        for ado1 in adds {
            out.delta_mut(&d1).expect("present").remove(&ado1.target);
            manage_operation(&mut out, &mut namer, &introductions, &d1, &ado1)?;
        }
    }
    Ok(out)
}

/// How often each reference is declared by the base and the additions of `pl`.
fn introduction_counts(pl: &ProductLine) -> BTreeMap<Reference, usize> {
    let mut counts = BTreeMap::new();
    let from_adds = pl.all_ops().filter(|(_, a)| a.op == Op::Adds).flat_map(|(_, a)| a.dom());
    for r in pl.base.declared_refs().into_iter().chain(from_adds) {
        *counts.entry(r).or_insert(0) += 1;
    }
    counts
}

fn manage_operation(
    out: &mut ProductLine,
    namer: &mut FreshNamer,
    introductions: &BTreeMap<Reference, usize>,
    d1: &str,
    ado1: &Ado,
) -> Result<(), RefactorError> {
    let cond1 = out.activation(d1).expect("present").clone();
    let dom = ado1.dom();
    let earlier = before(out, d1).expect("present");
    for d2 in linearize_down(out, &earlier).expect("present") {
        let matched: Vec<Reference> = out.deltas[&d2]
            .ops()
            .filter(|a| a.op == Op::Removes && dom.contains(&a.target))
            .map(|a| a.target.clone())
            .collect();
        for r in matched {
            merge_operations(out, namer, d1, &cond1, &d2, &r);
        }
    }
    merge_to_base(out, namer, introductions, d1, &cond1, ado1)
}

fn merge_operations(
    out: &mut ProductLine,
    namer: &mut FreshNamer,
    d1: &str,
    cond1: &Formula,
    d2: &str,
    r: &Reference,
) {
    let part = out.order.partition_of(d2).expect("ordered");
    let m2 = out.delta_mut(d2).expect("present");
    let ado2 = m2.remove(r).expect("matched");
    let activation = Formula::and(m2.activation.clone(), Formula::not(cond1.clone()));
    let emptied = m2.is_empty();
    let fresh = DeltaModule::with_ops(namer.fresh(&format!("{d2}_{d1}")), activation, [ado2])
        .expect("single operation");
    out.add_to_partition(fresh, part);
    if emptied {
        out.remove_delta(d2);
    }
}

fn merge_to_base(
    out: &mut ProductLine,
    namer: &mut FreshNamer,
    introductions: &BTreeMap<Reference, usize>,
    d1: &str,
    cond1: &Formula,
    ado1: &Ado,
) -> Result<(), RefactorError> {
    let declared = out.base.declared_refs();
    let mut readds = Vec::new();
    let mut removed = BTreeSet::new();
    for (el, data) in ado1.decompose() {
        if declared.contains(&el) {
            if let (Reference::Attr(c, _), Payload::Attribute(attr)) = (&el, data) {
                readds.push(Ado::readds_attr(c, attr));
            }
            continue;
        }
        match (&el, data) {
            (Reference::Class(_), Payload::Class(shell)) => out.base.classes.push(shell),
            (Reference::Attr(c, _), Payload::Attribute(attr)) => match out.base.class_mut(c) {
                Some(class) => class.attributes.push(attr),
                None => return Err(RefactorError::MissingClass(el.clone())),
            },
            _ => unreachable!("decomposition yields classes and attributes"),
        }
        removed.insert(el);
    }
    // a class removal already takes its attributes along
    let removed_classes: BTreeSet<String> =
        removed.iter().filter(|r| r.is_class()).map(|r| r.class_name().to_string()).collect();
    let removes = removed
        .into_iter()
        .filter(|r| r.is_class() || !removed_classes.contains(r.class_name()))
        .map(Ado::removes);

    let part = out.order.partition_of(d1).expect("ordered");
    let h = hint(&ado1.target);
    // A re-addition module can only receive operations when some element of the
    // addition is introduced more than once.
    if ado1.dom().iter().any(|r| !r.is_class() && introductions.get(r).copied().unwrap_or(0) > 1) {
        let name = namer.fresh(&format!("Dreadd{h}_{d1}"));
        let module = DeltaModule::with_ops(name, cond1.clone(), readds).expect("distinct references");
        out.add_to_partition(module, part);
    } else {
        debug_assert!(readds.is_empty());
    }
    let name = namer.fresh(&format!("Drem{h}_{d1}"));
    let module = DeltaModule::with_ops(name, Formula::not(cond1.clone()), removes).expect("distinct references");
    out.add_to_partition(module, part);
    Ok(())
}
