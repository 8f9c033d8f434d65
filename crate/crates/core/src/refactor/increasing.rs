use std::collections::BTreeSet;

use super::{check_input, FreshNamer, RefactorError};
use crate::analysis::{before, linearize_down, linearize_up};
use crate::formula::Formula;
use crate::generation::apply_ado_mut;
use crate::model::*;

/// Eliminates every `removes` operation.
///
/// Each removal of an element `el` in `d1` is undone by re-homing every earlier
/// operation on `el` (or inside it) into a module that fires only when `d1` does
/// not, and by moving `el` out of the base into a module `DNot<d1>` activated by
/// the negation of `d1`'s condition.
pub fn refactor_increasing(pl: &ProductLine) -> Result<ProductLine, RefactorError> {
    check_input(pl)?;
    let mut out = pl.clone();
    let mut namer = FreshNamer::new(out.deltas.keys());
    let snapshot = linearize_up(&out, out.deltas.keys()).expect("declared names");
    for d1 in snapshot {
        let Some(module) = out.delta(&d1) else { continue };
        let removes: Vec<Ado> = module.ops().filter(|a| a.op == Op::Removes).cloned().collect();
        for ado1 in removes {
            out.delta_mut(&d1).expect("present").remove(&ado1.target);
            manage_operation(&mut out, &mut namer, &d1, &ado1);
        }
    }
    Ok(out)
}

fn manage_operation(out: &mut ProductLine, namer: &mut FreshNamer, d1: &str, ado1: &Ado) {
    let cond1 = out.activation(d1).expect("present").clone();
    // partition indices of the modules whose operations were re-homed
    let mut s: BTreeSet<usize> = BTreeSet::new();
    let earlier = before(out, d1).expect("present");
    for d2 in linearize_down(out, &earlier).expect("present") {
        let matched: Vec<Reference> =
            out.deltas[&d2].refs().filter(|r| ado1.target.leq(r)).cloned().collect();
        for r in matched {
            s.insert(merge_operations(out, namer, d1, &cond1, &d2, &r));
        }
    }
    merge_to_base(out, namer, d1, &cond1, ado1, &s);
}

/// Moves the operation on `r` out of `d2` into a fresh module in `d2`'s partition.
/// Returns that partition.
fn merge_operations(
    out: &mut ProductLine,
    namer: &mut FreshNamer,
    d1: &str,
    cond1: &Formula,
    d2: &str,
    r: &Reference,
) -> usize {
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
    part
}

fn merge_to_base(
    out: &mut ProductLine,
    namer: &mut FreshNamer,
    d1: &str,
    cond1: &Formula,
    ado1: &Ado,
    s: &BTreeSet<usize>,
) {
    let Some(data) = out.base.lookup(&ado1.target) else { return };
    apply_ado_mut(ado1, &mut out.base).expect("element is declared by the base");
    let adds = Ado { op: Op::Adds, target: ado1.target.clone(), payload: data };
    let fresh = DeltaModule::with_ops(namer.fresh(&format!("DNot{d1}")), Formula::not(cond1.clone()), [adds])
        .expect("single operation");
    let at = s.iter().next().copied().unwrap_or(0);
    out.add_in_new_partition(fresh, at);
}
