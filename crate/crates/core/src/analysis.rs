//! Monotonicity classification, projection, order linearization and cleanup.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::formula::{is_satisfiable, Formula};
use crate::model::*;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("unknown delta module `{0}`")]
    UnknownDelta(DeltaName),
    #[error("unknown feature `{0}`")]
    UnknownFeature(FeatureName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    StrictlyIncreasing,
    Increasing,
    PseudoIncreasing,
    StrictlyDecreasing,
    Decreasing,
    PseudoDecreasing,
    ReaddStrictlyDecreasing,
    ReaddDecreasing,
    ReaddPseudoDecreasing,
}

impl Monotonicity {
    pub const ALL: [Monotonicity; 9] = [
        Monotonicity::StrictlyIncreasing,
        Monotonicity::Increasing,
        Monotonicity::PseudoIncreasing,
        Monotonicity::StrictlyDecreasing,
        Monotonicity::Decreasing,
        Monotonicity::PseudoDecreasing,
        Monotonicity::ReaddStrictlyDecreasing,
        Monotonicity::ReaddDecreasing,
        Monotonicity::ReaddPseudoDecreasing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Monotonicity::StrictlyIncreasing => "strictly-increasing",
            Monotonicity::Increasing => "increasing",
            Monotonicity::PseudoIncreasing => "pseudo-increasing",
            Monotonicity::StrictlyDecreasing => "strictly-decreasing",
            Monotonicity::Decreasing => "decreasing",
            Monotonicity::PseudoDecreasing => "pseudo-decreasing",
            Monotonicity::ReaddStrictlyDecreasing => "readd-strictly-decreasing",
            Monotonicity::ReaddDecreasing => "readd-decreasing",
            Monotonicity::ReaddPseudoDecreasing => "readd-pseudo-decreasing",
        }
    }

    fn allows(self, kind: OpKind) -> bool {
        use OpKind::*;
        let allowed: &[OpKind] = match self {
            Monotonicity::StrictlyIncreasing => &[Adds],
            Monotonicity::Increasing => &[Adds, Wraps],
            Monotonicity::PseudoIncreasing => &[Adds, Wraps, Voids, Plain],
            Monotonicity::StrictlyDecreasing => &[Removes],
            Monotonicity::Decreasing => &[Removes, Voids],
            Monotonicity::PseudoDecreasing => &[Removes, Wraps, Voids, Plain],
            Monotonicity::ReaddStrictlyDecreasing => &[Removes, Readds],
            Monotonicity::ReaddDecreasing => &[Removes, Readds, Voids],
            Monotonicity::ReaddPseudoDecreasing => &[Removes, Readds, Wraps, Voids, Plain],
        };
        allowed.contains(&kind)
    }
}

impl fmt::Display for Monotonicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Operator refined by the shape of method modifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Adds,
    Removes,
    Readds,
    Wraps,
    Voids,
    Plain,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OpKind::Adds => "adds",
            OpKind::Removes => "removes",
            OpKind::Readds => "readds",
            OpKind::Wraps => "wraps",
            OpKind::Voids => "voids",
            OpKind::Plain => "modifies",
        })
    }
}

pub fn op_kind(ado: &Ado) -> OpKind {
    match ado.op {
        Op::Adds => OpKind::Adds,
        Op::Removes => OpKind::Removes,
        Op::Readds => OpKind::Readds,
        Op::Modifies => match classify_method_modifies(ado) {
            Ok(ModifiesKind::Wraps) => OpKind::Wraps,
            Ok(ModifiesKind::Voids) => OpKind::Voids,
            // modifications of `extends` count as plain modifications
            Ok(ModifiesKind::Plain) | Err(_) => OpKind::Plain,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub delta: DeltaName,
    pub kind: OpKind,
    pub reference: Reference,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassVerdict {
    pub class: Monotonicity,
    pub holds: bool,
    pub evidence: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MonotonicityReport {
    pub classes: Vec<ClassVerdict>,
}

impl MonotonicityReport {
    pub fn holds(&self, class: Monotonicity) -> bool {
        self.classes.iter().any(|c| c.class == class && c.holds)
    }

    pub fn verdict(&self, class: Monotonicity) -> &ClassVerdict {
        self.classes.iter().find(|c| c.class == class).expect("all classes are reported")
    }
}

pub fn classify(pl: &ProductLine) -> MonotonicityReport {
    let ops: Vec<(&DeltaName, &Ado, OpKind)> = pl.all_ops().map(|(d, a)| (d, a, op_kind(a))).collect();
    let classes = Monotonicity::ALL
        .iter()
        .map(|&class| {
            let evidence: Vec<Violation> = ops
                .iter()
                .filter(|(_, _, k)| !class.allows(*k))
                .map(|(d, a, k)| Violation { delta: (*d).clone(), kind: *k, reference: a.target.clone() })
                .collect();
            ClassVerdict { class, holds: evidence.is_empty(), evidence }
        })
        .collect();
    MonotonicityReport { classes }
}

/// Restricts `pl` to the products satisfying `keep`, dropping modules that can no
/// longer be activated.
pub fn project(pl: &ProductLine, keep: &Formula) -> Result<ProductLine, AnalysisError> {
    if let Some(f) = keep.atoms().into_iter().find(|a| !pl.features.contains(a)) {
        return Err(AnalysisError::UnknownFeature(f));
    }
    let mut out = pl.clone();
    if *keep != Formula::True {
        out.formula = Formula::and(pl.formula.clone(), keep.clone());
    }
    let dead: Vec<DeltaName> = out
        .deltas
        .values()
        .filter(|d| !is_satisfiable(&out.features, &Formula::and(out.formula.clone(), d.activation.clone())))
        .map(|d| d.name.clone())
        .collect();
    for d in dead {
        out.remove_delta(&d);
    }
    Ok(out)
}

fn partition_index(pl: &ProductLine, d: &str) -> Result<usize, AnalysisError> {
    pl.order.partition_of(d).ok_or_else(|| AnalysisError::UnknownDelta(d.to_string()))
}

/// Names of `set` sorted by (partition, name).
pub fn linearize_up<'a, I>(pl: &ProductLine, set: I) -> Result<Vec<DeltaName>, AnalysisError>
where
    I: IntoIterator<Item = &'a DeltaName>,
{
    let mut keyed = set
        .into_iter()
        .map(|d| Ok((partition_index(pl, d)?, d.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    keyed.sort();
    keyed.dedup();
    Ok(keyed.into_iter().map(|(_, d)| d).collect())
}

/// Names of `set` sorted by partition descending, then name ascending.
pub fn linearize_down<'a, I>(pl: &ProductLine, set: I) -> Result<Vec<DeltaName>, AnalysisError>
where
    I: IntoIterator<Item = &'a DeltaName>,
{
    let mut keyed = set
        .into_iter()
        .map(|d| Ok((std::cmp::Reverse(partition_index(pl, d)?), d.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    keyed.sort();
    keyed.dedup();
    Ok(keyed.into_iter().map(|(_, d)| d).collect())
}

/// Modules in partitions strictly before the partition of `d`.
pub fn before(pl: &ProductLine, d: &str) -> Result<BTreeSet<DeltaName>, AnalysisError> {
    let idx = partition_index(pl, d)?;
    Ok(pl.order.partitions[..idx].iter().flatten().cloned().collect())
}

pub fn remove_empty_deltas(pl: &ProductLine) -> ProductLine {
    let mut out = pl.clone();
    let empty: Vec<DeltaName> = out.deltas.values().filter(|d| d.is_empty()).map(|d| d.name.clone()).collect();
    for d in empty {
        out.remove_delta(&d);
    }
    out
}
