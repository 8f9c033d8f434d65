//! Propositional formulas over feature names.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::model::FeatureName;

/// A product: the set of selected features.
pub type Product = BTreeSet<FeatureName>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Formula {
    True,
    False,
    Var(FeatureName),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn var(name: impl Into<FeatureName>) -> Self {
        Formula::Var(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    /// Evaluates the formula under the assignment "a feature is true iff it is in `product`".
    pub fn eval(&self, product: &Product) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Var(v) => product.contains(v),
            Formula::Not(f) => !f.eval(product),
            Formula::And(a, b) => a.eval(product) && b.eval(product),
            Formula::Or(a, b) => a.eval(product) || b.eval(product),
        }
    }

    pub fn atoms(&self) -> BTreeSet<FeatureName> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<FeatureName>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Var(v) => {
                out.insert(v.clone());
            }
            Formula::Not(f) => f.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Number of nodes in the formula tree.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Var(_) => 1,
            Formula::Not(f) => 1 + f.size(),
            Formula::And(a, b) | Formula::Or(a, b) => 1 + a.size() + b.size(),
        }
    }
}

/// Fully parenthesized rendering; this is also the concrete syntax read back by the parser.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Var(v) => write!(f, "{v}"),
            Formula::Not(inner) => write!(f, "!{inner}"),
            Formula::And(a, b) => write!(f, "({a} && {b})"),
            Formula::Or(a, b) => write!(f, "({a} || {b})"),
        }
    }
}

/// Every subset of `features`, in lexicographic order of the sorted member lists.
///
/// Exhaustive; only meant for feature sets of desk-scale size.
pub fn all_assignments(features: &[FeatureName]) -> Vec<Product> {
    let mut sorted: Vec<&FeatureName> = features.iter().collect();
    sorted.sort();
    sorted.dedup();
    assert!(sorted.len() < 26, "exhaustive enumeration over {} features", sorted.len());
    let mut out: Vec<Product> = (0u32..(1u32 << sorted.len()))
        .map(|mask| {
            sorted
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, f)| (*f).clone())
                .collect()
        })
        .collect();
    out.sort();
    out
}

/// Products over `features` satisfying `formula`.
pub fn models(features: &[FeatureName], formula: &Formula) -> Vec<Product> {
    all_assignments(features)
        .into_iter()
        .filter(|p| formula.eval(p))
        .collect()
}

pub fn is_satisfiable(features: &[FeatureName], formula: &Formula) -> bool {
    all_assignments(features).iter().any(|p| formula.eval(p))
}

/// Truth-table equivalence over the given feature set.
pub fn equivalent(features: &[FeatureName], a: &Formula, b: &Formula) -> bool {
    all_assignments(features)
        .iter()
        .all(|p| a.eval(p) == b.eval(p))
}
