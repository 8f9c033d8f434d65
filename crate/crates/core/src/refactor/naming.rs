use std::collections::BTreeSet;

use crate::model::{DeltaName, Reference};

/// Hands out delta names that collide neither with existing names nor with
/// earlier results. A taken name gets the smallest free numeric suffix from 2.
#[derive(Debug, Clone, Default)]
pub struct FreshNamer {
    used: BTreeSet<DeltaName>,
}

impl FreshNamer {
    pub fn new<'a>(existing: impl IntoIterator<Item = &'a DeltaName>) -> Self {
        FreshNamer { used: existing.into_iter().cloned().collect() }
    }

    pub fn fresh(&mut self, stem: &str) -> DeltaName {
        let mut name = stem.to_string();
        let mut k = 2;
        while self.used.contains(&name) {
            name = format!("{stem}{k}");
            k += 1;
        }
        self.used.insert(name.clone());
        name
    }
}

/// `C` for a class, `CAttr` for an attribute: the middle part of decreasing-refactoring names.
pub fn hint(reference: &Reference) -> String {
    match reference {
        Reference::Class(c) => c.clone(),
        Reference::Attr(c, a) => {
            let mut chars = a.chars();
            let cap: String = chars.next().map(|f| f.to_ascii_uppercase()).into_iter().chain(chars).collect();
            format!("{c}{cap}")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collisions_get_suffixes() {
        let existing = vec!["DNotD".to_string(), "DNotD2".to_string()];
        let mut namer = FreshNamer::new(&existing);
        assert_eq!(namer.fresh("DNotD"), "DNotD3");
        assert_eq!(namer.fresh("DNotD"), "DNotD4");
        assert_eq!(namer.fresh("X_Y"), "X_Y");
        assert_eq!(namer.fresh("X_Y"), "X_Y2");
    }

    #[test]
    fn hints() {
        assert_eq!(hint(&Reference::class("Neg")), "Neg");
        assert_eq!(hint(&Reference::attr("Neg", "toString")), "NegToString");
        assert_eq!(hint(&Reference::attr("Exp", "eval")), "ExpEval");
    }
}
