//! Delta-oriented product lines over a small Java-like core language: parsing,
//! variant generation, monotonicity analysis and monotonic refactoring, with a
//! brute-force oracle for checking that refactorings preserve every variant.

pub mod analysis;
pub mod formula;
pub mod generation;
pub mod model;
pub mod oracle;
pub mod random;
pub mod refactor;
pub mod syntax;

pub use analysis::{
    before, classify, linearize_down, linearize_up, project, remove_empty_deltas, Monotonicity,
    MonotonicityReport,
};
pub use formula::{Formula, Product};
pub use generation::{
    activated_deltas, apply_ado, check_unambiguity, enumerate_products, generate_variant, Variant,
};
pub use model::{leq, Ado, DeltaModule, Op, ProductLine, Program, Reference};
pub use oracle::{canonicalize, check_equivalence, EquivalenceVerdict};
pub use random::{generate_random_spl, RandomSplSpec};
pub use refactor::{refactor, refactor_decreasing, refactor_increasing, Direction};
pub use syntax::{parse_spl, print_program, print_spl};

/// Shipped example product lines.
pub mod fixtures {
    use crate::model::ProductLine;

    /// The expression product line, in `.spl` syntax.
    pub const EPL_SOURCE: &str = include_str!("../fixtures/epl.spl");

    pub fn epl() -> ProductLine {
        crate::syntax::parse_spl(EPL_SOURCE).expect("shipped fixture parses")
    }
}
