//! Refactoring of product lines into increasing or decreasing monotonic form.

mod decreasing;
mod increasing;
mod naming;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::generation::{check_unambiguity, AmbiguityReport};
use crate::model::{ModelError, Op, ProductLine, Reference};

pub use decreasing::refactor_decreasing;
pub use increasing::refactor_increasing;
pub use naming::{hint, FreshNamer};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RefactorError {
    #[error("invalid product line: {0}")]
    Invalid(#[from] ModelError),
    #[error("ambiguous product line ({} conflicts)", .0.conflicts.len())]
    Ambiguous(AmbiguityReport),
    #[error("attribute `{0}` is added to a class the base does not declare")]
    MissingClass(Reference),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inc" | "increasing" => Ok(Direction::Increasing),
            "dec" | "decreasing" => Ok(Direction::Decreasing),
            _ => Err(format!("unknown direction `{s}` (expected inc or dec)")),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Increasing => "inc",
            Direction::Decreasing => "dec",
        })
    }
}

pub fn refactor(pl: &ProductLine, direction: Direction) -> Result<ProductLine, RefactorError> {
    match direction {
        Direction::Increasing => refactor_increasing(pl),
        Direction::Decreasing => refactor_decreasing(pl),
    }
}

fn check_input(pl: &ProductLine) -> Result<(), RefactorError> {
    pl.validate()?;
    check_unambiguity(pl).map_err(RefactorError::Ambiguous)
}

/// Operation count with each class addition or re-addition counted once per
/// declared element.
pub fn element_level_count(pl: &ProductLine) -> usize {
    pl.all_ops()
        .map(|(_, a)| match a.op {
            Op::Adds | Op::Readds => a.dom().len().max(1),
            _ => 1,
        })
        .sum()
}
