//! Instances, feature schemas, subspaces, premises, rules and theories.

mod dataset;
mod rule;
mod schema;
mod subspace;

pub use dataset::Dataset;
pub use rule::{ExplanationTheory, Premise, Rule, RuleId, RuleIdAllocator, TheoryId};
pub use schema::{Feature, FeatureKind, FeatureSchema, Label};
pub use subspace::{Interval, Subspace};

use crate::error::Result;

/// Checks `row` against the schema, then tests premise satisfaction.
pub fn satisfies(schema: &FeatureSchema, row: &[f64], premise: &Premise) -> Result<bool> {
    schema.check_row(row)?;
    Ok(premise.satisfied_by(row))
}

/// Canonical form of `premise`; see [`Premise::normalize`].
pub fn normalize(schema: &FeatureSchema, premise: &Premise) -> Result<Premise> {
    premise.normalize(schema)
}
