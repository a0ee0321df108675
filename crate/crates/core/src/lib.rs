//! Local-to-global explanation.
//!
//! Local decision rules (one per explained instance) are merged bottom-up into
//! a compact global rule theory that emulates a black-box classifier. Pairs of
//! theories are chosen by coverage similarity, merged by joining agreeing rules
//! and cutting conflicting ones, and kept only when the merge does not worsen a
//! BIC-style trade-off between fidelity and rule length.

pub mod aggregator;
pub mod classifier;
pub mod coverage;
pub mod error;
pub mod harness;
pub mod merge;
pub mod model;
pub mod scoring;
pub mod synthetic;

pub use aggregator::{run, Dendrogram, DendrogramNode, RunConfig, RunOutput};
pub use classifier::TheoryClassifier;
pub use error::{Error, Result};
pub use model::{Dataset, ExplanationTheory, Feature, FeatureKind, FeatureSchema, Interval, Label, Premise, Rule, RuleId, Subspace, TheoryId};
