use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::schema::{FeatureKind, FeatureSchema, Label};
use super::subspace::{Interval, Subspace};
use crate::error::{Error, Result};

/// Conjunction of per-feature constraints, i.e. a quasi-polyhedron.
///
/// Features absent from the map are unconstrained.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Premise {
    constraints: BTreeMap<usize, Subspace>,
}

impl Premise {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a premise from possibly repeated constraints. Repeats on the same
    /// feature are intersected; an empty intersection is unsatisfiable.
    pub fn from_constraints(schema: &FeatureSchema, items: impl IntoIterator<Item = (usize, Subspace)>) -> Result<Self> {
        let mut constraints: BTreeMap<usize, Subspace> = BTreeMap::new();
        for (feature, sub) in items {
            check_kind(schema, feature, &sub)?;
            let merged = match constraints.get(&feature) {
                Some(prev) => prev.intersect(&sub).ok_or_else(|| unsat(schema, feature))?,
                None => sub,
            };
            constraints.insert(feature, merged);
        }
        Premise { constraints }.normalize(schema)
    }

    pub(crate) fn from_map(constraints: BTreeMap<usize, Subspace>) -> Self {
        Premise { constraints }
    }

    /// Adds or replaces the constraint on `feature`, without validation.
    pub fn with(mut self, feature: usize, sub: Subspace) -> Self {
        self.constraints.insert(feature, sub);
        self
    }

    pub fn get(&self, feature: usize) -> Option<&Subspace> {
        self.constraints.get(&feature)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Subspace)> {
        self.constraints.iter().map(|(&k, v)| (k, v))
    }

    /// Number of constrained features.
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn without(&self, feature: usize) -> Premise {
        let mut p = self.clone();
        p.constraints.remove(&feature);
        p
    }

    /// True iff every constrained feature's value lies in its subspace.
    pub fn satisfied_by(&self, row: &[f64]) -> bool {
        self.constraints.iter().all(|(&f, sub)| row.get(f).is_some_and(|&v| sub.contains(v)))
    }

    /// Validates against the schema and clamps intervals to declared domains.
    pub fn normalize(&self, schema: &FeatureSchema) -> Result<Premise> {
        let mut out = BTreeMap::new();
        for (&feature, sub) in &self.constraints {
            check_kind(schema, feature, sub)?;
            let sub = match (&schema.feature(feature).kind, sub) {
                (FeatureKind::Continuous { domain: Some((lo, hi)) }, Subspace::Interval(iv)) => {
                    let domain = Interval::new(*lo, *hi, true, true).expect("validated domain");
                    Subspace::Interval(iv.intersect(&domain).ok_or_else(|| unsat(schema, feature))?)
                }
                (FeatureKind::Categorical { categories }, Subspace::Categories(set)) => {
                    if set.iter().any(|&c| c as usize >= categories.len()) {
                        return Err(Error::invalid(format!(
                            "category code out of range for feature `{}`",
                            schema.feature(feature).name
                        )));
                    }
                    sub.clone()
                }
                _ => sub.clone(),
            };
            out.insert(feature, sub);
        }
        Ok(Premise { constraints: out })
    }

    pub fn display<'a>(&'a self, schema: &'a FeatureSchema) -> impl fmt::Display + 'a {
        PremiseDisplay { premise: self, schema }
    }
}

fn unsat(schema: &FeatureSchema, feature: usize) -> Error {
    Error::UnsatisfiablePremise { feature: schema.feature(feature).name.clone() }
}

fn check_kind(schema: &FeatureSchema, feature: usize, sub: &Subspace) -> Result<()> {
    let Some(f) = schema.features().get(feature) else {
        return Err(Error::invalid(format!("feature index {feature} outside schema")));
    };
    if f.is_categorical() != sub.is_categorical() {
        return Err(Error::invalid(format!("constraint kind does not match feature `{}`", f.name)));
    }
    Ok(())
}

struct PremiseDisplay<'a> {
    premise: &'a Premise,
    schema: &'a FeatureSchema,
}

impl fmt::Display for PremiseDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, (feature, sub)) in self.premise.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            let feat = self.schema.feature(feature);
            match sub {
                Subspace::Interval(iv) => write!(f, "{} {}", feat.name, iv)?,
                Subspace::Categories(set) => {
                    let names: Vec<&str> = set.iter().map(|&c| feat.categories()[c as usize].as_str()).collect();
                    write!(f, "{} in {{{}}}", feat.name, names.join(", "))?
                }
            }
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId(pub u64);

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Hands out fresh rule ids.
#[derive(Debug, Clone)]
pub struct RuleIdAllocator {
    next: u64,
}

impl RuleIdAllocator {
    pub fn starting_at(next: u64) -> Self {
        RuleIdAllocator { next }
    }

    /// Allocator whose ids do not collide with any rule in `theories`.
    pub fn after<'a>(theories: impl IntoIterator<Item = &'a ExplanationTheory>) -> Self {
        let max = theories.into_iter().flat_map(|t| t.rules()).map(|r| r.id.0 + 1).max().unwrap_or(0);
        Self::starting_at(max)
    }

    pub fn next_id(&mut self) -> RuleId {
        let id = RuleId(self.next);
        self.next += 1;
        id
    }

    pub fn peek(&self) -> u64 {
        self.next
    }
}

/// `premise → outcome`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub id: RuleId,
    pub premise: Premise,
    pub outcome: Label,
    /// Fidelity on a reference dataset, when one has been computed.
    pub fidelity_cache: Option<f64>,
}

impl Rule {
    pub fn new(id: RuleId, premise: Premise, outcome: Label) -> Self {
        Rule { id, premise, outcome, fidelity_cache: None }
    }

    pub fn covers(&self, row: &[f64]) -> bool {
        self.premise.satisfied_by(row)
    }

    /// Number of premises.
    pub fn len(&self) -> usize {
        self.premise.len()
    }

    pub fn is_empty(&self) -> bool {
        self.premise.is_empty()
    }

    pub fn display<'a>(&'a self, schema: &'a FeatureSchema) -> impl fmt::Display + 'a {
        RuleDisplay { rule: self, schema }
    }
}

struct RuleDisplay<'a> {
    rule: &'a Rule,
    schema: &'a FeatureSchema,
}

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -> {}",
            self.rule.premise.display(self.schema),
            self.schema.label_name(self.rule.outcome)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TheoryId(pub u64);

impl fmt::Display for TheoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A set of rules with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationTheory {
    id: TheoryId,
    rules: Vec<Rule>,
}

impl ExplanationTheory {
    pub fn new(id: TheoryId, rules: Vec<Rule>) -> Result<Self> {
        let mut ids: Vec<RuleId> = rules.iter().map(|r| r.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("theory {id} holds duplicate rule ids")));
        }
        if let Some(r) = rules.iter().find(|r| r.outcome > 1) {
            return Err(Error::invalid(format!("rule {} has outcome {} outside the binary labels", r.id, r.outcome)));
        }
        Ok(ExplanationTheory { id, rules })
    }

    pub fn singleton(id: TheoryId, rule: Rule) -> Self {
        ExplanationTheory { id, rules: vec![rule] }
    }

    pub fn empty(id: TheoryId) -> Self {
        ExplanationTheory { id, rules: Vec::new() }
    }

    pub fn id(&self) -> TheoryId {
        self.id
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn into_rules(self) -> Vec<Rule> {
        self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Mean number of premises per rule; 0 for an empty theory.
    pub fn mean_rule_length(&self) -> f64 {
        if self.rules.is_empty() {
            0.0
        } else {
            self.rules.iter().map(Rule::len).sum::<usize>() as f64 / self.rules.len() as f64
        }
    }

    /// `E_i ∪ E_j`, keeping rule order.
    pub fn union(id: TheoryId, a: &ExplanationTheory, b: &ExplanationTheory) -> Result<Self> {
        let rules = a.rules.iter().chain(&b.rules).cloned().collect();
        Self::new(id, rules)
    }
}
