//! Which rows a rule or theory covers, and how faithfully.

use crate::error::{Error, Result};
use crate::model::{Dataset, ExplanationTheory, FeatureSchema, Premise, Rule, Subspace};

/// Sorted, duplicate-free row indices into a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoverageSet {
    indices: Vec<usize>,
}

impl CoverageSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_indices(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        CoverageSet { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn union(&self, other: &CoverageSet) -> CoverageSet {
        let (a, b) = (&self.indices, &other.indices);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let (x, y) = (a[i], b[j]);
            out.push(x.min(y));
            i += usize::from(x <= y);
            j += usize::from(y <= x);
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        CoverageSet { indices: out }
    }

    /// `|self ∩ other|` by a merge walk.
    pub fn intersection_len(&self, other: &CoverageSet) -> usize {
        let (a, b) = (&self.indices, &other.indices);
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

/// Errors unless every constraint of `premise` fits the dataset schema.
pub(crate) fn check_premise(schema: &FeatureSchema, premise: &Premise) -> Result<()> {
    for (feature, sub) in premise.iter() {
        let Some(f) = schema.features().get(feature) else {
            return Err(Error::invalid(format!("rule constrains feature {feature}, schema has {}", schema.len())));
        };
        if f.is_categorical() != matches!(sub, Subspace::Categories(_)) {
            return Err(Error::invalid(format!("constraint kind does not match feature `{}`", f.name)));
        }
    }
    Ok(())
}

fn covered_rows(rule: &Rule, data: &Dataset) -> Vec<usize> {
    data.rows().enumerate().filter(|(_, row)| rule.covers(row)).map(|(i, _)| i).collect()
}

pub fn rule_coverage(rule: &Rule, data: &Dataset) -> Result<CoverageSet> {
    check_premise(data.schema(), &rule.premise)?;
    Ok(CoverageSet { indices: covered_rows(rule, data) })
}

/// Rows covered by at least one rule of `theory`.
pub fn theory_coverage(theory: &ExplanationTheory, data: &Dataset) -> Result<CoverageSet> {
    for r in theory.rules() {
        check_premise(data.schema(), &r.premise)?;
    }
    let indices = data
        .rows()
        .enumerate()
        .filter(|(_, row)| theory.rules().iter().any(|r| r.covers(row)))
        .map(|(i, _)| i)
        .collect();
    Ok(CoverageSet { indices })
}

/// Rules of `theory` whose premise `row` satisfies.
pub fn covered<'a>(row: &[f64], theory: &'a ExplanationTheory) -> Vec<&'a Rule> {
    theory.rules().iter().filter(|r| r.covers(row)).collect()
}

/// Share of covered rows whose oracle label equals the rule outcome; 0 when
/// the rule covers nothing.
pub fn rule_fidelity(rule: &Rule, data: &Dataset) -> f64 {
    let labels = data.oracle_labels();
    let (mut hit, mut total) = (0usize, 0usize);
    for (i, row) in data.rows().enumerate() {
        if rule.covers(row) {
            total += 1;
            hit += usize::from(labels[i] == rule.outcome);
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}
