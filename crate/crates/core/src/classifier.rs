//! An explanation theory used as a transparent classifier.
//!
//! The covering rule with the highest reference-set fidelity decides; rows no
//! rule covers get the majority oracle label of the reference set.

use std::collections::BTreeMap;

use crate::coverage::{check_premise, rule_fidelity};
use crate::error::{Error, Result};
use crate::model::{Dataset, ExplanationTheory, Label, Rule, RuleId};

#[derive(Debug, Clone)]
pub struct TheoryClassifier {
    theory: ExplanationTheory,
    scores: Vec<f64>,
    default_label: Label,
}

impl TheoryClassifier {
    pub fn build(theory: ExplanationTheory, reference: &Dataset) -> Result<Self> {
        if reference.is_empty() {
            return Err(Error::invalid("classifier reference dataset is empty"));
        }
        for r in theory.rules() {
            check_premise(reference.schema(), &r.premise)?;
        }
        let scores = theory.rules().iter().map(|r| rule_fidelity(r, reference)).collect();
        Ok(TheoryClassifier { theory, scores, default_label: reference.majority_label() })
    }

    /// Assembles a classifier from precomputed scores, one per rule.
    pub fn from_parts(theory: ExplanationTheory, scores: Vec<f64>, default_label: Label) -> Result<Self> {
        if scores.len() != theory.len() {
            return Err(Error::invalid("one score per rule is required"));
        }
        if default_label > 1 {
            return Err(Error::invalid("default label outside the binary labels"));
        }
        Ok(TheoryClassifier { theory, scores, default_label })
    }

    pub fn theory(&self) -> &ExplanationTheory {
        &self.theory
    }

    pub fn default_label(&self) -> Label {
        self.default_label
    }

    pub fn score(&self, id: RuleId) -> Option<f64> {
        self.theory.rules().iter().position(|r| r.id == id).map(|i| self.scores[i])
    }

    pub fn scores(&self) -> BTreeMap<RuleId, f64> {
        self.theory.rules().iter().map(|r| r.id).zip(self.scores.iter().copied()).collect()
    }

    /// The rule that decides `row`, if any rule covers it.
    pub fn deciding_rule(&self, row: &[f64]) -> Option<&Rule> {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in self.theory.rules().iter().enumerate() {
            if !r.covers(row) {
                continue;
            }
            let s = self.scores[i];
            let better = match best {
                None => true,
                Some((b, bs)) => s > bs || (s == bs && r.id < self.theory.rules()[b].id),
            };
            if better {
                best = Some((i, s));
            }
        }
        best.map(|(i, _)| &self.theory.rules()[i])
    }

    pub fn predict(&self, row: &[f64]) -> Label {
        self.deciding_rule(row).map_or(self.default_label, |r| r.outcome)
    }

    pub fn predict_all(&self, data: &Dataset) -> Vec<Label> {
        data.rows().map(|row| self.predict(row)).collect()
    }

    /// Agreement with the oracle labels of `data`.
    pub fn fidelity(&self, data: &Dataset) -> f64 {
        agreement(&self.predict_all(data), data.oracle_labels())
    }

    /// Agreement with the ground-truth labels of `data`.
    pub fn accuracy(&self, data: &Dataset) -> Result<f64> {
        let truth = data
            .truth_labels()
            .ok_or_else(|| Error::invalid("accuracy requires ground-truth labels"))?;
        Ok(agreement(&self.predict_all(data), truth))
    }
}

fn agreement(pred: &[Label], labels: &[Label]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = pred.iter().zip(labels).filter(|(p, l)| p == l).count();
    hits as f64 / labels.len() as f64
}

/// Fidelity of `theory` used as a classifier scored and evaluated on `data`.
pub fn theory_fidelity(theory: &ExplanationTheory, data: &Dataset) -> Result<f64> {
    Ok(TheoryClassifier::build(theory.clone(), data)?.fidelity(data))
}
