//! JSON rule files: an array of
//! `{"id": str, "label": int, "premises": {feature: interval | {"cats": [...]}}}`
//! where an interval is `{"lo", "hi", "lo_closed", "hi_closed"}` and a null
//! endpoint is unbounded.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::{ExplanationTheory, FeatureSchema, Interval, Premise, Rule, RuleId, Subspace};

#[derive(Debug, Serialize, Deserialize)]
struct RuleRecord {
    id: String,
    label: i64,
    premises: Map<String, Value>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum SubspaceRecord {
    Cats { cats: Vec<String> },
    Interval { lo: Option<f64>, hi: Option<f64>, lo_closed: bool, hi_closed: bool },
}

fn to_record(rule: &Rule, schema: &FeatureSchema) -> RuleRecord {
    let mut premises = Map::new();
    for (f, sub) in rule.premise.iter() {
        let feat = schema.feature(f);
        let rec = match sub {
            Subspace::Interval(iv) => SubspaceRecord::Interval {
                lo: iv.lo().is_finite().then_some(iv.lo()),
                hi: iv.hi().is_finite().then_some(iv.hi()),
                lo_closed: iv.lo_closed(),
                hi_closed: iv.hi_closed(),
            },
            Subspace::Categories(set) => SubspaceRecord::Cats {
                cats: set.iter().map(|&c| feat.categories()[c as usize].clone()).collect(),
            },
        };
        premises.insert(feat.name.clone(), serde_json::to_value(rec).expect("record serializes"));
    }
    RuleRecord { id: rule.id.to_string(), label: i64::from(rule.outcome), premises }
}

fn from_record(rec: RuleRecord, id: RuleId, schema: &FeatureSchema) -> Result<Rule> {
    let outcome = match rec.label {
        0 | 1 => rec.label as u8,
        other => return Err(Error::invalid(format!("rule `{}`: label {other} is not 0 or 1", rec.id))),
    };
    let mut items = Vec::with_capacity(rec.premises.len());
    for (name, value) in rec.premises {
        let f = schema
            .feature_index(&name)
            .ok_or_else(|| Error::invalid(format!("rule `{}`: unknown feature `{name}`", rec.id)))?;
        let feat = schema.feature(f);
        let sub = match serde_json::from_value::<SubspaceRecord>(value)? {
            SubspaceRecord::Cats { cats } => {
                let codes = cats
                    .iter()
                    .map(|c| {
                        feat.category_index(c)
                            .ok_or_else(|| Error::invalid(format!("rule `{}`: unknown category `{c}` of `{name}`", rec.id)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Subspace::categories(codes).ok_or_else(|| Error::UnsatisfiablePremise { feature: name.clone() })?
            }
            SubspaceRecord::Interval { lo, hi, lo_closed, hi_closed } => {
                let iv = Interval::new(
                    lo.unwrap_or(f64::NEG_INFINITY),
                    hi.unwrap_or(f64::INFINITY),
                    lo_closed,
                    hi_closed,
                )
                .ok_or_else(|| Error::UnsatisfiablePremise { feature: name.clone() })?;
                Subspace::Interval(iv)
            }
        };
        items.push((f, sub));
    }
    Ok(Rule::new(id, Premise::from_constraints(schema, items)?, outcome))
}

/// Parses a rule file. Ids that are all distinct non-negative integers are
/// kept; otherwise rules are numbered by position.
pub fn rules_from_json(text: &str, schema: &FeatureSchema) -> Result<Vec<Rule>> {
    let records: Vec<RuleRecord> = serde_json::from_str(text)?;
    let numeric: Option<Vec<u64>> = records.iter().map(|r| r.id.parse().ok()).collect();
    let ids = match numeric {
        Some(ids) if {
            let mut sorted = ids.clone();
            sorted.sort_unstable();
            sorted.windows(2).all(|w| w[0] != w[1])
        } =>
        {
            ids
        }
        _ => (0..records.len() as u64).collect(),
    };
    records
        .into_iter()
        .zip(ids)
        .map(|(rec, id)| from_record(rec, RuleId(id), schema))
        .collect()
}

pub fn rules_to_json(rules: &[Rule], schema: &FeatureSchema) -> String {
    let records: Vec<RuleRecord> = rules.iter().map(|r| to_record(r, schema)).collect();
    let mut out = serde_json::to_string_pretty(&records).expect("rules serialize");
    out.push('\n');
    out
}

pub fn load_rules(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Vec<Rule>> {
    rules_from_json(&std::fs::read_to_string(path)?, schema)
}

pub fn write_rules(path: impl AsRef<Path>, rules: &[Rule], schema: &FeatureSchema) -> Result<()> {
    std::fs::write(path, rules_to_json(rules, schema))?;
    Ok(())
}

pub fn load_theory(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<ExplanationTheory> {
    ExplanationTheory::new(crate::model::TheoryId(0), load_rules(path, schema)?)
}
