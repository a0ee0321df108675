#![allow(dead_code)]

pub mod props;

use std::sync::Arc;

use glocalx::synthetic::Oracle;
use glocalx::{Dataset, ExplanationTheory, Feature, FeatureSchema, Interval, Premise, Rule, RuleId, Subspace, TheoryClassifier, TheoryId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const AGE: usize = 0;
pub const JOB: usize = 1;
pub const AMOUNT: usize = 2;
pub const UNEMPLOYED: u32 = 0;
pub const CLERK: u32 = 1;
pub const MANAGER: u32 = 2;
pub const DENY: u8 = 0;
pub const ACCEPT: u8 = 1;

pub fn loan_schema() -> Arc<FeatureSchema> {
    Arc::new(
        FeatureSchema::new(
            vec![
                Feature::continuous("age"),
                Feature::categorical("job", ["unemployed", "office clerk", "manager"]),
                Feature::continuous("amount"),
            ],
            ["deny", "accept"],
        )
        .unwrap(),
    )
}

pub fn iv(i: Interval) -> Subspace {
    Subspace::Interval(i)
}

pub fn job(c: u32) -> Subspace {
    Subspace::categories([c]).unwrap()
}

pub fn rule(id: u64, parts: Vec<(usize, Subspace)>, outcome: u8) -> Rule {
    let premise = parts.into_iter().fold(Premise::new(), |p, (f, s)| p.with(f, s));
    Rule::new(RuleId(id), premise, outcome)
}

/// Planted-theory pipeline on the unit square scaled to [0, 10)².
pub struct EndToEnd {
    pub schema: Arc<FeatureSchema>,
    pub planted: TheoryClassifier,
    pub explain: Dataset,
    pub test: Dataset,
    /// One box per explanation row, labelled by the (noisy) oracle.
    pub local_rules: Vec<Rule>,
}

pub const E2E_ROWS: usize = 600;
pub const E2E_EXPLAIN: usize = 400;
pub const E2E_NOISE: f64 = 0.05;
pub const E2E_RANGE: f64 = 10.0;
/// Box side as a share of the feature range.
pub const E2E_BOX: f64 = 0.1;
pub const E2E_DATA_SEED: u64 = 7;

/// Four quadrant rules split at 5 on both axes; only the upper-right one is positive.
pub fn planted_theory() -> TheoryClassifier {
    let mid = E2E_RANGE / 2.0;
    let quadrant = |id: u64, x_hi: bool, y_hi: bool| {
        let side = |hi: bool| iv(if hi { Interval::at_least(mid) } else { Interval::less_than(mid) });
        rule(id, vec![(0, side(x_hi)), (1, side(y_hi))], u8::from(x_hi && y_hi))
    };
    let rules = vec![quadrant(0, false, false), quadrant(1, false, true), quadrant(2, true, false), quadrant(3, true, true)];
    let theory = ExplanationTheory::new(TheoryId(0), rules).unwrap();
    TheoryClassifier::from_parts(theory, vec![1.0; 4], 0).unwrap()
}

pub fn end_to_end(data_seed: u64) -> EndToEnd {
    let schema = Arc::new(
        FeatureSchema::new(vec![Feature::continuous("x"), Feature::continuous("y")], ["neg", "pos"]).unwrap(),
    );
    let mut planted = planted_theory();
    let mut rng = ChaCha8Rng::seed_from_u64(data_seed);
    let mut rows = Vec::with_capacity(E2E_ROWS);
    let mut flips = Vec::with_capacity(E2E_ROWS);
    for _ in 0..E2E_ROWS {
        let x: f64 = rng.random_range(0.0..E2E_RANGE);
        let y: f64 = rng.random_range(0.0..E2E_RANGE);
        rows.push(vec![x, y]);
        flips.push(rng.random_bool(E2E_NOISE));
    }
    let labels: Vec<u8> = planted
        .label(&schema, &rows)
        .unwrap()
        .into_iter()
        .zip(&flips)
        .map(|(l, &flip)| l ^ u8::from(flip))
        .collect();
    let explain =
        Dataset::new(schema.clone(), rows[..E2E_EXPLAIN].to_vec(), labels[..E2E_EXPLAIN].to_vec(), None).unwrap();
    let test = Dataset::new(schema.clone(), rows[E2E_EXPLAIN..].to_vec(), labels[E2E_EXPLAIN..].to_vec(), None).unwrap();
    let half = E2E_BOX * E2E_RANGE / 2.0;
    let local_rules = (0..explain.len())
        .map(|i| {
            let r = explain.row(i);
            let side = |v: f64| iv(Interval::half_open(v - half, v + half).unwrap());
            rule(i as u64, vec![(0, side(r[0])), (1, side(r[1]))], explain.oracle_labels()[i])
        })
        .collect();
    EndToEnd { schema, planted, explain, test, local_rules }
}
