//! Randomized invariants shared by the property tests and the acceptance run.
//! Each check returns `Err` with the shrunk counterexample on violation.

use std::sync::Arc;

use glocalx::aggregator::{filter_alpha, nearest_rank_percentile};
use glocalx::coverage::{covered, rule_coverage, theory_coverage, CoverageSet};
use glocalx::harness::{read_dataset, write_dataset};
use glocalx::merge::{cut, join_premises};
use glocalx::model::{normalize, satisfies, RuleIdAllocator};
use glocalx::scoring::similarity;
use glocalx::{Dataset, ExplanationTheory, Feature, FeatureSchema, Interval, Premise, Rule, RuleId, Subspace, TheoryId};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

pub const MAX_ROWS: usize = 128;
pub const MAX_FEATURES: usize = 6;
/// Continuous values and endpoints are drawn from `0, 0.5, …, GRID/2` so
/// rows land on interval boundaries often.
const GRID: i32 = 20;

/// `None` is continuous; `Some(k)` is categorical with `k` categories.
type Kinds = Vec<Option<u32>>;

#[derive(Debug, Clone)]
pub struct Fixture {
    pub data: Dataset,
    pub premises: Vec<Premise>,
    pub outcomes: Vec<u8>,
}

impl Fixture {
    pub fn schema(&self) -> &FeatureSchema {
        self.data.schema()
    }

    fn rule(&self, i: usize) -> Rule {
        Rule::new(RuleId(i as u64), self.premises[i].clone(), self.outcomes[i])
    }

    fn rule_with(&self, i: usize, outcome: u8) -> Rule {
        Rule::new(RuleId(i as u64), self.premises[i].clone(), outcome)
    }

    fn rows_covered(&self, p: &Premise) -> Vec<usize> {
        (0..self.data.len()).filter(|&i| p.satisfied_by(self.data.row(i))).collect()
    }
}

fn schema_of(kinds: &Kinds) -> FeatureSchema {
    let features = kinds
        .iter()
        .enumerate()
        .map(|(f, k)| match k {
            None => Feature::continuous(format!("f{f}")),
            Some(k) => Feature::categorical(format!("f{f}"), (0..*k).map(|c| format!("c{c}"))),
        })
        .collect();
    FeatureSchema::new(features, ["neg", "pos"]).unwrap()
}

fn grid() -> impl Strategy<Value = f64> {
    (0..=GRID).prop_map(|k| f64::from(k) / 2.0)
}

fn value(kind: Option<u32>) -> BoxedStrategy<f64> {
    match kind {
        None => grid().boxed(),
        Some(k) => (0..k).prop_map(f64::from).boxed(),
    }
}

fn subspace(kind: Option<u32>) -> BoxedStrategy<Subspace> {
    match kind {
        None => (grid(), grid(), any::<bool>(), any::<bool>(), 0u8..6)
            .prop_filter_map("empty interval", |(a, b, lc, hc, inf)| {
                let lo = if inf == 0 { f64::NEG_INFINITY } else { a };
                let hi = if inf == 1 { f64::INFINITY } else { b };
                Interval::new(lo, hi, lc, hc).map(Subspace::Interval)
            })
            .boxed(),
        Some(k) => proptest::sample::subsequence((0..k).collect::<Vec<_>>(), 1..=k as usize)
            .prop_map(|codes| Subspace::categories(codes).unwrap())
            .boxed(),
    }
}

fn premise(kinds: &Kinds) -> impl Strategy<Value = Premise> {
    let parts: Vec<_> = kinds.iter().map(|&k| proptest::option::weighted(0.6, subspace(k))).collect();
    parts.prop_map(|subs| {
        subs.into_iter()
            .enumerate()
            .fold(Premise::new(), |p, (f, s)| match s {
                Some(s) => p.with(f, s),
                None => p,
            })
    })
}

fn kinds() -> impl Strategy<Value = Kinds> {
    proptest::collection::vec(prop_oneof![2 => Just(None), 1 => (2u32..=4).prop_map(Some)], 1..=MAX_FEATURES)
}

/// Random schema, up to [`MAX_ROWS`] labelled rows and `rules` premises with outcomes.
pub fn fixture(rules: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Fixture> {
    kinds().prop_flat_map(move |kinds| {
        let row: Vec<_> = kinds.iter().map(|&k| value(k)).collect();
        let rows = proptest::collection::vec((row, 0u8..=1), 0..=MAX_ROWS);
        let premises = proptest::collection::vec((premise(&kinds), 0u8..=1), rules.clone());
        (Just(kinds), rows, premises).prop_map(|(kinds, rows, premises)| {
            let schema = Arc::new(schema_of(&kinds));
            let (values, labels): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
            let (premises, outcomes) = premises.into_iter().unzip();
            Fixture { data: Dataset::new(schema, values, labels, None).unwrap(), premises, outcomes }
        })
    })
}

pub fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn check<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

pub fn join_covers_both(cases: u32) -> Result<(), String> {
    check(cases, fixture(2..=2), |fx| {
        let j = join_premises(&fx.premises[0], &fx.premises[1]);
        for i in 0..fx.data.len() {
            let row = fx.data.row(i);
            if fx.premises[0].satisfied_by(row) || fx.premises[1].satisfied_by(row) {
                prop_assert!(j.satisfied_by(row), "row {i} lost by join");
            }
        }
        Ok(())
    })
}

pub fn join_commutative_idempotent(cases: u32) -> Result<(), String> {
    check(cases, fixture(2..=2), |fx| {
        let (p, q) = (&fx.premises[0], &fx.premises[1]);
        prop_assert_eq!(join_premises(p, q), join_premises(q, p));
        prop_assert_eq!(&join_premises(p, p), p);
        Ok(())
    })
}

fn cut_pair(fx: &Fixture) -> (Rule, Rule, Vec<Rule>) {
    let dominant = fx.rule_with(0, 0);
    let lesser = fx.rule_with(1, 1);
    let out = cut(&dominant, &lesser, &mut RuleIdAllocator::starting_at(10)).unwrap();
    (dominant, lesser, out)
}

pub fn cut_within_lesser(cases: u32) -> Result<(), String> {
    check(cases, fixture(2..=2), |fx| {
        let (dominant, lesser, out) = cut_pair(&fx);
        prop_assert_eq!(&out[0], &dominant);
        let allowed = fx.rows_covered(&lesser.premise);
        for piece in &out[1..] {
            prop_assert_eq!(piece.outcome, lesser.outcome);
            for i in fx.rows_covered(&piece.premise) {
                prop_assert!(allowed.contains(&i), "piece covers row {i} outside the lesser rule");
            }
        }
        Ok(())
    })
}

pub fn cut_disjoint_from_dominant(cases: u32) -> Result<(), String> {
    check(cases, fixture(2..=2), |fx| {
        let (dominant, lesser, out) = cut_pair(&fx);
        let shares = lesser.premise.iter().any(|(f, _)| dominant.premise.get(f).is_some());
        if !shares {
            prop_assert_eq!(&out[1..], std::slice::from_ref(&lesser));
            return Ok(());
        }
        for i in 0..fx.data.len() {
            let row = fx.data.row(i);
            let hits = out[1..].iter().filter(|r| r.covers(row)).count();
            prop_assert!(hits <= 1, "row {i} in {hits} cut pieces");
            prop_assert!(!(hits > 0 && dominant.covers(row)), "row {i} in dominant and a piece");
        }
        Ok(())
    })
}

fn theory_of(fx: &Fixture, id: u64, rules: std::ops::Range<usize>) -> ExplanationTheory {
    ExplanationTheory::new(TheoryId(id), rules.map(|i| fx.rule(i)).collect()).unwrap()
}

pub fn similarity_matches_brute_force(cases: u32) -> Result<(), String> {
    check(cases, (fixture(2..=6), 1usize..=5), |(fx, split)| {
        let split = split.min(fx.premises.len() - 1);
        let a = theory_of(&fx, 0, 0..split);
        let b = theory_of(&fx, 1, split..fx.premises.len());
        let (mut inter, mut union) = (0usize, 0usize);
        for row in fx.data.rows() {
            let ina = a.rules().iter().any(|r| r.premise.satisfied_by(row));
            let inb = b.rules().iter().any(|r| r.premise.satisfied_by(row));
            inter += usize::from(ina && inb);
            union += usize::from(ina || inb);
        }
        let expected = if union == 0 { 0.0 } else { inter as f64 / union as f64 };
        prop_assert_eq!(similarity(&a, &b, &fx.data).unwrap(), expected);
        Ok(())
    })
}

pub fn filter_alpha_bounded(cases: u32) -> Result<(), String> {
    check(cases, (fixture(0..=16), 1usize..=12), |(fx, alpha)| {
        let theory = theory_of(&fx, 0, 0..fx.premises.len());
        let kept = filter_alpha(&theory, alpha, &fx.data);
        let per_class = alpha.div_ceil(2);
        prop_assert!(kept.len() <= 2 * per_class);
        for outcome in 0..2u8 {
            let available = theory.rules().iter().filter(|r| r.outcome == outcome).count();
            let got = kept.rules().iter().filter(|r| r.outcome == outcome).count();
            prop_assert_eq!(got, available.min(per_class));
        }
        for r in kept.rules() {
            prop_assert!(theory.rules().iter().any(|t| t.id == r.id && t.premise == r.premise));
        }
        Ok(())
    })
}

pub fn percentile_nearest_rank(cases: u32) -> Result<(), String> {
    let values = proptest::collection::vec((0u32..=20).prop_map(|k| f64::from(k) / 20.0), 1..=64);
    check(cases, (values, 0u32..=100), |(values, p)| {
        let n = values.len();
        // the smallest observed value with at least p% of the data at or below it
        let expected = values
            .iter()
            .copied()
            .filter(|&v| {
                let below = values.iter().filter(|&&x| x <= v).count();
                below * 100 >= p as usize * n
            })
            .min_by(f64::total_cmp);
        prop_assert_eq!(nearest_rank_percentile(&values, f64::from(p)), expected);
        Ok(())
    })
}

pub fn satisfies_monotone_under_removal(cases: u32) -> Result<(), String> {
    check(cases, (fixture(1..=1), 0usize..MAX_FEATURES), |(fx, drop)| {
        let p = &fx.premises[0];
        let relaxed = p.without(drop);
        for row in fx.data.rows() {
            if satisfies(fx.schema(), row, p).unwrap() {
                prop_assert!(satisfies(fx.schema(), row, &relaxed).unwrap());
            }
        }
        Ok(())
    })
}

pub fn normalize_idempotent(cases: u32) -> Result<(), String> {
    check(cases, fixture(1..=1), |fx| {
        let once = normalize(fx.schema(), &fx.premises[0]).unwrap();
        prop_assert_eq!(&normalize(fx.schema(), &once).unwrap(), &once);
        for row in fx.data.rows() {
            prop_assert_eq!(once.satisfied_by(row), fx.premises[0].satisfied_by(row));
        }
        Ok(())
    })
}

pub fn coverage_union_law(cases: u32) -> Result<(), String> {
    check(cases, fixture(1..=6), |fx| {
        let theory = theory_of(&fx, 0, 0..fx.premises.len());
        let folded = theory
            .rules()
            .iter()
            .map(|r| rule_coverage(r, &fx.data).unwrap())
            .fold(CoverageSet::empty(), |acc, c| acc.union(&c));
        prop_assert_eq!(theory_coverage(&theory, &fx.data).unwrap(), folded);
        Ok(())
    })
}

pub fn covered_matches_brute_force(cases: u32) -> Result<(), String> {
    check(cases, fixture(0..=6), |fx| {
        let theory = theory_of(&fx, 0, 0..fx.premises.len());
        for row in fx.data.rows() {
            let got: Vec<RuleId> = covered(row, &theory).iter().map(|r| r.id).collect();
            let expected: Vec<RuleId> = (0..fx.premises.len())
                .filter(|&i| fx.premises[i].satisfied_by(row))
                .map(|i| RuleId(i as u64))
                .collect();
            prop_assert_eq!(got, expected);
        }
        Ok(())
    })
}

pub fn csv_round_trip(cases: u32) -> Result<(), String> {
    check(cases, fixture(0..=0), |fx| {
        let mut buf = Vec::new();
        write_dataset(&mut buf, &fx.data).unwrap();
        let back = read_dataset(buf.as_slice(), fx.data.schema_arc().clone()).unwrap();
        prop_assert_eq!(back, fx.data);
        Ok(())
    })
}

/// Every invariant, by name.
pub type Check = fn(u32) -> Result<(), String>;

pub fn all() -> Vec<(&'static str, Check)> {
    vec![
        ("join coverage superset", join_covers_both),
        ("join commutative and idempotent", join_commutative_idempotent),
        ("cut coverage subset", cut_within_lesser),
        ("cut disjoint from dominant", cut_disjoint_from_dominant),
        ("similarity brute force", similarity_matches_brute_force),
        ("filter_alpha size bound", filter_alpha_bounded),
        ("nearest-rank percentile", percentile_nearest_rank),
        ("satisfies monotone", satisfies_monotone_under_removal),
        ("normalize idempotent", normalize_idempotent),
        ("coverage union law", coverage_union_law),
        ("covered brute force", covered_matches_brute_force),
        ("csv round trip", csv_round_trip),
    ]
}
