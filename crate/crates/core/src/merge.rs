//! Join (⊕) and cut (⊖) on rule premises, and the batch-driven theory merge.

use std::collections::BTreeMap;

use crate::coverage::rule_fidelity;
use crate::error::{Error, Result};
use crate::model::{Dataset, ExplanationTheory, Label, Premise, Rule, RuleIdAllocator, TheoryId};

/// Rules covering one instance, split by whether their outcomes agree.
#[derive(Debug, Clone, Default)]
pub struct ConflictPartition<'a> {
    pub non_conflicting: Vec<&'a Rule>,
    pub conflicting: Vec<&'a Rule>,
}

impl<'a> ConflictPartition<'a> {
    pub fn new(rules: Vec<&'a Rule>) -> Self {
        let agree = rules.windows(2).all(|w| w[0].outcome == w[1].outcome);
        if agree {
            ConflictPartition { non_conflicting: rules, conflicting: Vec::new() }
        } else {
            ConflictPartition { non_conflicting: Vec::new(), conflicting: rules }
        }
    }
}

/// `p ⊕ q`: shared features are generalized to the union (or the bridging
/// hull when disjoint); features constrained on one side only are dropped.
pub fn join_premises(p: &Premise, q: &Premise) -> Premise {
    let joined = p
        .iter()
        .filter_map(|(f, a)| q.get(f).map(|b| (f, a.join(b))))
        .collect::<BTreeMap<_, _>>();
    Premise::from_map(joined)
}

/// Left fold of ⊕ over `rules` in ascending id order. The result gets a fresh id.
pub fn join(rules: &[&Rule], ids: &mut RuleIdAllocator) -> Result<Rule> {
    let Some(first) = rules.first() else {
        return Err(Error::ContractViolation("join of an empty rule set".into()));
    };
    if rules.iter().any(|r| r.outcome != first.outcome) {
        return Err(Error::ContractViolation("join of rules with different outcomes".into()));
    }
    let mut ordered = rules.to_vec();
    ordered.sort_by_key(|r| r.id);
    let premise = ordered[1..]
        .iter()
        .fold(ordered[0].premise.clone(), |acc, r| join_premises(&acc, &r.premise));
    Ok(Rule::new(ids.next_id(), premise, first.outcome))
}

/// `lesser ⊖ dominant` on premises: every feature constrained by both is
/// replaced by `lesser_i ∖ dominant_i`. Interval differences with two pieces
/// fan out into one premise per combination. Returns no premise when some
/// difference is empty, and `lesser` unchanged when nothing is shared.
pub fn cut_premise(dominant: &Premise, lesser: &Premise) -> Vec<Premise> {
    let mut out = vec![lesser.clone()];
    for (f, sub) in lesser.iter() {
        let Some(dom) = dominant.get(f) else { continue };
        let pieces = sub.difference(dom);
        if pieces.is_empty() {
            return Vec::new();
        }
        out = out
            .into_iter()
            .flat_map(|p| pieces.iter().map(move |piece| p.clone().with(f, piece.clone())))
            .collect();
    }
    out
}

/// Keeps `dominant` as is and confines `lesser` to where `dominant` does not
/// reach. The first element of the result is always `dominant`.
pub fn cut(dominant: &Rule, lesser: &Rule, ids: &mut RuleIdAllocator) -> Result<Vec<Rule>> {
    if dominant.id == lesser.id {
        return Err(Error::ContractViolation(format!("cut of rule {} with itself", dominant.id)));
    }
    if dominant.outcome == lesser.outcome {
        return Err(Error::ContractViolation("cut of rules with the same outcome".into()));
    }
    let shares = lesser.premise.iter().any(|(f, _)| dominant.premise.get(f).is_some());
    let mut out = vec![dominant.clone()];
    if !shares {
        out.push(lesser.clone());
        return Ok(out);
    }
    out.extend(
        cut_premise(&dominant.premise, &lesser.premise)
            .into_iter()
            .map(|p| Rule::new(ids.next_id(), p, lesser.outcome)),
    );
    Ok(out)
}

struct Working {
    rule: Rule,
    fidelity: Option<f64>,
}

impl Working {
    fn new(rule: Rule) -> Self {
        Working { rule, fidelity: None }
    }

    fn fidelity(&mut self, batch: &Dataset) -> f64 {
        *self.fidelity.get_or_insert_with(|| rule_fidelity(&self.rule, batch))
    }
}

/// Merges `a` and `b` over `batch`.
///
/// Starting from `a ∪ b`, each batch row covered by at least two rules of the
/// working set is resolved: agreeing rules are joined into one; disagreeing
/// rules are joined per outcome and the lower-fidelity result is cut by the
/// higher-fidelity one (fidelity on `batch`, ties to the lower id).
pub fn merge(
    a: &ExplanationTheory,
    b: &ExplanationTheory,
    batch: &Dataset,
    id: TheoryId,
    ids: &mut RuleIdAllocator,
) -> Result<ExplanationTheory> {
    if batch.is_empty() {
        return Err(Error::invalid("merge batch is empty"));
    }
    let mut seen = std::collections::HashSet::new();
    let mut working: Vec<Working> = a
        .rules()
        .iter()
        .chain(b.rules())
        .map(|r| {
            let mut r = r.clone();
            if !seen.insert(r.id) {
                r.id = ids.next_id();
            }
            Working::new(r)
        })
        .collect();

    for row in batch.rows() {
        let hits: Vec<usize> = (0..working.len()).filter(|&i| working[i].rule.covers(row)).collect();
        if hits.len() < 2 {
            continue;
        }
        let mut taken: Vec<Working> = Vec::with_capacity(hits.len());
        for &i in hits.iter().rev() {
            taken.push(working.remove(i));
        }
        taken.reverse();

        let refs: Vec<&Rule> = taken.iter().map(|w| &w.rule).collect();
        let partition = ConflictPartition::new(refs);
        if !partition.non_conflicting.is_empty() {
            let joined = join(&partition.non_conflicting, ids)?;
            working.push(Working::new(joined));
            continue;
        }

        let mut groups: [Option<Working>; 2] = [None, None];
        for outcome in [0 as Label, 1] {
            let group: Vec<&Rule> = partition.conflicting.iter().copied().filter(|r| r.outcome == outcome).collect();
            groups[outcome as usize] = match group.len() {
                0 => None,
                1 => taken.iter().find(|w| w.rule.outcome == outcome).map(|w| Working {
                    rule: w.rule.clone(),
                    fidelity: w.fidelity,
                }),
                _ => Some(Working::new(join(&group, ids)?)),
            };
        }
        let [Some(mut g0), Some(mut g1)] = groups else {
            unreachable!("conflicting rules carry both outcomes");
        };
        let (f0, f1) = (g0.fidelity(batch), g1.fidelity(batch));
        let zero_dominates = f0 > f1 || (f0 == f1 && g0.rule.id < g1.rule.id);
        let (dominant, lesser) = if zero_dominates { (g0, g1) } else { (g1, g0) };
        let mut pieces = cut(&dominant.rule, &lesser.rule, ids)?.into_iter();
        pieces.next();
        working.push(dominant);
        for piece in pieces {
            if piece.id == lesser.rule.id {
                working.push(Working { rule: piece, fidelity: lesser.fidelity });
            } else {
                working.push(Working::new(piece));
            }
        }
    }

    ExplanationTheory::new(id, working.into_iter().map(|w| w.rule).collect())
}

/// Convenience wrapper: fresh ids continue after the largest id in `a` and `b`.
pub fn merge_fresh(a: &ExplanationTheory, b: &ExplanationTheory, batch: &Dataset) -> Result<ExplanationTheory> {
    let mut ids = RuleIdAllocator::after([a, b]);
    let id = TheoryId(a.id().0.max(b.id().0) + 1);
    merge(a, b, batch, id, &mut ids)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::coverage::rule_coverage;
    use crate::model::{Feature, FeatureSchema, Interval, RuleId, Subspace};

    const AGE: usize = 0;
    const JOB: usize = 1;
    const AMOUNT: usize = 2;
    const UNEMPLOYED: u32 = 0;
    const CLERK: u32 = 1;
    const MANAGER: u32 = 2;
    const DENY: u8 = 0;
    const ACCEPT: u8 = 1;

    fn schema() -> Arc<FeatureSchema> {
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

    fn iv(i: Interval) -> Subspace {
        Subspace::Interval(i)
    }

    fn job(c: u32) -> Subspace {
        Subspace::categories([c]).unwrap()
    }

    fn rule(id: u64, parts: &[(usize, Subspace)], outcome: u8) -> Rule {
        let p = parts.iter().fold(Premise::new(), |p, (f, s)| p.with(*f, s.clone()));
        Rule::new(RuleId(id), p, outcome)
    }

    #[test]
    fn join_drops_unshared_and_widens_shared() {
        let e1 = rule(1, &[(AGE, iv(Interval::at_least(50.0))), (JOB, job(CLERK))], DENY);
        let e2 = rule(2, &[(AGE, iv(Interval::at_least(40.0)))], DENY);
        let mut ids = RuleIdAllocator::starting_at(10);
        let j = join(&[&e1, &e2], &mut ids).unwrap();
        assert_eq!(j.premise, Premise::new().with(AGE, iv(Interval::at_least(40.0))));
        assert_eq!(j.outcome, DENY);
        assert_eq!(j.id, RuleId(10));
    }

    #[test]
    fn join_idempotent_and_bridging() {
        let mut ids = RuleIdAllocator::starting_at(10);
        let r = rule(1, &[(AGE, iv(Interval::at_least(50.0))), (JOB, job(CLERK))], DENY);
        assert_eq!(join(&[&r, &r], &mut ids).unwrap().premise, r.premise);
        let a = rule(1, &[(AGE, iv(Interval::half_open(10.0, 20.0).unwrap()))], DENY);
        let b = rule(2, &[(AGE, iv(Interval::half_open(30.0, 40.0).unwrap()))], DENY);
        assert_eq!(join(&[&a, &b], &mut ids).unwrap().premise.get(AGE), Some(&iv(Interval::half_open(10.0, 40.0).unwrap())));
    }

    #[test]
    fn join_rejects_mixed_outcomes() {
        let mut ids = RuleIdAllocator::starting_at(0);
        let a = rule(1, &[], DENY);
        let b = rule(2, &[], ACCEPT);
        assert!(matches!(join(&[&a, &b], &mut ids), Err(Error::ContractViolation(_))));
        assert!(matches!(join(&[], &mut ids), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn cut_loan_example() {
        let dominant = rule(
            1,
            &[(AGE, iv(Interval::at_least(25.0))), (JOB, job(UNEMPLOYED)), (AMOUNT, iv(Interval::at_least(10_000.0)))],
            DENY,
        );
        let lesser = rule(
            2,
            &[(AGE, iv(Interval::at_least(20.0))), (JOB, job(MANAGER)), (AMOUNT, iv(Interval::greater_than(8_000.0)))],
            ACCEPT,
        );
        let mut ids = RuleIdAllocator::starting_at(10);
        let out = cut(&dominant, &lesser, &mut ids).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0], dominant);
        let expected = Premise::new()
            .with(AGE, iv(Interval::half_open(20.0, 25.0).unwrap()))
            .with(JOB, job(MANAGER))
            .with(AMOUNT, iv(Interval::new(8_000.0, 10_000.0, false, false).unwrap()));
        assert_eq!(out[1].premise, expected);
        assert_eq!(out[1].outcome, ACCEPT);
    }

    #[test]
    fn cut_without_shared_features() {
        let d = rule(1, &[(AGE, iv(Interval::at_least(25.0)))], DENY);
        let l = rule(2, &[(AMOUNT, iv(Interval::at_least(5.0)))], ACCEPT);
        let out = cut(&d, &l, &mut RuleIdAllocator::starting_at(10)).unwrap();
        assert_eq!(out, vec![d, l]);
    }

    #[test]
    fn cut_splits_hole() {
        let d = rule(1, &[(AGE, iv(Interval::half_open(4.0, 6.0).unwrap()))], DENY);
        let l = rule(2, &[(AGE, iv(Interval::half_open(0.0, 10.0).unwrap()))], ACCEPT);
        let out = cut(&d, &l, &mut RuleIdAllocator::starting_at(10)).unwrap();
        let got: Vec<_> = out[1..].iter().map(|r| r.premise.get(AGE).cloned().unwrap()).collect();
        assert_eq!(
            got,
            vec![iv(Interval::half_open(0.0, 4.0).unwrap()), iv(Interval::half_open(6.0, 10.0).unwrap())]
        );
    }

    #[test]
    fn cut_discards_swallowed_lesser() {
        let d = rule(1, &[(AGE, iv(Interval::at_least(0.0)))], DENY);
        let l = rule(2, &[(AGE, iv(Interval::at_least(5.0))), (JOB, job(CLERK))], ACCEPT);
        let out = cut(&d, &l, &mut RuleIdAllocator::starting_at(10)).unwrap();
        assert_eq!(out, vec![d]);
    }

    #[test]
    fn cut_rejects_same_rule() {
        let d = rule(1, &[], DENY);
        let mut same = d.clone();
        same.outcome = ACCEPT;
        assert!(matches!(cut(&d, &same, &mut RuleIdAllocator::starting_at(0)), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn cut_is_asymmetric() {
        let a = rule(1, &[(AGE, iv(Interval::half_open(0.0, 10.0).unwrap()))], DENY);
        let b = rule(2, &[(AGE, iv(Interval::half_open(5.0, 15.0).unwrap()))], ACCEPT);
        let ab = cut(&a, &b, &mut RuleIdAllocator::starting_at(10)).unwrap();
        let ba = cut(&b, &a, &mut RuleIdAllocator::starting_at(10)).unwrap();
        assert_eq!(ab[0], a);
        assert_eq!(ba[0], b);
        assert_ne!(ab[1].premise, ba[1].premise);
    }

    fn loan_batch(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Dataset {
        Dataset::new(schema(), rows, labels, None).unwrap()
    }

    #[test]
    fn merge_clone_collapses_to_one_rule() {
        let r = rule(1, &[(AGE, iv(Interval::at_least(40.0)))], DENY);
        let mut r2 = r.clone();
        r2.id = RuleId(2);
        let a = ExplanationTheory::singleton(TheoryId(0), r.clone());
        let b = ExplanationTheory::singleton(TheoryId(1), r2);
        let batch = loan_batch(vec![vec![45.0, 0.0, 1.0], vec![30.0, 1.0, 1.0]], vec![0, 1]);
        let m = merge_fresh(&a, &b, &batch).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.rules()[0].premise, r.premise);
    }

    #[test]
    fn merge_handles_shared_ids() {
        let r = rule(1, &[(AGE, iv(Interval::at_least(40.0)))], DENY);
        let a = ExplanationTheory::singleton(TheoryId(0), r.clone());
        let b = ExplanationTheory::singleton(TheoryId(1), r);
        // batch misses the rule: both copies survive with distinct ids
        let batch = loan_batch(vec![vec![30.0, 1.0, 1.0]], vec![1]);
        let m = merge_fresh(&a, &b, &batch).unwrap();
        assert_eq!(m.len(), 2);
        assert_ne!(m.rules()[0].id, m.rules()[1].id);
    }

    #[test]
    fn merge_conflict_cuts_lesser() {
        // dominant deny rule is perfect on the batch, accept rule is not
        let deny = rule(1, &[(AGE, iv(Interval::at_least(25.0)))], DENY);
        let accept = rule(2, &[(AGE, iv(Interval::at_least(20.0)))], ACCEPT);
        let a = ExplanationTheory::singleton(TheoryId(0), deny.clone());
        let b = ExplanationTheory::singleton(TheoryId(1), accept);
        let batch = loan_batch(
            vec![vec![30.0, 0.0, 0.0], vec![22.0, 0.0, 0.0], vec![40.0, 0.0, 0.0]],
            vec![0, 1, 0],
        );
        let m = merge_fresh(&a, &b, &batch).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.rules()[0], deny);
        assert_eq!(m.rules()[1].premise.get(AGE), Some(&iv(Interval::half_open(20.0, 25.0).unwrap())));
        for row in batch.rows() {
            assert!(m.rules().iter().filter(|r| r.covers(row)).count() <= 1);
        }
    }

    #[test]
    fn merge_rejects_empty_batch() {
        let a = ExplanationTheory::singleton(TheoryId(0), rule(1, &[], DENY));
        let b = ExplanationTheory::singleton(TheoryId(1), rule(2, &[], DENY));
        let batch = loan_batch(vec![], vec![]);
        assert!(matches!(merge_fresh(&a, &b, &batch), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn join_generalizes_on_fixture() {
        let a = rule(1, &[(AGE, iv(Interval::half_open(10.0, 20.0).unwrap())), (JOB, job(CLERK))], DENY);
        let b = rule(2, &[(AGE, iv(Interval::half_open(30.0, 40.0).unwrap())), (JOB, job(MANAGER))], DENY);
        let batch = loan_batch(
            (0..50).map(|i| vec![i as f64, (i % 3) as f64, 0.0]).collect(),
            vec![0; 50],
        );
        let j = join(&[&a, &b], &mut RuleIdAllocator::starting_at(9)).unwrap();
        let cj = rule_coverage(&j, &batch).unwrap();
        for r in [&a, &b] {
            for i in rule_coverage(r, &batch).unwrap().indices() {
                assert!(cj.contains(*i));
            }
        }
    }
}
