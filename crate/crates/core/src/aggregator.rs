//! The hierarchical driver: repeatedly merge the most similar pair of theories
//! whose merge passes the BIC gate on a fresh batch, then trim the result.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coverage::{check_premise, rule_fidelity, theory_coverage, CoverageSet};
use crate::error::{Error, Result};
use crate::merge::merge;
use crate::model::{Dataset, ExplanationTheory, Rule, RuleIdAllocator, TheoryId};
use crate::scoring::{bic, jaccard};

pub const DEFAULT_BATCH_SIZE: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub batch_size: usize,
    /// Keep the top `⌈alpha/2⌉` rules per class by fidelity.
    pub alpha: Option<usize>,
    /// Drop rules below this fidelity percentile (0..=100).
    pub alpha_q: Option<f64>,
    pub seed: u64,
    pub max_iterations: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { batch_size: DEFAULT_BATCH_SIZE, alpha: None, alpha_q: None, seed: 0, max_iterations: None }
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        match (self.alpha, self.alpha_q) {
            (Some(_), Some(_)) => Err(Error::invalid("set at most one of alpha and alpha_q")),
            (Some(0), None) => Err(Error::invalid("alpha must be at least 1")),
            (None, Some(q)) if !(0.0..=100.0).contains(&q) => Err(Error::invalid("alpha_q must lie in [0, 100]")),
            _ => Ok(()),
        }
    }
}

/// One node of the merge forest. Leaves are the input theories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DendrogramNode {
    pub node: usize,
    pub theory: TheoryId,
    pub left: Option<usize>,
    pub right: Option<usize>,
    pub rules: usize,
    /// Stream index of the seeded batch generator that produced the gating batch.
    pub batch_offset: Option<u64>,
    /// BIC of the plain union of the children on the gating batch.
    pub bic_before: Option<f64>,
    /// BIC of the merged theory on the gating batch.
    pub bic_after: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dendrogram {
    pub nodes: Vec<DendrogramNode>,
}

impl Dendrogram {
    pub fn leaves(&self) -> impl Iterator<Item = &DendrogramNode> {
        self.nodes.iter().filter(|n| n.left.is_none())
    }

    pub fn internal(&self) -> impl Iterator<Item = &DendrogramNode> {
        self.nodes.iter().filter(|n| n.left.is_some())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dendrogram serializes")
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub theory: ExplanationTheory,
    pub dendrogram: Dendrogram,
    /// Batches drawn.
    pub iterations: usize,
}

/// Generator for the batch of outer iteration `offset`.
pub fn batch_rng(seed: u64, offset: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(offset);
    rng
}

/// Uniform sample without replacement of `min(size, n)` rows.
pub fn sample_batch<R: Rng + ?Sized>(data: &Dataset, size: usize, rng: &mut R) -> Dataset {
    let n = data.len();
    let picked = index::sample(rng, n, size.min(n)).into_vec();
    data.subset(&picked)
}

#[derive(Debug, Clone, Copy)]
struct PairKey {
    similarity: f64,
    ids: (TheoryId, TheoryId),
    slots: (usize, usize),
}

impl PairKey {
    fn new(similarity: f64, a: (usize, TheoryId), b: (usize, TheoryId)) -> Self {
        let (first, second) = if a.1 <= b.1 { (a, b) } else { (b, a) };
        PairKey { similarity, ids: (first.1, second.1), slots: (first.0, second.0) }
    }
}

// Greater means popped first: higher similarity, then smaller ids.
impl Ord for PairKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.similarity
            .total_cmp(&other.similarity)
            .then_with(|| other.ids.cmp(&self.ids))
    }
}

impl PartialOrd for PairKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for PairKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for PairKey {}

fn pair_heap(pool: &[(ExplanationTheory, CoverageSet)]) -> BinaryHeap<PairKey> {
    let mut keys = Vec::with_capacity(pool.len() * pool.len().saturating_sub(1) / 2);
    for i in 0..pool.len() {
        for j in i + 1..pool.len() {
            let sim = jaccard(&pool[i].1, &pool[j].1);
            keys.push(PairKey::new(sim, (i, pool[i].0.id()), (j, pool[j].0.id())));
        }
    }
    BinaryHeap::from(keys)
}

/// All unordered pairs of `theories` (as slice indices) by descending
/// similarity on `data`; ties go to the lexicographically smaller id pair.
pub fn sort_pairs(theories: &[ExplanationTheory], data: &Dataset) -> Result<Vec<(usize, usize)>> {
    let pool = theories
        .iter()
        .map(|t| Ok((t.clone(), theory_coverage(t, data)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(pair_heap(&pool).into_sorted_vec().into_iter().rev().map(|k| k.slots).collect())
}

fn with_fidelity(rule: &Rule, data: &Dataset) -> Rule {
    let mut r = rule.clone();
    r.fidelity_cache = Some(rule_fidelity(rule, data));
    r
}

fn ranked_by_fidelity(theory: &ExplanationTheory, data: &Dataset) -> Vec<Rule> {
    theory.rules().iter().map(|r| with_fidelity(r, data)).collect()
}

/// Keeps the `⌈alpha/2⌉` highest-fidelity rules of each class (ties to the
/// lower id), preserving rule order.
pub fn filter_alpha(theory: &ExplanationTheory, alpha: usize, data: &Dataset) -> ExplanationTheory {
    let per_class = alpha.div_ceil(2);
    let rules = ranked_by_fidelity(theory, data);
    let mut keep = vec![false; rules.len()];
    for outcome in 0..2u8 {
        let mut idx: Vec<usize> = (0..rules.len()).filter(|&i| rules[i].outcome == outcome).collect();
        idx.sort_by(|&a, &b| {
            let (ra, rb) = (&rules[a], &rules[b]);
            rb.fidelity_cache.unwrap().total_cmp(&ra.fidelity_cache.unwrap()).then(ra.id.cmp(&rb.id))
        });
        for &i in idx.iter().take(per_class) {
            keep[i] = true;
        }
    }
    let kept = rules.into_iter().zip(keep).filter_map(|(r, k)| k.then_some(r)).collect();
    ExplanationTheory::new(theory.id(), kept).expect("subset of a valid theory")
}

/// Nearest-rank percentile of `values` (`0 < p` uses rank `⌈p/100·n⌉`, `p = 0`
/// the minimum). `None` for an empty slice.
pub fn nearest_rank_percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // multiply first so integer percentiles stay exact
    let rank = (p * sorted.len() as f64 / 100.0).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Keeps rules whose fidelity reaches the `alpha_q`-th percentile.
pub fn filter_alpha_q(theory: &ExplanationTheory, alpha_q: f64, data: &Dataset) -> ExplanationTheory {
    let rules = ranked_by_fidelity(theory, data);
    let fids: Vec<f64> = rules.iter().map(|r| r.fidelity_cache.unwrap()).collect();
    let kept = match nearest_rank_percentile(&fids, alpha_q) {
        Some(threshold) => rules.into_iter().filter(|r| r.fidelity_cache.unwrap() >= threshold).collect(),
        None => Vec::new(),
    };
    ExplanationTheory::new(theory.id(), kept).expect("subset of a valid theory")
}

/// Runs the aggregation over single-rule `theories` using `data` for
/// similarity, batches and the final filter.
pub fn run(theories: Vec<ExplanationTheory>, data: &Dataset, cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    if theories.len() < 2 {
        return Err(Error::invalid("at least two theories are required"));
    }
    if data.is_empty() {
        return Err(Error::invalid("dataset is empty"));
    }
    for t in &theories {
        if t.len() != 1 {
            return Err(Error::invalid(format!("input theory {} must hold exactly one rule", t.id())));
        }
        check_premise(data.schema(), &t.rules()[0].premise)?;
    }
    let mut sorted_ids: Vec<TheoryId> = theories.iter().map(ExplanationTheory::id).collect();
    sorted_ids.sort_unstable();
    if sorted_ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("theory ids must be unique"));
    }

    let mut ids = RuleIdAllocator::after(&theories);
    let mut next_theory = sorted_ids.last().map_or(0, |t| t.0 + 1);
    let mut dendrogram = Dendrogram::default();
    // (theory, coverage on data, dendrogram node)
    let mut pool: Vec<(ExplanationTheory, CoverageSet)> = Vec::with_capacity(theories.len());
    let mut nodes: Vec<usize> = Vec::with_capacity(theories.len());
    for t in theories {
        let cov = theory_coverage(&t, data)?;
        nodes.push(dendrogram.nodes.len());
        dendrogram.nodes.push(DendrogramNode {
            node: dendrogram.nodes.len(),
            theory: t.id(),
            left: None,
            right: None,
            rules: t.len(),
            batch_offset: None,
            bic_before: None,
            bic_after: None,
        });
        pool.push((t, cov));
    }

    let mut iterations = 0usize;
    while pool.len() > 1 && cfg.max_iterations.is_none_or(|m| iterations < m) {
        let offset = iterations as u64;
        let batch = sample_batch(data, cfg.batch_size, &mut batch_rng(cfg.seed, offset));
        iterations += 1;

        let mut heap = pair_heap(&pool);
        let mut accepted = None;
        while let Some(key) = heap.pop() {
            let (i, j) = key.slots;
            let id = TheoryId(next_theory);
            let merged = merge(&pool[i].0, &pool[j].0, &batch, id, &mut ids)?;
            let union = ExplanationTheory::union(id, &pool[i].0, &pool[j].0)?;
            let (after, before) = (bic(&merged, &batch)?, bic(&union, &batch)?);
            if after.value <= before.value {
                accepted = Some((i, j, merged, before.value, after.value));
                break;
            }
        }
        let Some((i, j, merged, before, after)) = accepted else { break };

        next_theory += 1;
        let node = dendrogram.nodes.len();
        dendrogram.nodes.push(DendrogramNode {
            node,
            theory: merged.id(),
            left: Some(nodes[i]),
            right: Some(nodes[j]),
            rules: merged.len(),
            batch_offset: Some(offset),
            bic_before: Some(before),
            bic_after: Some(after),
        });
        for slot in [i.max(j), i.min(j)] {
            pool.remove(slot);
            nodes.remove(slot);
        }
        let cov = theory_coverage(&merged, data)?;
        pool.push((merged, cov));
        nodes.push(node);
    }

    let rules: Vec<Rule> = pool.into_iter().flat_map(|(t, _)| t.into_rules()).collect();
    let combined = ExplanationTheory::new(TheoryId(next_theory), rules)?;
    let theory = match (cfg.alpha, cfg.alpha_q) {
        (Some(a), _) => filter_alpha(&combined, a, data),
        (None, Some(q)) => filter_alpha_q(&combined, q, data),
        (None, None) => {
            let rules = ranked_by_fidelity(&combined, data);
            ExplanationTheory::new(combined.id(), rules)?
        }
    };
    Ok(RunOutput { theory, dendrogram, iterations })
}

/// Wraps each rule into its own single-rule theory (theory id = position).
pub fn singleton_theories(rules: Vec<Rule>) -> Vec<ExplanationTheory> {
    rules
        .into_iter()
        .enumerate()
        .map(|(i, r)| ExplanationTheory::singleton(TheoryId(i as u64), r))
        .collect()
}
