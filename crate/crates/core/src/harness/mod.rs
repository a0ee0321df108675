//! Experiment plumbing: data and rule I/O, splits, rule subsampling, the
//! union baseline and metric reports.

mod csv_io;
mod rules_io;

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use csv_io::{load_csv, load_instances, read_dataset, write_csv, write_dataset, ORACLE_COLUMN, TRUTH_COLUMN};
pub use rules_io::{load_rules, load_theory, rules_from_json, rules_to_json, write_rules};

use crate::classifier::TheoryClassifier;
use crate::error::{Error, Result};
use crate::model::{Dataset, ExplanationTheory, Rule, TheoryId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub fidelity: f64,
    pub accuracy: Option<f64>,
    /// `fidelity − accuracy`
    pub delta_acc: Option<f64>,
    pub size: usize,
    pub length_mean: f64,
    pub length_std: f64,
    pub runtime_seconds: f64,
}

impl MetricsReport {
    pub fn table(&self, name: &str) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        format!(
            "{name:<10} {:>8.4} {:>8} {:>9} {:>6} {:>6.2} ± {:<6.2} {:>9.3}",
            self.fidelity,
            opt(self.accuracy),
            opt(self.delta_acc),
            self.size,
            self.length_mean,
            self.length_std,
            self.runtime_seconds
        )
    }

    pub fn table_header() -> String {
        format!(
            "{:<10} {:>8} {:>8} {:>9} {:>6} {:>15} {:>9}",
            "model", "fidelity", "accuracy", "delta_acc", "size", "length", "runtime_s"
        )
    }
}

/// Scores `clf` on `test`. `runtime_seconds` covers prediction only; callers
/// timing a whole run may overwrite it.
pub fn evaluate(clf: &TheoryClassifier, test: &Dataset) -> MetricsReport {
    let start = Instant::now();
    let fidelity = clf.fidelity(test);
    let accuracy = clf.accuracy(test).ok();
    let runtime_seconds = start.elapsed().as_secs_f64();
    let lengths: Vec<f64> = clf.theory().rules().iter().map(|r| r.len() as f64).collect();
    let (length_mean, length_std) = mean_std(&lengths);
    MetricsReport {
        fidelity,
        accuracy,
        delta_acc: accuracy.map(|a| fidelity - a),
        size: clf.theory().len(),
        length_mean,
        length_std,
        runtime_seconds,
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Classifier over the unmerged union of `rules`.
pub fn uni_baseline(rules: &[Rule], reference: &Dataset) -> Result<TheoryClassifier> {
    if rules.is_empty() {
        return Err(Error::invalid("baseline needs at least one rule"));
    }
    let theory = ExplanationTheory::new(TheoryId(0), rules.to_vec())?;
    TheoryClassifier::build(theory, reference)
}

/// Seeded shuffle of `0..n` cut into three contiguous parts by `ratios`.
pub fn split_indices(n: usize, ratios: [f64; 3], seed: u64) -> Result<[Vec<usize>; 3]> {
    let total: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| r.is_nan() || *r < 0.0) || total.is_nan() || total <= 0.0 || total > 1.0 + 1e-9 {
        return Err(Error::invalid("split ratios must be non-negative with a positive sum of at most 1"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut bounds = [0usize; 4];
    let mut acc = 0.0;
    for (k, r) in ratios.iter().enumerate() {
        acc += r;
        bounds[k + 1] = ((acc * n as f64).round() as usize).min(n);
    }
    Ok([0, 1, 2].map(|k| order[bounds[k]..bounds[k + 1]].to_vec()))
}

/// Black-box training, explanation and test partitions.
pub fn split(data: &Dataset, ratios: [f64; 3], seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let [bb, le, ts] = split_indices(data.len(), ratios, seed)?;
    Ok((data.subset(&bb), data.subset(&le), data.subset(&ts)))
}

/// `trials` uniform subsets of `⌈beta·n⌉` rules; trial `t` is seeded with `seed + t`.
pub fn subsample_rules(rules: &[Rule], beta: f64, seed: u64, trials: usize) -> Result<Vec<Vec<Rule>>> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::invalid("beta must lie in (0, 1]"));
    }
    let n = rules.len();
    let k = ((beta * n as f64).ceil() as usize).min(n);
    Ok((0..trials as u64)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t));
            let mut picked = index::sample(&mut rng, n, k).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| rules[i].clone()).collect()
        })
        .collect())
}

/// Table with one line per named report.
pub fn render_reports(reports: &[(&str, &MetricsReport)]) -> String {
    let mut out = MetricsReport::table_header();
    out.push('\n');
    for (name, r) in reports {
        let _ = writeln!(out, "{}", r.table(name));
    }
    out
}
