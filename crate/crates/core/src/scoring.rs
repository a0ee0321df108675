//! Theory similarity and the BIC merge gate.

use serde::{Deserialize, Serialize};

use crate::classifier::theory_fidelity;
use crate::coverage::{theory_coverage, CoverageSet};
use crate::error::Result;
use crate::model::{Dataset, ExplanationTheory};

/// Floor applied to fidelity inside the logarithm.
pub const FIDELITY_FLOOR: f64 = 1e-6;

/// Jaccard similarity of two coverage sets; 0 when both are empty.
pub fn jaccard(a: &CoverageSet, b: &CoverageSet) -> f64 {
    let inter = a.intersection_len(b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Jaccard similarity of the two theories' coverage on `data`.
pub fn similarity(a: &ExplanationTheory, b: &ExplanationTheory, data: &Dataset) -> Result<f64> {
    Ok(jaccard(&theory_coverage(a, data)?, &theory_coverage(b, data)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BicScore {
    pub value: f64,
    /// `2·n·ln(max(fidelity, ε))`, non-positive.
    pub fidelity_term: f64,
    /// `ln(n)·mean rule length`.
    pub complexity_term: f64,
    pub n: usize,
}

impl BicScore {
    pub fn from_parts(fidelity: f64, mean_rule_length: f64, n: usize) -> Self {
        let nf = n as f64;
        let fidelity_term = 2.0 * nf * fidelity.max(FIDELITY_FLOOR).ln();
        let complexity_term = nf.ln() * mean_rule_length;
        BicScore { value: complexity_term - fidelity_term, fidelity_term, complexity_term, n }
    }
}

/// Lower is better: complexity is mean rule length, likelihood is the theory's
/// classification fidelity on `data`.
pub fn bic(theory: &ExplanationTheory, data: &Dataset) -> Result<BicScore> {
    let fidelity = theory_fidelity(theory, data)?;
    Ok(BicScore::from_parts(fidelity, theory.mean_rule_length(), data.len()))
}

pub fn accept_merge(merged: &ExplanationTheory, union: &ExplanationTheory, data: &Dataset) -> Result<bool> {
    Ok(bic(merged, data)?.value <= bic(union, data)?.value)
}
