//! Coverage, ambiguity, and trade-off metrics.
//!
//! Per-point prediction runs in parallel; aggregation folds the per-point
//! results in input order, so every figure is bit-identical no matter how
//! many threads the pool has.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::conformal::CautiousClassifier;
use crate::density::FeatureVector;
use crate::error::{Error, Result};

/// Aggregate metrics of one evaluation run at one miss budget.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// The classifier's global miss budget at evaluation time.
    pub alpha: f64,
    /// Fraction of points whose true label landed in the prediction set.
    pub coverage: f64,
    /// Coverage conditioned on the true label, for every label present in
    /// the evaluation data (labels outside the classifier's inventory are
    /// never covered and report 0).
    pub per_class_coverage: BTreeMap<String, f64>,
    /// Mean prediction-set size.
    pub ambiguity: f64,
    /// Fraction of points answered with the empty set.
    pub null_rate: f64,
    pub n_eval: usize,
    /// Points whose true label the classifier has never seen.
    pub out_of_inventory: usize,
}

struct PointOutcome {
    label: String,
    set_size: usize,
    covered: bool,
    out_of_inventory: bool,
}

fn score_points(
    classifier: &CautiousClassifier,
    data: &[(String, FeatureVector)],
) -> Result<Vec<PointOutcome>> {
    let inventory: Vec<String> = classifier.class_labels();
    data.par_iter()
        .map(|(label, x)| {
            let set = classifier.predict_set(x)?;
            Ok(PointOutcome {
                label: label.clone(),
                set_size: set.len(),
                covered: set.contains(label),
                out_of_inventory: !inventory.iter().any(|l| l == label),
            })
        })
        .collect()
}

/// Runs the classifier over labeled points and aggregates coverage,
/// ambiguity, null rate, and per-class coverage.
pub fn evaluate(
    classifier: &CautiousClassifier,
    data: &[(String, FeatureVector)],
) -> Result<EvalReport> {
    if data.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    let outcomes = score_points(classifier, data)?;
    let n = outcomes.len();
    let mut covered: u64 = 0;
    let mut size_sum: u64 = 0;
    let mut nulls: u64 = 0;
    let mut out_of_inventory: usize = 0;
    let mut class_totals: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for o in &outcomes {
        covered += u64::from(o.covered);
        size_sum += o.set_size as u64;
        nulls += u64::from(o.set_size == 0);
        out_of_inventory += usize::from(o.out_of_inventory);
        let entry = class_totals.entry(o.label.clone()).or_insert((0, 0));
        entry.0 += u64::from(o.covered);
        entry.1 += 1;
    }
    let per_class_coverage = class_totals
        .into_iter()
        .map(|(label, (hits, total))| (label, hits as f64 / total as f64))
        .collect();
    Ok(EvalReport {
        alpha: classifier.config().alpha,
        coverage: covered as f64 / n as f64,
        per_class_coverage,
        ambiguity: size_sum as f64 / n as f64,
        null_rate: nulls as f64 / n as f64,
        n_eval: n,
        out_of_inventory,
    })
}

/// Evaluates the same classifier and data across a strictly ascending
/// grid of miss budgets. Density fits are reused; only thresholds move,
/// so ambiguity is nonincreasing and null rate nondecreasing along the
/// grid.
pub fn alpha_sweep(
    classifier: &CautiousClassifier,
    data: &[(String, FeatureVector)],
    alphas: &[f64],
) -> Result<Vec<EvalReport>> {
    if alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "alpha grid must be strictly ascending".into(),
        ));
    }
    let mut sweep = classifier.clone();
    let mut reports = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        sweep.recalibrate(alpha)?;
        reports.push(evaluate(&sweep, data)?);
    }
    Ok(reports)
}

/// Fraction of points whose true label ranks among the classifier's top
/// `k` scores.
pub fn topk_accuracy(
    classifier: &CautiousClassifier,
    data: &[(String, FeatureVector)],
    k: usize,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    let hits: Vec<bool> = data
        .par_iter()
        .map(|(label, x)| {
            let ranked = classifier.predict_topk(x, k)?;
            Ok(ranked.iter().any(|l| l == label))
        })
        .collect::<Result<_>>()?;
    let total = hits.iter().filter(|h| **h).count();
    Ok(total as f64 / hits.len() as f64)
}
