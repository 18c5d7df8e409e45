//! Calibration and set-valued prediction.
//!
//! Training fits one density model per class on a fitting split and turns
//! the held-out calibration scores into a per-class threshold. A query's
//! prediction set is every class whose score at the query clears its own
//! threshold; no class clearing it yields the null set.
//!
//! Because each class is split, fitted, and calibrated with randomness
//! derived only from the global seed and its own label, adding or removing
//! a class leaves every other class model bit-for-bit unchanged (with
//! interaction scoring, deterministic recomputation restores them exactly).

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::density::{
    default_interaction_lambda, default_k, fit_kde, fit_knn, interaction_adjust, BandwidthRule,
    DensityModel, FeatureVector,
};
use crate::error::{Error, Result};

/// Which density estimator family backs the per-class scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Kde,
    Knn,
}

/// How calibration scores become a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuantileMode {
    /// The plain empirical (1 - alpha) quantile: the m-th largest score
    /// with m = ceil((1 - alpha) * n). Converges to the population
    /// quantile; its coverage guarantee is asymptotic.
    Empirical,
    /// The split-conformal rank: the r-th smallest score with
    /// r = floor(alpha * (n + 1)), taken as negative infinity when r = 0.
    /// Guarantees coverage at least 1 - alpha at any sample size.
    FiniteSample,
}

/// Everything `train` needs besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub estimator: EstimatorKind,
    /// Bandwidth rule for `EstimatorKind::Kde`; ignored for k-NN.
    pub bandwidth: BandwidthRule,
    /// Neighbor count for `EstimatorKind::Knn`; `None` picks
    /// min(10, n_fit - 1) per class. Clamped to the class's fitting size.
    pub k: Option<usize>,
    /// Global miss budget in (0, 1).
    pub alpha: f64,
    /// Per-class overrides of `alpha`.
    pub per_class_alpha: BTreeMap<String, f64>,
    /// Fraction of each class routed to the fitting split, in (0, 1).
    pub split_ratio: f64,
    pub quantile_mode: QuantileMode,
    /// Couple the class scores by penalizing competitor density.
    pub interaction: bool,
    /// Penalty weight when `interaction` is set; `None` picks
    /// 1 / (n_classes - 1).
    pub interaction_lambda: Option<f64>,
    /// Classes with fewer calibration points are kept in the model but
    /// never enter prediction sets.
    pub min_cal_size: usize,
    /// Seed for the per-class splitting RNG.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            estimator: EstimatorKind::Kde,
            bandwidth: BandwidthRule::Scott,
            k: None,
            alpha: 0.1,
            per_class_alpha: BTreeMap::new(),
            split_ratio: 0.5,
            quantile_mode: QuantileMode::FiniteSample,
            interaction: false,
            interaction_lambda: None,
            min_cal_size: 20,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        validate_alpha(self.alpha)?;
        for alpha in self.per_class_alpha.values() {
            validate_alpha(*alpha)?;
        }
        if !(self.split_ratio.is_finite() && self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "split ratio must be in (0, 1), got {}",
                self.split_ratio
            )));
        }
        if let BandwidthRule::Fixed(h) = self.bandwidth {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidBandwidth(h));
            }
        }
        if let Some(lambda) = self.interaction_lambda {
            if !self.interaction {
                return Err(Error::InvalidConfig(
                    "interaction weight given but interaction scoring is off".into(),
                ));
            }
            if !(lambda.is_finite() && lambda >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "interaction weight must be finite and nonnegative, got {lambda}"
                )));
            }
        }
        Ok(())
    }
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// One class's fitted estimator plus its calibration state.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel {
    pub(crate) label: String,
    pub(crate) alpha: f64,
    pub(crate) threshold: f64,
    /// Too few calibration points to certify anything; the class stays in
    /// the model but never enters prediction sets.
    pub(crate) omitted: bool,
    pub(crate) n_fit: usize,
    pub(crate) n_cal: usize,
    pub(crate) estimator: DensityModel,
    pub(crate) calibration_points: Vec<FeatureVector>,
    /// One score per calibration point, same order. Adjusted scores when
    /// interaction is on, raw estimator scores otherwise.
    pub(crate) calibration_scores: Vec<f64>,
}

impl ClassModel {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn omitted(&self) -> bool {
        self.omitted
    }

    pub fn n_fit(&self) -> usize {
        self.n_fit
    }

    pub fn n_cal(&self) -> usize {
        self.n_cal
    }

    pub fn estimator(&self) -> &DensityModel {
        &self.estimator
    }

    pub fn calibration_points(&self) -> &[FeatureVector] {
        &self.calibration_points
    }

    pub fn calibration_scores(&self) -> &[f64] {
        &self.calibration_scores
    }
}

/// The sorted set of labels judged compatible with a query. May be empty:
/// an empty set is the classifier declining every label it knows.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    labels: Vec<String>,
    scores: BTreeMap<String, f64>,
}

impl PredictionSet {
    /// Labels in ascending order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Diagnostic score of every class at the query, omitted classes
    /// included: the same numbers the thresholds were compared against.
    pub fn scores(&self) -> &BTreeMap<String, f64> {
        &self.scores
    }

    pub fn is_null(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).is_ok()
    }
}

/// A set-valued classifier: per-class density models plus calibrated
/// per-class thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct CautiousClassifier {
    pub(crate) config: TrainConfig,
    pub(crate) dim: usize,
    pub(crate) classes: BTreeMap<String, ClassModel>,
    /// Shared log-score shift for interaction scoring, fixed at
    /// calibration time.
    pub(crate) interaction_shift: Option<f64>,
}

/// Threshold for one class from its calibration scores.
///
/// `Empirical` keeps the m-th largest score, m = ceil((1 - alpha) * n).
/// `FiniteSample` keeps the r-th smallest, r = floor(alpha * (n + 1)),
/// and returns negative infinity when r = 0 (the class is then always
/// included, the only rank with a distribution-free guarantee that small).
pub fn calibrate_threshold(scores: &[f64], alpha: f64, mode: QuantileMode) -> Result<f64> {
    validate_alpha(alpha)?;
    if scores.is_empty() {
        return Err(Error::InsufficientData("no calibration scores".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(threshold_from_sorted(&sorted, alpha, mode))
}

fn threshold_from_sorted(sorted: &[f64], alpha: f64, mode: QuantileMode) -> f64 {
    let n = sorted.len();
    match mode {
        QuantileMode::Empirical => {
            let m = (((1.0 - alpha) * n as f64).ceil() as usize).clamp(1, n);
            sorted[n - m]
        }
        QuantileMode::FiniteSample => {
            let r = ((alpha * (n as f64 + 1.0)).floor() as usize).min(n);
            if r == 0 {
                f64::NEG_INFINITY
            } else {
                sorted[r - 1]
            }
        }
    }
}

/// Rank of `new_score` among the calibration scores, as a p-value:
/// (1 + #{s_i <= new}) / (n + 1). Large means the query looks at least as
/// typical for the class as most calibration points did.
pub fn conformal_pvalue(calibration_scores: &[f64], new_score: f64) -> Result<f64> {
    if calibration_scores.is_empty() {
        return Err(Error::InsufficientData("no calibration scores".into()));
    }
    let below = calibration_scores
        .iter()
        .filter(|s| **s <= new_score)
        .count();
    Ok((1.0 + below as f64) / (calibration_scores.len() as f64 + 1.0))
}

/// RNG for one class's fit/calibration split. Derived from the global seed
/// and the label alone, so every class splits the same way no matter which
/// other classes are present.
fn class_rng(seed: u64, label: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update([0u8]);
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(bytes)
}

fn refresh_threshold(class: &mut ClassModel, alpha: f64, mode: QuantileMode, min_cal: usize) {
    class.alpha = alpha;
    class.omitted = class.n_cal == 0 || class.n_cal < min_cal;
    class.threshold = if class.calibration_scores.is_empty() {
        f64::INFINITY
    } else {
        let mut sorted = class.calibration_scores.clone();
        sorted.sort_by(f64::total_cmp);
        threshold_from_sorted(&sorted, alpha, mode)
    };
}

impl CautiousClassifier {
    /// Fits and calibrates one model per distinct label in `data`.
    pub fn train(data: &[(String, FeatureVector)], config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let first = data
            .first()
            .ok_or_else(|| Error::InsufficientData("no training rows".into()))?;
        let dim = first.1.dim();
        let mut by_label: BTreeMap<String, Vec<FeatureVector>> = BTreeMap::new();
        for (label, x) in data {
            if x.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: x.dim(),
                });
            }
            by_label.entry(label.clone()).or_default().push(x.clone());
        }
        for label in config.per_class_alpha.keys() {
            if !by_label.contains_key(label) {
                return Err(Error::UnknownClass(label.clone()));
            }
        }
        let mut classifier = Self {
            config,
            dim,
            classes: BTreeMap::new(),
            interaction_shift: None,
        };
        for (label, points) in by_label {
            let class = classifier.build_class(&label, points)?;
            classifier.classes.insert(label, class);
        }
        if classifier.config.interaction {
            classifier.recompute_interaction();
        }
        Ok(classifier)
    }

    pub(crate) fn from_parts(
        config: TrainConfig,
        dim: usize,
        classes: BTreeMap<String, ClassModel>,
        interaction_shift: Option<f64>,
    ) -> Result<Self> {
        config.validate()?;
        if classes.is_empty() {
            return Err(Error::CorruptManifest("model has no classes".into()));
        }
        if config.interaction && interaction_shift.is_none() {
            return Err(Error::CorruptManifest(
                "interaction model is missing its score shift".into(),
            ));
        }
        for class in classes.values() {
            if class.estimator.dim() != dim {
                return Err(Error::CorruptManifest(format!(
                    "class {:?} was fitted in {} dimensions, manifest says {}",
                    class.label,
                    class.estimator.dim(),
                    dim
                )));
            }
        }
        Ok(Self {
            config,
            dim,
            classes,
            interaction_shift,
        })
    }

    /// Splits, fits, and (for independent scoring) calibrates one class.
    fn build_class(&self, label: &str, points: Vec<FeatureVector>) -> Result<ClassModel> {
        if points.is_empty() {
            return Err(Error::InsufficientData(format!(
                "class {label:?} has no points"
            )));
        }
        for p in &points {
            if p.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: p.dim(),
                });
            }
        }
        let n = points.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut class_rng(self.config.seed, label));
        let n_fit = if n == 1 {
            1
        } else {
            ((self.config.split_ratio * n as f64).round() as usize).clamp(1, n - 1)
        };
        let fit_points: Vec<FeatureVector> =
            order[..n_fit].iter().map(|&i| points[i].clone()).collect();
        let calibration_points: Vec<FeatureVector> =
            order[n_fit..].iter().map(|&i| points[i].clone()).collect();

        let estimator = match self.config.estimator {
            EstimatorKind::Kde => DensityModel::Kde(fit_kde(fit_points, self.config.bandwidth)?),
            EstimatorKind::Knn => {
                let k = match self.config.k {
                    Some(k) => k.min(n_fit),
                    None => default_k(n_fit),
                };
                DensityModel::Knn(fit_knn(fit_points, k)?)
            }
        };
        let calibration_scores: Vec<f64> = calibration_points
            .iter()
            .map(|p| estimator.score(p))
            .collect::<Result<_>>()?;

        let mut class = ClassModel {
            label: label.to_string(),
            alpha: 0.0,
            threshold: f64::INFINITY,
            omitted: true,
            n_fit,
            n_cal: calibration_points.len(),
            estimator,
            calibration_points,
            calibration_scores,
        };
        refresh_threshold(
            &mut class,
            self.alpha_for(label),
            self.config.quantile_mode,
            self.config.min_cal_size,
        );
        Ok(class)
    }

    fn alpha_for(&self, label: &str) -> f64 {
        self.config
            .per_class_alpha
            .get(label)
            .copied()
            .unwrap_or(self.config.alpha)
    }

    fn effective_lambda(&self) -> f64 {
        self.config
            .interaction_lambda
            .unwrap_or_else(|| default_interaction_lambda(self.classes.len()))
    }

    fn shift(&self) -> Result<f64> {
        self.interaction_shift.ok_or_else(|| {
            Error::CorruptManifest("interaction model is missing its score shift".into())
        })
    }

    /// Raw estimator score of `x` under every class, omitted ones included.
    fn raw_scores(&self, x: &FeatureVector) -> Result<BTreeMap<String, f64>> {
        self.classes
            .iter()
            .map(|(label, class)| Ok((label.clone(), class.estimator.score(x)?)))
            .collect()
    }

    /// Rebuilds every class's adjusted calibration scores, the shared
    /// shift, and all thresholds. A pure function of the stored splits, so
    /// repeating it with the same class inventory restores identical state.
    fn recompute_interaction(&mut self) {
        let lambda = self.effective_lambda();
        let labels: Vec<String> = self.classes.keys().cloned().collect();
        let mut shift = f64::NEG_INFINITY;
        let mut log_maps: BTreeMap<String, Vec<BTreeMap<String, f64>>> = BTreeMap::new();
        for label in &labels {
            let mut maps = Vec::new();
            for point in &self.classes[label].calibration_points {
                let logs = self
                    .raw_scores(point)
                    .expect("calibration points were dimension-checked at build time");
                for s in logs.values() {
                    shift = shift.max(*s);
                }
                maps.push(logs);
            }
            log_maps.insert(label.clone(), maps);
        }
        if shift == f64::NEG_INFINITY {
            shift = 0.0;
        }
        let mode = self.config.quantile_mode;
        let min_cal = self.config.min_cal_size;
        let mut alphas = BTreeMap::new();
        for label in &labels {
            alphas.insert(label.clone(), self.alpha_for(label));
        }
        for label in &labels {
            let adjusted: Vec<f64> = log_maps[label]
                .iter()
                .map(|logs| {
                    interaction_adjust(logs, label, lambda, shift)
                        .expect("target label is one of the scored classes")
                })
                .collect();
            let class = self.classes.get_mut(label).expect("label came from the map");
            class.calibration_scores = adjusted;
            refresh_threshold(class, alphas[label], mode, min_cal);
        }
        self.interaction_shift = Some(shift);
    }

    fn check_dim(&self, x: &FeatureVector) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        Ok(())
    }

    /// The score each threshold is compared against, for every class:
    /// raw estimator scores normally, interaction-adjusted scores when
    /// coupling is on.
    fn effective_scores(&self, x: &FeatureVector) -> Result<BTreeMap<String, f64>> {
        let raw = self.raw_scores(x)?;
        if !self.config.interaction {
            return Ok(raw);
        }
        let shift = self.shift()?;
        let lambda = self.effective_lambda();
        self.classes
            .keys()
            .map(|label| Ok((label.clone(), interaction_adjust(&raw, label, lambda, shift)?)))
            .collect()
    }

    /// Every class whose score at `x` clears its threshold, ascending by
    /// label. Omitted classes never appear in the labels, but their
    /// diagnostic scores are reported.
    pub fn predict_set(&self, x: &FeatureVector) -> Result<PredictionSet> {
        self.check_dim(x)?;
        let scores = self.effective_scores(x)?;
        let labels = self
            .classes
            .values()
            .filter(|class| !class.omitted && scores[&class.label] >= class.threshold)
            .map(|class| class.label.clone())
            .collect();
        Ok(PredictionSet { labels, scores })
    }

    /// The `k` non-omitted classes scoring highest at `x`, descending
    /// (ties broken by ascending label).
    pub fn predict_topk(&self, x: &FeatureVector, k: usize) -> Result<Vec<String>> {
        self.check_dim(x)?;
        let available = self.classes.values().filter(|c| !c.omitted).count();
        if k == 0 || k > available {
            return Err(Error::InvalidK { k, n: available });
        }
        let scores = self.effective_scores(x)?;
        let mut ranked: Vec<(String, f64)> = self
            .classes
            .values()
            .filter(|class| !class.omitted)
            .map(|class| (class.label.clone(), scores[&class.label]))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(k);
        Ok(ranked.into_iter().map(|(label, _)| label).collect())
    }

    /// Conformal p-value of `x` under one class: how typical the query
    /// looks relative to the class's calibration scores.
    pub fn class_pvalue(&self, x: &FeatureVector, label: &str) -> Result<f64> {
        self.check_dim(x)?;
        let class = self
            .classes
            .get(label)
            .ok_or_else(|| Error::UnknownClass(label.to_string()))?;
        let score = self.effective_scores(x)?[label];
        conformal_pvalue(&class.calibration_scores, score)
    }

    /// Fits and calibrates a new class, optionally at its own miss budget.
    /// Existing classes are untouched (with interaction scoring they are
    /// deterministically recalibrated against the grown inventory).
    pub fn add_class(
        &mut self,
        label: &str,
        points: Vec<FeatureVector>,
        alpha: Option<f64>,
    ) -> Result<()> {
        if self.classes.contains_key(label) {
            return Err(Error::DuplicateClass(label.to_string()));
        }
        if let Some(alpha) = alpha {
            validate_alpha(alpha)?;
            self.config.per_class_alpha.insert(label.to_string(), alpha);
        }
        let class = match self.build_class(label, points) {
            Ok(class) => class,
            Err(e) => {
                if alpha.is_some() {
                    self.config.per_class_alpha.remove(label);
                }
                return Err(e);
            }
        };
        self.classes.insert(label.to_string(), class);
        if self.config.interaction {
            self.recompute_interaction();
        }
        Ok(())
    }

    /// Drops a class along with any per-class miss budget it carried.
    /// Refuses to drop the last one.
    pub fn remove_class(&mut self, label: &str) -> Result<()> {
        if !self.classes.contains_key(label) {
            return Err(Error::UnknownClass(label.to_string()));
        }
        if self.classes.len() == 1 {
            return Err(Error::EmptyClassifier);
        }
        self.classes.remove(label);
        self.config.per_class_alpha.remove(label);
        if self.config.interaction {
            self.recompute_interaction();
        }
        Ok(())
    }

    /// Recomputes every threshold for a new global miss budget, clearing
    /// any per-class overrides. No density model is refitted.
    pub fn recalibrate(&mut self, alpha: f64) -> Result<()> {
        validate_alpha(alpha)?;
        self.config.alpha = alpha;
        self.config.per_class_alpha.clear();
        let mode = self.config.quantile_mode;
        let min_cal = self.config.min_cal_size;
        for class in self.classes.values_mut() {
            refresh_threshold(class, alpha, mode, min_cal);
        }
        Ok(())
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_labels(&self) -> Vec<String> {
        self.classes.keys().cloned().collect()
    }

    pub fn class(&self, label: &str) -> Option<&ClassModel> {
        self.classes.get(label)
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassModel> {
        self.classes.values()
    }

    pub fn interaction_shift(&self) -> Option<f64> {
        self.interaction_shift
    }
}
