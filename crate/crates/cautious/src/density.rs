//! Per-class density scoring.
//!
//! Two estimator families are provided: an isotropic Gaussian kernel density
//! estimate evaluated in the log domain, and a k-nearest-neighbor surrogate
//! that scores a query by the negated distance to its k-th nearest fitting
//! point. Both only promise to rank points the way the underlying density
//! would; calibration downstream consumes nothing but that ordering.
//!
//! [`interaction_adjust`] turns independent per-class scores into coupled
//! ones by penalizing regions that are dense for competing classes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense point in feature space. Every coordinate is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    /// Wraps a coordinate vector, rejecting NaN/Inf coordinates and empty input.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidFeature("empty coordinate vector".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidFeature(format!(
                "non-finite coordinate {bad}"
            )));
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// How the KDE bandwidth is chosen at fit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BandwidthRule {
    /// h = sigma_bar * n^(-1/(d+4)), sigma_bar the mean per-coordinate
    /// sample standard deviation.
    Scott,
    /// Scott's shape with the classical (4/(d+2))^(1/(d+4)) prefactor.
    Silverman,
    /// A caller-supplied positive bandwidth.
    Fixed(f64),
}

/// Fitted Gaussian KDE for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeModel {
    points: Vec<FeatureVector>,
    bandwidth: f64,
    dim: usize,
    log_norm_const: f64,
}

/// Fitted k-NN distance surrogate for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    points: Vec<FeatureVector>,
    k: usize,
    dim: usize,
}

/// A fitted per-class score function, either estimator kind.
///
/// Models are immutable once fitted; scoring the same query twice returns
/// bit-identical results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DensityModel {
    Kde(KdeModel),
    Knn(KnnModel),
}

impl DensityModel {
    pub fn dim(&self) -> usize {
        match self {
            DensityModel::Kde(m) => m.dim,
            DensityModel::Knn(m) => m.dim,
        }
    }

    pub fn n_points(&self) -> usize {
        match self {
            DensityModel::Kde(m) => m.points.len(),
            DensityModel::Knn(m) => m.points.len(),
        }
    }

    /// Scores a query: log-density for KDE, negated k-th-neighbor distance
    /// for k-NN. Higher always means denser.
    pub fn score(&self, x: &FeatureVector) -> Result<f64> {
        match self {
            DensityModel::Kde(m) => m.log_score(x),
            DensityModel::Knn(m) => m.score(x),
        }
    }
}

fn check_points(points: &[FeatureVector]) -> Result<usize> {
    let first = points
        .first()
        .ok_or_else(|| Error::InsufficientData("no fitting points".into()))?;
    let dim = first.dim();
    for p in points {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
    }
    Ok(dim)
}

/// Mean per-coordinate sample standard deviation (n-1 divisor).
fn mean_coordinate_std(points: &[FeatureVector], dim: usize) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    for j in 0..dim {
        let mean = points.iter().map(|p| p.values[j]).sum::<f64>() / n as f64;
        let ss = points
            .iter()
            .map(|p| {
                let d = p.values[j] - mean;
                d * d
            })
            .sum::<f64>();
        acc += (ss / (n - 1) as f64).sqrt();
    }
    acc / dim as f64
}

/// Fits an isotropic Gaussian KDE on a class's fitting split.
pub fn fit_kde(points: Vec<FeatureVector>, rule: BandwidthRule) -> Result<KdeModel> {
    let dim = check_points(&points)?;
    let n = points.len() as f64;
    let scale = n.powf(-1.0 / (dim as f64 + 4.0));
    let bandwidth = match rule {
        BandwidthRule::Fixed(h) => {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidBandwidth(h));
            }
            h
        }
        BandwidthRule::Scott | BandwidthRule::Silverman => {
            let sigma = mean_coordinate_std(&points, dim);
            let prefactor = match rule {
                BandwidthRule::Silverman => {
                    (4.0 / (dim as f64 + 2.0)).powf(1.0 / (dim as f64 + 4.0))
                }
                _ => 1.0,
            };
            if sigma == 0.0 {
                // Degenerate sample (single point or zero spread).
                scale
            } else {
                prefactor * sigma * scale
            }
        }
    };
    let d = dim as f64;
    let log_norm_const = -0.5 * d * (2.0 * std::f64::consts::PI).ln() - d * bandwidth.ln();
    Ok(KdeModel {
        points,
        bandwidth,
        dim,
        log_norm_const,
    })
}

impl KdeModel {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[FeatureVector] {
        &self.points
    }

    /// Log of the averaged Gaussian-kernel density at `x`.
    ///
    /// The sum of exponentials is max-shifted so nothing overflows or
    /// underflows even when squared distances reach the tens of thousands
    /// that high-dimensional feature spaces produce.
    pub fn log_score(&self, x: &FeatureVector) -> Result<f64> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        let inv_two_h2 = 1.0 / (2.0 * self.bandwidth * self.bandwidth);
        let exponents: Vec<f64> = self
            .points
            .iter()
            .map(|p| -squared_distance(x.values(), p.values()) * inv_two_h2)
            .collect();
        let max = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = exponents.iter().map(|e| (e - max).exp()).sum();
        Ok(self.log_norm_const - (self.points.len() as f64).ln() + max + sum.ln())
    }
}

/// Stores a class's fitting points for exact k-NN scoring.
pub fn fit_knn(points: Vec<FeatureVector>, k: usize) -> Result<KnnModel> {
    let dim = check_points(&points)?;
    if k == 0 || k > points.len() {
        return Err(Error::InvalidK {
            k,
            n: points.len(),
        });
    }
    Ok(KnnModel { points, k, dim })
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[FeatureVector] {
        &self.points
    }

    /// Negated Euclidean distance from `x` to its k-th nearest fitting point
    /// (the k-th order statistic of the distance multiset, so ties are
    /// interchangeable). Higher score means denser neighborhood.
    pub fn score(&self, x: &FeatureVector) -> Result<f64> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        let mut sq: Vec<f64> = self
            .points
            .iter()
            .map(|p| squared_distance(x.values(), p.values()))
            .collect();
        let (_, kth, _) = sq.select_nth_unstable_by(self.k - 1, f64::total_cmp);
        Ok(0.0 - kth.sqrt())
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Default neighbor count for a class with `n_fit` fitting points.
pub fn default_k(n_fit: usize) -> usize {
    10.min(n_fit.saturating_sub(1)).max(1)
}

/// Default interaction penalty weight for a classifier with `n_classes`
/// classes: the penalty sums over the other classes, so 1/(n_classes - 1)
/// scales it to the average competitor.
pub fn default_interaction_lambda(n_classes: usize) -> f64 {
    if n_classes < 2 {
        0.0
    } else {
        1.0 / (n_classes as f64 - 1.0)
    }
}

/// Couples per-class scores: returns `p(target) - lambda * sum(p(other))`
/// in the linear domain.
///
/// Inputs are log scores; each is exponentiated as `exp(s - shift)`, with
/// `shift` a single constant fixed at calibration time (the maximum
/// log-score seen over the calibration pool). Using one shift for every
/// query keeps the ordering of adjusted scores across queries intact.
/// Scores that underflow to zero after shifting contribute exactly zero.
/// The result can be negative.
pub fn interaction_adjust(
    per_class_log_scores: &BTreeMap<String, f64>,
    target: &str,
    lambda: f64,
    shift: f64,
) -> Result<f64> {
    let own = *per_class_log_scores
        .get(target)
        .ok_or_else(|| Error::UnknownClass(target.to_string()))?;
    let own_lin = (own - shift).exp();
    let mut penalty = 0.0;
    for (label, s) in per_class_log_scores {
        if label != target {
            penalty += (s - shift).exp();
        }
    }
    Ok(own_lin - lambda * penalty)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector::new(values.to_vec()).unwrap()
    }

    /// Independent linear-domain double loop; only valid when nothing
    /// underflows, which holds for the small cases it oracles.
    fn brute_force_log_kde(points: &[FeatureVector], h: f64, x: &FeatureVector) -> f64 {
        let d = x.dim() as f64;
        let norm = (2.0 * std::f64::consts::PI * h * h).powf(-d / 2.0);
        let mut total = 0.0;
        for p in points {
            let mut sq = 0.0;
            for j in 0..x.dim() {
                let diff = x.values()[j] - p.values()[j];
                sq += diff * diff;
            }
            total += norm * (-sq / (2.0 * h * h)).exp();
        }
        (total / points.len() as f64).ln()
    }

    #[test]
    fn kde_single_point_at_origin() {
        let m = fit_kde(vec![fv(&[0.0])], BandwidthRule::Fixed(1.0)).unwrap();
        let s = m.log_score(&fv(&[0.0])).unwrap();
        // log(1/sqrt(2*pi))
        assert!((s - (-0.9189385332046727)).abs() < 1e-12, "got {s}");
    }

    #[test]
    fn kde_two_points_midpoint() {
        let m = fit_kde(vec![fv(&[0.0]), fv(&[2.0])], BandwidthRule::Fixed(1.0)).unwrap();
        let s = m.log_score(&fv(&[1.0])).unwrap();
        // both kernels contribute phi(1): log phi(1) = -1/2 - log sqrt(2 pi)
        assert!((s - (-1.4189385332046727)).abs() < 1e-12, "got {s}");
    }

    #[test]
    fn kde_single_point_2d_zero_displacement() {
        let m = fit_kde(vec![fv(&[3.0, -1.0])], BandwidthRule::Fixed(1.0)).unwrap();
        let s = m.log_score(&fv(&[3.0, -1.0])).unwrap();
        // log(1/(2*pi))
        assert!((s - (-1.8378770664093453)).abs() < 1e-12, "got {s}");
    }

    #[test]
    fn kde_identical_points_match_single() {
        let single = fit_kde(vec![fv(&[1.5, 2.5])], BandwidthRule::Fixed(0.7)).unwrap();
        let many = fit_kde(vec![fv(&[1.5, 2.5]); 17], BandwidthRule::Fixed(0.7)).unwrap();
        let q = fv(&[0.4, 3.0]);
        let a = single.log_score(&q).unwrap();
        let b = many.log_score(&q).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn kde_matches_brute_force_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(1..=50);
            let d = rng.random_range(1..=10);
            let points: Vec<FeatureVector> = (0..n)
                .map(|_| fv(&(0..d).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<_>>()))
                .collect();
            let h = rng.random_range(0.3..2.0);
            let q = fv(&(0..d).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<_>>());
            let m = fit_kde(points.clone(), BandwidthRule::Fixed(h)).unwrap();
            let fast = m.log_score(&q).unwrap();
            let slow = brute_force_log_kde(&points, h, &q);
            assert!(
                (fast - slow).abs() <= 1e-10 * slow.abs().max(1.0),
                "fast={fast} slow={slow}"
            );
        }
    }

    #[test]
    fn kde_survives_high_dimension() {
        let d = 2048;
        let a = fv(&vec![0.0; d]);
        let b = fv(&vec![1.0; d]);
        let m = fit_kde(vec![a, b], BandwidthRule::Fixed(0.5)).unwrap();
        let s = m.log_score(&fv(&vec![0.5; d])).unwrap();
        // Naive linear-domain evaluation underflows here; the log-domain
        // result is a plain finite number.
        assert!(s.is_finite());
        assert!(s < -1000.0);
    }

    #[test]
    fn kde_translation_invariance() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let d = rng.random_range(1..=6);
            let shift: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
            let points: Vec<FeatureVector> = (0..12)
                .map(|_| fv(&(0..d).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<_>>()))
                .collect();
            let q: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let shifted_points: Vec<FeatureVector> = points
                .iter()
                .map(|p| fv(&p.values().iter().zip(&shift).map(|(v, s)| v + s).collect::<Vec<_>>()))
                .collect();
            let shifted_q: Vec<f64> = q.iter().zip(&shift).map(|(v, s)| v + s).collect();

            let m0 = fit_kde(points.clone(), BandwidthRule::Fixed(0.8)).unwrap();
            let m1 = fit_kde(shifted_points.clone(), BandwidthRule::Fixed(0.8)).unwrap();
            let s0 = m0.log_score(&fv(&q)).unwrap();
            let s1 = m1.log_score(&fv(&shifted_q)).unwrap();
            assert!((s0 - s1).abs() < 1e-12, "s0={s0} s1={s1}");

            let k0 = fit_knn(points, 3).unwrap();
            let k1 = fit_knn(shifted_points, 3).unwrap();
            let t0 = k0.score(&fv(&q)).unwrap();
            let t1 = k1.score(&fv(&shifted_q)).unwrap();
            assert!((t0 - t1).abs() < 1e-12, "t0={t0} t1={t1}");
        }
    }

    #[test]
    fn kde_scott_degenerate_falls_back() {
        let m = fit_kde(vec![fv(&[2.0]); 4], BandwidthRule::Scott).unwrap();
        // sigma_bar = 0 so h = n^(-1/(d+4)) = 4^(-1/5)
        let expected = 4.0f64.powf(-0.2);
        assert!((m.bandwidth() - expected).abs() < 1e-15);
    }

    #[test]
    fn kde_scott_uses_mean_coordinate_std() {
        let pts = vec![fv(&[0.0, 0.0]), fv(&[2.0, 4.0]), fv(&[4.0, 8.0])];
        let m = fit_kde(pts, BandwidthRule::Scott).unwrap();
        // per-coordinate sample stds are 2 and 4, mean 3; h = 3 * 3^(-1/6)
        let expected = 3.0 * 3.0f64.powf(-1.0 / 6.0);
        assert!((m.bandwidth() - expected).abs() < 1e-12);
    }

    #[test]
    fn kde_silverman_prefactor() {
        let pts = vec![fv(&[0.0]), fv(&[1.0]), fv(&[2.0])];
        let scott = fit_kde(pts.clone(), BandwidthRule::Scott).unwrap();
        let silverman = fit_kde(pts, BandwidthRule::Silverman).unwrap();
        let ratio = silverman.bandwidth() / scott.bandwidth();
        let expected = (4.0f64 / 3.0).powf(0.2);
        assert!((ratio - expected).abs() < 1e-12);
    }

    #[test]
    fn kde_rejects_bad_input() {
        assert!(matches!(
            fit_kde(vec![], BandwidthRule::Scott),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            fit_kde(vec![fv(&[0.0])], BandwidthRule::Fixed(0.0)),
            Err(Error::InvalidBandwidth(_))
        ));
        assert!(matches!(
            fit_kde(vec![fv(&[0.0])], BandwidthRule::Fixed(-1.0)),
            Err(Error::InvalidBandwidth(_))
        ));
        assert!(FeatureVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(FeatureVector::new(vec![f64::INFINITY]).is_err());

        let m = fit_kde(vec![fv(&[0.0, 0.0])], BandwidthRule::Fixed(1.0)).unwrap();
        assert!(matches!(
            m.log_score(&fv(&[1.0])),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn knn_constructor_bounds() {
        let pts = vec![fv(&[0.0]), fv(&[1.0]), fv(&[3.0])];
        assert!(fit_knn(pts.clone(), 2).is_ok());
        assert!(matches!(
            fit_knn(pts.clone(), 4),
            Err(Error::InvalidK { k: 4, n: 3 })
        ));
        assert!(matches!(fit_knn(pts, 0), Err(Error::InvalidK { k: 0, n: 3 })));
        assert!(matches!(
            fit_knn(vec![], 1),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn knn_second_neighbor_distance() {
        let m = fit_knn(vec![fv(&[0.0]), fv(&[1.0]), fv(&[3.0])], 2).unwrap();
        let s = m.score(&fv(&[0.0])).unwrap();
        // distances {0, 1, 3}; 2nd smallest is 1
        assert_eq!(s, -1.0);
    }

    #[test]
    fn knn_zero_distance_is_zero_score() {
        let m = fit_knn(vec![fv(&[2.0, 2.0]), fv(&[5.0, 5.0])], 1).unwrap();
        let s = m.score(&fv(&[2.0, 2.0])).unwrap();
        assert_eq!(s, 0.0);
        assert!(s.is_sign_positive(), "score at a training point is +0.0");
    }

    #[test]
    fn knn_score_decreases_moving_away() {
        let m = fit_knn(
            vec![fv(&[0.0, 0.0]), fv(&[1.0, 0.0]), fv(&[0.0, 1.0])],
            2,
        )
        .unwrap();
        let mut last = f64::INFINITY;
        for r in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let s = m.score(&fv(&[r, r])).unwrap();
            assert!(s < last, "score must strictly decrease along the ray");
            last = s;
        }
    }

    #[test]
    fn knn_tied_distances_use_order_statistic() {
        // four points all at distance 1 from the origin
        let m = fit_knn(
            vec![fv(&[1.0, 0.0]), fv(&[-1.0, 0.0]), fv(&[0.0, 1.0]), fv(&[0.0, -1.0])],
            3,
        )
        .unwrap();
        assert_eq!(m.score(&fv(&[0.0, 0.0])).unwrap(), -1.0);
    }

    #[test]
    fn interaction_linear_arithmetic() {
        let mut scores = BTreeMap::new();
        scores.insert("a".to_string(), 0.5f64.ln());
        scores.insert("b".to_string(), 0.3f64.ln());
        scores.insert("c".to_string(), 0.2f64.ln());
        let adjusted = interaction_adjust(&scores, "a", 1.0, 0.0).unwrap();
        assert!((adjusted - 0.0).abs() < 1e-15, "0.5 - (0.3 + 0.2) = 0");
    }

    #[test]
    fn interaction_lambda_zero_is_identity_on_linear_score() {
        let mut scores = BTreeMap::new();
        scores.insert("a".to_string(), -3.0);
        scores.insert("b".to_string(), -1.0);
        for target in ["a", "b"] {
            let adjusted = interaction_adjust(&scores, target, 0.0, 0.0).unwrap();
            assert_eq!(adjusted, scores[target].exp());
        }
    }

    #[test]
    fn interaction_symmetric_classes_cancel() {
        let mut scores = BTreeMap::new();
        scores.insert("a".to_string(), -2.0);
        scores.insert("b".to_string(), -2.0);
        for target in ["a", "b"] {
            let adjusted = interaction_adjust(&scores, target, 1.0, 0.0).unwrap();
            assert!(adjusted.abs() < 1e-15);
        }
    }

    #[test]
    fn interaction_unknown_target() {
        let mut scores = BTreeMap::new();
        scores.insert("a".to_string(), 0.0);
        assert!(matches!(
            interaction_adjust(&scores, "zebra", 1.0, 0.0),
            Err(Error::UnknownClass(_))
        ));
    }

    #[test]
    fn interaction_neg_infinity_score_contributes_zero() {
        let mut scores = BTreeMap::new();
        scores.insert("a".to_string(), 0.0);
        scores.insert("b".to_string(), f64::NEG_INFINITY);
        let adjusted = interaction_adjust(&scores, "a", 1.0, 0.0).unwrap();
        assert_eq!(adjusted, 1.0);
    }

    #[test]
    fn ordering_consistency_under_monotone_transform() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let scores: Vec<f64> = (0..200).map(|_| rng.random_range(-50.0..10.0)).collect();
        let rank = |xs: &[f64]| -> Vec<usize> {
            let mut idx: Vec<usize> = (0..xs.len()).collect();
            idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
            idx
        };
        let before = rank(&scores);
        let transformed: Vec<f64> = scores.iter().map(|s| 3.0 * s + 7.0).collect();
        assert_eq!(before, rank(&transformed));
        let exp: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        assert_eq!(before, rank(&exp));
    }

    #[test]
    fn scoring_is_bit_stable() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let points: Vec<FeatureVector> = (0..30)
            .map(|_| fv(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]))
            .collect();
        let kde = fit_kde(points.clone(), BandwidthRule::Scott).unwrap();
        let knn = fit_knn(points, 3).unwrap();
        let q = fv(&[0.2, -0.4]);
        for _ in 0..5 {
            assert_eq!(
                kde.log_score(&q).unwrap().to_bits(),
                kde.log_score(&q).unwrap().to_bits()
            );
            assert_eq!(
                knn.score(&q).unwrap().to_bits(),
                knn.score(&q).unwrap().to_bits()
            );
        }
    }
}
