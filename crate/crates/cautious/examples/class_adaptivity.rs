//! Per-class coverage targets. A screening task may tolerate missing a
//! benign case far less than a costly false alarm: give the critical
//! class a small alpha (high coverage) and let the others run looser.
//! Thresholds calibrate per class, so one class's target never
//! disturbs another's.

use cautious::{
    evaluate, synth_mixture, CautiousClassifier, MixtureClass, MixtureSpec, TrainConfig,
};

fn spec(seed: u64) -> MixtureSpec {
    let class = |label: &str, mean: Vec<f64>| MixtureClass {
        label: label.into(),
        weight: 1.0 / 3.0,
        mean,
        variance: 1.0,
    };
    MixtureSpec {
        classes: vec![
            class("critical", vec![0.0, 0.0]),
            class("routine", vec![2.0, 0.5]),
            class("rare", vec![0.5, 2.0]),
        ],
        dim: 2,
        n_total: 3000,
        seed,
    }
}

fn per_class_coverage(classifier: &CautiousClassifier, seed: u64) -> Vec<(String, f64)> {
    let eval = synth_mixture(&spec(seed)).unwrap();
    let report = evaluate(classifier, &eval.labeled_pairs()).unwrap();
    report.per_class_coverage.into_iter().collect()
}

fn main() {
    let train = synth_mixture(&spec(3)).unwrap();

    let uniform = TrainConfig {
        alpha: 0.2,
        ..TrainConfig::default()
    };
    let adapted = TrainConfig {
        alpha: 0.2,
        per_class_alpha: [("critical".to_string(), 0.02)].into(),
        ..TrainConfig::default()
    };

    let pairs = train.labeled_pairs();
    let clf_uniform = CautiousClassifier::train(&pairs, uniform).unwrap();
    let clf_adapted = CautiousClassifier::train(&pairs, adapted).unwrap();

    println!("{:<10} {:>16} {:>16}", "class", "uniform a=0.20", "critical a=0.02");
    let uniform_cov = per_class_coverage(&clf_uniform, 77);
    let adapted_cov = per_class_coverage(&clf_adapted, 77);
    for ((label, u), (_, a)) in uniform_cov.iter().zip(&adapted_cov) {
        println!("{label:<10} {u:>16.4} {a:>16.4}");
    }
    println!("\nonly the critical class moves: its coverage jumps to ~0.98");
    println!("while routine and rare keep their 0.80 target exactly");
}
