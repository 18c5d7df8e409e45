//! Empirical check of the finite-sample coverage guarantee: with the
//! conservative quantile rule, the chance that the prediction set
//! contains the true label is at least 1 - alpha, whatever the
//! distribution. Here: a three-class Gaussian mixture with heavy
//! overlap, fresh evaluation draws, several seeds.

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
            class("a", vec![0.0, 0.0]),
            class("b", vec![2.0, 0.0]),
            class("c", vec![1.0, 1.5]),
        ],
        dim: 2,
        n_total: 2000,
        seed,
    }
}

fn main() {
    for alpha in [0.05, 0.1, 0.2] {
        let mut coverages = Vec::new();
        for seed in 0..10 {
            let train = synth_mixture(&spec(seed)).unwrap();
            let eval = synth_mixture(&spec(1000 + seed)).unwrap();
            let config = TrainConfig {
                alpha,
                ..TrainConfig::default()
            };
            let classifier =
                CautiousClassifier::train(&train.labeled_pairs(), config).unwrap();
            let report = evaluate(&classifier, &eval.labeled_pairs()).unwrap();
            coverages.push(report.coverage);
        }
        let mean = coverages.iter().sum::<f64>() / coverages.len() as f64;
        let min = coverages.iter().cloned().fold(f64::INFINITY, f64::min);
        println!(
            "alpha {alpha:<5} target {:.2}  mean coverage {mean:.4}  worst seed {min:.4}",
            1.0 - alpha
        );
    }
    println!("\nthe mean stays at or above the target; single seeds fluctuate");
    println!("within the finite-sample slack but should rarely dip far below");
}
