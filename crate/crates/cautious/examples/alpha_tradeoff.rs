//! One model, many alphas: thresholds recalibrate from the stored
//! calibration scores without refitting densities. Small alpha buys
//! coverage with larger (more ambiguous) sets; large alpha trades
//! coverage away for sharper sets and more refusals.

use cautious::{
    alpha_sweep, synth_mixture, CautiousClassifier, MixtureClass, MixtureSpec, TrainConfig,
};

fn main() {
    let spec = MixtureSpec {
        classes: vec![
            MixtureClass {
                label: "a".into(),
                weight: 0.5,
                mean: vec![0.0, 0.0],
                variance: 1.0,
            },
            MixtureClass {
                label: "b".into(),
                weight: 0.5,
                mean: vec![2.5, 0.0],
                variance: 1.0,
            },
        ],
        dim: 2,
        n_total: 3000,
        seed: 5,
    };
    let train = synth_mixture(&spec).unwrap();
    let eval = synth_mixture(&MixtureSpec { seed: 99, ..spec.clone() }).unwrap();
    let classifier =
        CautiousClassifier::train(&train.labeled_pairs(), TrainConfig::default()).unwrap();

    let alphas: Vec<f64> = (1..=17).map(|i| i as f64 * 0.05).collect();
    let reports = alpha_sweep(&classifier, &eval.labeled_pairs(), &alphas).unwrap();

    println!(
        "{:>6} {:>10} {:>10} {:>10}",
        "alpha", "coverage", "set size", "null rate"
    );
    for r in &reports {
        println!(
            "{:>6.2} {:>10.4} {:>10.4} {:>10.4}",
            r.alpha, r.coverage, r.ambiguity, r.null_rate
        );
    }
    println!("\nset size never grows with alpha, null rate never shrinks:");
    println!("the prediction sets are nested as alpha rises");
}
