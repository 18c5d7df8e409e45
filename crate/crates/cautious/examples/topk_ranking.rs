//! Forced-choice sanity check: rank classes by raw density score and
//! keep the top k. This throws away the coverage machinery, but it
//! confirms the fitted densities order classes sensibly, and top-k
//! accuracy should approach 1 as k grows.

use cautious::{
    synth_mixture, topk_accuracy, CautiousClassifier, MixtureClass, MixtureSpec, TrainConfig,
};

fn main() {
    let class = |label: &str, mean: Vec<f64>| MixtureClass {
        label: label.into(),
        weight: 0.25,
        mean,
        variance: 1.0,
    };
    let spec = MixtureSpec {
        classes: vec![
            class("north", vec![0.0, 2.0]),
            class("south", vec![0.0, -2.0]),
            class("east", vec![2.0, 0.0]),
            class("west", vec![-2.0, 0.0]),
        ],
        dim: 2,
        n_total: 4000,
        seed: 9,
    };
    let train = synth_mixture(&spec).unwrap();
    let eval = synth_mixture(&MixtureSpec { seed: 10, ..spec.clone() }).unwrap();
    let classifier =
        CautiousClassifier::train(&train.labeled_pairs(), TrainConfig::default()).unwrap();

    let pairs = eval.labeled_pairs();
    println!("four overlapping classes at the compass points:");
    for k in 1..=4 {
        let accuracy = topk_accuracy(&classifier, &pairs, k).unwrap();
        println!("top-{k} accuracy: {accuracy:.4}");
    }
}
