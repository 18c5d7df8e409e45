//! The null set as an out-of-distribution flag. Queries are drawn far
//! from every class; a classifier forced to pick a label would answer
//! nonsense, this one answers "I don't know" for all of them.

use cautious::{
    synth_mixture, CautiousClassifier, FeatureVector, MixtureClass, MixtureSpec, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let spec = MixtureSpec {
        classes: vec![
            MixtureClass {
                label: "cats".into(),
                weight: 0.5,
                mean: vec![0.0, 0.0],
                variance: 1.0,
            },
            MixtureClass {
                label: "dogs".into(),
                weight: 0.5,
                mean: vec![4.0, 0.0],
                variance: 1.0,
            },
        ],
        dim: 2,
        n_total: 2000,
        seed: 1,
    };
    let train = synth_mixture(&spec).unwrap();
    let config = TrainConfig {
        alpha: 0.01,
        ..TrainConfig::default()
    };
    let classifier = CautiousClassifier::train(&train.labeled_pairs(), config).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut nulls = 0;
    let n = 100;
    for _ in 0..n {
        // a box of junk centered 50 standard deviations away
        let x = FeatureVector::new(vec![
            50.0 + rng.random_range(-2.0..2.0),
            -50.0 + rng.random_range(-2.0..2.0),
        ])
        .unwrap();
        if classifier.predict_set(&x).unwrap().is_null() {
            nulls += 1;
        }
    }
    println!("far-away queries flagged null: {nulls}/{n}");

    let mut in_dist_nulls = 0;
    for _ in 0..n {
        let x = FeatureVector::new(vec![
            rng.random_range(-1.0..5.0),
            rng.random_range(-1.0..1.0),
        ])
        .unwrap();
        if classifier.predict_set(&x).unwrap().is_null() {
            in_dist_nulls += 1;
        }
    }
    println!("in-distribution queries flagged null: {in_dist_nulls}/{n}");
}
