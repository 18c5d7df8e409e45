//! Set-valued predictions on the built-in iris data (sepal length and
//! petal length only). Points near a class center get a singleton,
//! points between versicolor and virginica can get both labels, and a
//! point far from every flower gets the empty set: "I don't know".

use cautious::{iris_fixture, CautiousClassifier, FeatureVector, TrainConfig};

fn main() {
    let data = iris_fixture();
    let config = TrainConfig {
        alpha: 0.05,
        min_cal_size: 10,
        ..TrainConfig::default()
    };
    let classifier = CautiousClassifier::train(&data.labeled_pairs(), config).unwrap();

    println!("trained on {} flowers, alpha = 0.05", data.len());
    println!("{:<28} {}", "query (sepal len, petal len)", "prediction set");
    let queries = [
        (5.0, 1.5, "a typical setosa"),
        (5.9, 4.3, "a typical versicolor"),
        (6.7, 5.8, "a typical virginica"),
        (6.2, 4.9, "on the versicolor/virginica boundary"),
        (5.4, 2.6, "in the gap below versicolor"),
        (20.0, 20.0, "nothing like any iris"),
    ];
    for (a, b, note) in queries {
        let x = FeatureVector::new(vec![a, b]).unwrap();
        let set = classifier.predict_set(&x).unwrap();
        let shown = if set.is_null() {
            "{} (null)".to_string()
        } else {
            format!("{{{}}}", set.labels().join(", "))
        };
        println!("{:<28} {:<28} {note}", format!("({a}, {b})"), shown);
    }
}
