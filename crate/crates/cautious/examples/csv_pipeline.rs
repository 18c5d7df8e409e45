//! The whole file-based workflow in one place: synthesize a labeled
//! feature CSV, train from it, save the model directory, load it back,
//! predict on a query file, and write the prediction-set CSV. The same
//! steps the command line runs, driven from library calls.

use cautious::{
    load_features_csv, load_model, save_features_csv, save_model, save_prediction_sets,
    synth_mixture, CautiousClassifier, MixtureClass, MixtureSpec, TrainConfig,
};

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let train_csv = dir.path().join("train.csv");
    let model_dir = dir.path().join("model");
    let sets_csv = dir.path().join("sets.csv");

    let spec = MixtureSpec {
        classes: vec![
            MixtureClass {
                label: "low".into(),
                weight: 0.5,
                mean: vec![-2.0, 0.0],
                variance: 0.8,
            },
            MixtureClass {
                label: "high".into(),
                weight: 0.5,
                mean: vec![2.0, 0.0],
                variance: 0.8,
            },
        ],
        dim: 2,
        n_total: 1000,
        seed: 13,
    };
    save_features_csv(&train_csv, &synth_mixture(&spec).unwrap()).unwrap();
    println!("wrote {}", train_csv.display());

    let dataset = load_features_csv(&train_csv).unwrap();
    let classifier =
        CautiousClassifier::train(&dataset.labeled_pairs(), TrainConfig::default()).unwrap();
    save_model(&model_dir, &classifier).unwrap();
    println!("model saved to {}", model_dir.display());

    let reloaded = load_model(&model_dir).unwrap();
    let queries = synth_mixture(&MixtureSpec { seed: 14, n_total: 8, ..spec }).unwrap();
    let rows: Vec<_> = queries
        .records()
        .iter()
        .map(|r| {
            (
                r.id.clone(),
                reloaded.predict_set(&r.features).unwrap(),
            )
        })
        .collect();
    save_prediction_sets(&sets_csv, &rows).unwrap();

    println!("predictions:\n");
    print!("{}", std::fs::read_to_string(&sets_csv).unwrap());
}
