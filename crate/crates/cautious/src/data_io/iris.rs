//! The classic three-species flower measurements, restricted to sepal
//! length and petal length in centimeters: 150 samples, 50 per species.

use super::{LabeledDataset, Record};
use crate::density::FeatureVector;

const SETOSA: &str = "setosa";
const VERSICOLOR: &str = "versicolor";
const VIRGINICA: &str = "virginica";

const ROWS: [(f64, f64, &str); 150] = [
    (5.1, 1.4, SETOSA),
    (4.9, 1.4, SETOSA),
    (4.7, 1.3, SETOSA),
    (4.6, 1.5, SETOSA),
    (5.0, 1.4, SETOSA),
    (5.4, 1.7, SETOSA),
    (4.6, 1.4, SETOSA),
    (5.0, 1.5, SETOSA),
    (4.4, 1.4, SETOSA),
    (4.9, 1.5, SETOSA),
    (5.4, 1.5, SETOSA),
    (4.8, 1.6, SETOSA),
    (4.8, 1.4, SETOSA),
    (4.3, 1.1, SETOSA),
    (5.8, 1.2, SETOSA),
    (5.7, 1.5, SETOSA),
    (5.4, 1.3, SETOSA),
    (5.1, 1.4, SETOSA),
    (5.7, 1.7, SETOSA),
    (5.1, 1.5, SETOSA),
    (5.4, 1.7, SETOSA),
    (5.1, 1.5, SETOSA),
    (4.6, 1.0, SETOSA),
    (5.1, 1.7, SETOSA),
    (4.8, 1.9, SETOSA),
    (5.0, 1.6, SETOSA),
    (5.0, 1.6, SETOSA),
    (5.2, 1.5, SETOSA),
    (5.2, 1.4, SETOSA),
    (4.7, 1.6, SETOSA),
    (4.8, 1.6, SETOSA),
    (5.4, 1.5, SETOSA),
    (5.2, 1.5, SETOSA),
    (5.5, 1.4, SETOSA),
    (4.9, 1.5, SETOSA),
    (5.0, 1.2, SETOSA),
    (5.5, 1.3, SETOSA),
    (4.9, 1.4, SETOSA),
    (4.4, 1.3, SETOSA),
    (5.1, 1.5, SETOSA),
    (5.0, 1.3, SETOSA),
    (4.5, 1.3, SETOSA),
    (4.4, 1.3, SETOSA),
    (5.0, 1.6, SETOSA),
    (5.1, 1.9, SETOSA),
    (4.8, 1.4, SETOSA),
    (5.1, 1.6, SETOSA),
    (4.6, 1.4, SETOSA),
    (5.3, 1.5, SETOSA),
    (5.0, 1.4, SETOSA),
    (7.0, 4.7, VERSICOLOR),
    (6.4, 4.5, VERSICOLOR),
    (6.9, 4.9, VERSICOLOR),
    (5.5, 4.0, VERSICOLOR),
    (6.5, 4.6, VERSICOLOR),
    (5.7, 4.5, VERSICOLOR),
    (6.3, 4.7, VERSICOLOR),
    (4.9, 3.3, VERSICOLOR),
    (6.6, 4.6, VERSICOLOR),
    (5.2, 3.9, VERSICOLOR),
    (5.0, 3.5, VERSICOLOR),
    (5.9, 4.2, VERSICOLOR),
    (6.0, 4.0, VERSICOLOR),
    (6.1, 4.7, VERSICOLOR),
    (5.6, 3.6, VERSICOLOR),
    (6.7, 4.4, VERSICOLOR),
    (5.6, 4.5, VERSICOLOR),
    (5.8, 4.1, VERSICOLOR),
    (6.2, 4.5, VERSICOLOR),
    (5.6, 3.9, VERSICOLOR),
    (5.9, 4.8, VERSICOLOR),
    (6.1, 4.0, VERSICOLOR),
    (6.3, 4.9, VERSICOLOR),
    (6.1, 4.7, VERSICOLOR),
    (6.4, 4.3, VERSICOLOR),
    (6.6, 4.4, VERSICOLOR),
    (6.8, 4.8, VERSICOLOR),
    (6.7, 5.0, VERSICOLOR),
    (6.0, 4.5, VERSICOLOR),
    (5.7, 3.5, VERSICOLOR),
    (5.5, 3.8, VERSICOLOR),
    (5.5, 3.7, VERSICOLOR),
    (5.8, 3.9, VERSICOLOR),
    (6.0, 5.1, VERSICOLOR),
    (5.4, 4.5, VERSICOLOR),
    (6.0, 4.5, VERSICOLOR),
    (6.7, 4.7, VERSICOLOR),
    (6.3, 4.4, VERSICOLOR),
    (5.6, 4.1, VERSICOLOR),
    (5.5, 4.0, VERSICOLOR),
    (5.5, 4.4, VERSICOLOR),
    (6.1, 4.6, VERSICOLOR),
    (5.8, 4.0, VERSICOLOR),
    (5.0, 3.3, VERSICOLOR),
    (5.6, 4.2, VERSICOLOR),
    (5.7, 4.2, VERSICOLOR),
    (5.7, 4.2, VERSICOLOR),
    (6.2, 4.3, VERSICOLOR),
    (5.1, 3.0, VERSICOLOR),
    (5.7, 4.1, VERSICOLOR),
    (6.3, 6.0, VIRGINICA),
    (5.8, 5.1, VIRGINICA),
    (7.1, 5.9, VIRGINICA),
    (6.3, 5.6, VIRGINICA),
    (6.5, 5.8, VIRGINICA),
    (7.6, 6.6, VIRGINICA),
    (4.9, 4.5, VIRGINICA),
    (7.3, 6.3, VIRGINICA),
    (6.7, 5.8, VIRGINICA),
    (7.2, 6.1, VIRGINICA),
    (6.5, 5.1, VIRGINICA),
    (6.4, 5.3, VIRGINICA),
    (6.8, 5.5, VIRGINICA),
    (5.7, 5.0, VIRGINICA),
    (5.8, 5.1, VIRGINICA),
    (6.4, 5.3, VIRGINICA),
    (6.5, 5.5, VIRGINICA),
    (7.7, 6.7, VIRGINICA),
    (7.7, 6.9, VIRGINICA),
    (6.0, 5.0, VIRGINICA),
    (6.9, 5.7, VIRGINICA),
    (5.6, 4.9, VIRGINICA),
    (7.7, 6.7, VIRGINICA),
    (6.3, 4.9, VIRGINICA),
    (6.7, 5.7, VIRGINICA),
    (7.2, 6.0, VIRGINICA),
    (6.2, 4.8, VIRGINICA),
    (6.1, 4.9, VIRGINICA),
    (6.4, 5.6, VIRGINICA),
    (7.2, 5.8, VIRGINICA),
    (7.4, 6.1, VIRGINICA),
    (7.9, 6.4, VIRGINICA),
    (6.4, 5.6, VIRGINICA),
    (6.3, 5.1, VIRGINICA),
    (6.1, 5.6, VIRGINICA),
    (7.7, 6.1, VIRGINICA),
    (6.3, 5.6, VIRGINICA),
    (6.4, 5.5, VIRGINICA),
    (6.0, 4.8, VIRGINICA),
    (6.9, 5.4, VIRGINICA),
    (6.7, 5.6, VIRGINICA),
    (6.9, 5.1, VIRGINICA),
    (5.8, 5.1, VIRGINICA),
    (6.8, 5.9, VIRGINICA),
    (6.7, 5.7, VIRGINICA),
    (6.7, 5.2, VIRGINICA),
    (6.3, 5.0, VIRGINICA),
    (6.5, 5.2, VIRGINICA),
    (6.2, 5.4, VIRGINICA),
    (5.9, 5.1, VIRGINICA),
];

/// The embedded dataset: ids "iris000" through "iris149".
pub fn iris_fixture() -> LabeledDataset {
    let records = ROWS
        .iter()
        .enumerate()
        .map(|(i, (sepal, petal, species))| Record {
            id: format!("iris{i:03}"),
            label: Some(species.to_string()),
            features: FeatureVector::new(vec![*sepal, *petal]).expect("embedded data is finite"),
        })
        .collect();
    LabeledDataset::from_records(2, records).expect("embedded data is well formed")
}
