//! Dataset ingestion, CSV interchange, synthetic oracles, and model
//! persistence.
//!
//! CSV is the interchange format for features, prediction sets, and
//! metrics. Floats are written in shortest round-trip decimal form, so a
//! save/load cycle reproduces every bit.

use std::collections::BTreeSet;
use std::path::Path;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::conformal::PredictionSet;
use crate::density::FeatureVector;
use crate::error::{Error, Result};
use crate::evaluation::EvalReport;

mod iris;
mod model_store;

pub use iris::iris_fixture;
pub use model_store::{load_model, save_model, MODEL_FORMAT_VERSION};

/// One dataset row: an id, an optional label, and a feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub id: String,
    pub label: Option<String>,
    pub features: FeatureVector,
}

/// Rows with unique ids and a consistent dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    dim: usize,
    records: Vec<Record>,
}

impl LabeledDataset {
    /// Validates uniqueness of ids and dimensional consistency. `dim` must
    /// be given explicitly so that an empty dataset still knows its shape.
    pub fn from_records(dim: usize, records: Vec<Record>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        for (i, record) in records.iter().enumerate() {
            if record.features.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: record.features.dim(),
                });
            }
            if !seen.insert(record.id.clone()) {
                return Err(Error::DuplicateId {
                    line: i as u64 + 2,
                    id: record.id.clone(),
                });
            }
        }
        Ok(Self { dim, records })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    /// The distinct labels present (unlabeled rows contribute nothing).
    pub fn inventory(&self) -> BTreeSet<String> {
        self.records
            .iter()
            .filter_map(|r| r.label.clone())
            .collect()
    }

    /// The labeled rows as (label, features) pairs, ready for training or
    /// evaluation. Unlabeled rows are dropped.
    pub fn labeled_pairs(&self) -> Vec<(String, FeatureVector)> {
        self.records
            .iter()
            .filter_map(|r| r.label.clone().map(|l| (l, r.features.clone())))
            .collect()
    }
}

pub(crate) fn map_csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::IoFailure(io),
            _ => unreachable!("is_io_error guarantees an io kind"),
        }
    } else {
        Error::InvalidFeature(format!("unreadable csv content: {e}"))
    }
}

/// Reads `id,label,f0,...,f{d-1}` rows. The label field may be empty
/// (an unlabeled row). Errors carry 1-based line numbers.
pub fn load_features_csv<P: AsRef<Path>>(path: P) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(map_csv_error)?;
    let header = reader.headers().map_err(map_csv_error)?.clone();
    if header.len() < 3 || &header[0] != "id" || &header[1] != "label" {
        return Err(Error::MalformedHeader(format!(
            "expected `id,label,f0,...`, got {:?}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let dim = header.len() - 2;
    for (j, field) in header.iter().skip(2).enumerate() {
        let expected = format!("f{j}");
        if field != expected {
            return Err(Error::MalformedHeader(format!(
                "feature column {} must be named {expected:?}, got {field:?}",
                j + 2
            )));
        }
    }

    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for row in reader.records() {
        let row = row.map_err(map_csv_error)?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != dim + 2 {
            return Err(Error::RaggedRow {
                line,
                expected: dim + 2,
                found: row.len(),
            });
        }
        let id = row[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { line, id });
        }
        let label = if row[1].is_empty() {
            None
        } else {
            Some(row[1].to_string())
        };
        let mut values = Vec::with_capacity(dim);
        for raw in row.iter().skip(2) {
            let value = f64::from_str(raw).ok().filter(|v| v.is_finite());
            match value {
                Some(v) => values.push(v),
                None => {
                    return Err(Error::NonFiniteValue {
                        line,
                        value: raw.to_string(),
                    })
                }
            }
        }
        records.push(Record {
            id,
            label,
            features: FeatureVector::new(values)?,
        });
    }
    Ok(LabeledDataset { dim, records })
}

/// Writes the schema `load_features_csv` reads, with round-trip-exact
/// floats.
pub fn save_features_csv<P: AsRef<Path>>(path: P, dataset: &LabeledDataset) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(map_csv_error)?;
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend((0..dataset.dim()).map(|j| format!("f{j}")));
    writer.write_record(&header).map_err(map_csv_error)?;
    for record in dataset.records() {
        let mut row = vec![
            record.id.clone(),
            record.label.clone().unwrap_or_default(),
        ];
        row.extend(record.features.values().iter().map(|v| v.to_string()));
        writer.write_record(&row).map_err(map_csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes `id,labels,set_size,is_null` rows; `labels` is the
/// `|`-joined ascending label list, empty for null sets.
pub fn save_prediction_sets<P: AsRef<Path>>(
    path: P,
    rows: &[(String, PredictionSet)],
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(map_csv_error)?;
    writer
        .write_record(["id", "labels", "set_size", "is_null"])
        .map_err(map_csv_error)?;
    for (id, set) in rows {
        writer
            .write_record([
                id.as_str(),
                &set.labels().join("|"),
                &set.len().to_string(),
                if set.is_null() { "true" } else { "false" },
            ])
            .map_err(map_csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes `alpha,coverage,ambiguity,null_rate,n_eval,out_of_inventory`
/// rows, one per report.
pub fn save_metrics_csv<P: AsRef<Path>>(path: P, reports: &[EvalReport]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(map_csv_error)?;
    writer
        .write_record([
            "alpha",
            "coverage",
            "ambiguity",
            "null_rate",
            "n_eval",
            "out_of_inventory",
        ])
        .map_err(map_csv_error)?;
    for r in reports {
        writer
            .write_record([
                r.alpha.to_string(),
                r.coverage.to_string(),
                r.ambiguity.to_string(),
                r.null_rate.to_string(),
                r.n_eval.to_string(),
                r.out_of_inventory.to_string(),
            ])
            .map_err(map_csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// One class of a synthetic isotropic Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureClass {
    pub label: String,
    pub weight: f64,
    pub mean: Vec<f64>,
    pub variance: f64,
}

/// A fully specified mixture: the ground truth behind synthetic datasets,
/// with its class densities available in closed form as test oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub classes: Vec<MixtureClass>,
    pub dim: usize,
    pub n_total: usize,
    pub seed: u64,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::InvalidSpec("no mixture classes".into()));
        }
        if self.dim == 0 {
            return Err(Error::InvalidSpec("dimension must be positive".into()));
        }
        let mut labels = BTreeSet::new();
        let mut weight_sum = 0.0;
        for class in &self.classes {
            if !labels.insert(class.label.clone()) {
                return Err(Error::InvalidSpec(format!(
                    "duplicate mixture label {:?}",
                    class.label
                )));
            }
            if !(class.weight.is_finite() && class.weight > 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "class {:?} weight must be positive, got {}",
                    class.label, class.weight
                )));
            }
            if !(class.variance.is_finite() && class.variance > 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "class {:?} variance must be positive, got {}",
                    class.label, class.variance
                )));
            }
            if class.mean.len() != self.dim {
                return Err(Error::InvalidSpec(format!(
                    "class {:?} mean has {} coordinates, dim is {}",
                    class.label,
                    class.mean.len(),
                    self.dim
                )));
            }
            if class.mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "class {:?} mean has a non-finite coordinate",
                    class.label
                )));
            }
            weight_sum += class.weight;
        }
        if (weight_sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!(
                "weights must sum to 1, got {weight_sum}"
            )));
        }
        Ok(())
    }

    /// Exact log-density of one class at `x`.
    pub fn log_density(&self, label: &str, x: &[f64]) -> Result<f64> {
        let class = self
            .classes
            .iter()
            .find(|c| c.label == label)
            .ok_or_else(|| Error::UnknownClass(label.to_string()))?;
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let d = self.dim as f64;
        let sq: f64 = x
            .iter()
            .zip(&class.mean)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(-0.5 * d * (2.0 * std::f64::consts::PI * class.variance).ln()
            - sq / (2.0 * class.variance))
    }

    /// The label maximizing weight * density at `x` (ties keep the
    /// class listed first).
    pub fn bayes_label(&self, x: &[f64]) -> Result<&str> {
        let mut best: Option<(&str, f64)> = None;
        for class in &self.classes {
            let value = class.weight.ln() + self.log_density(&class.label, x)?;
            if best.is_none_or(|(_, b)| value > b) {
                best = Some((&class.label, value));
            }
        }
        Ok(best.expect("validated specs have classes").0)
    }
}

/// Draws a seeded dataset from the mixture: each row picks a class by
/// weight, then a point from that class's Gaussian. Ids are `s0`, `s1`, …
pub fn synth_mixture(spec: &MixtureSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let weights = WeightedIndex::new(spec.classes.iter().map(|c| c.weight))
        .map_err(|e| Error::InvalidSpec(format!("unusable weights: {e}")))?;
    let mut records = Vec::with_capacity(spec.n_total);
    for i in 0..spec.n_total {
        let class = &spec.classes[weights.sample(&mut rng)];
        let sigma = class.variance.sqrt();
        let values: Vec<f64> = class
            .mean
            .iter()
            .map(|m| {
                let z: f64 = rng.sample(StandardNormal);
                m + sigma * z
            })
            .collect();
        records.push(Record {
            id: format!("s{i}"),
            label: Some(class.label.clone()),
            features: FeatureVector::new(values)?,
        });
    }
    Ok(LabeledDataset {
        dim: spec.dim,
        records,
    })
}
