//! Versioned on-disk model directories.
//!
//! A model is a directory: `manifest.json` (format version, dimension,
//! training configuration, class index) plus one JSON file per class with
//! the fitted estimator and calibration state. All floats round-trip
//! bit-exactly; thresholds may be infinite, so they are encoded as
//! `"inf"`/`"-inf"` strings where JSON numbers cannot reach.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::conformal::{CautiousClassifier, ClassModel, TrainConfig};
use crate::density::{DensityModel, FeatureVector};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: &str = "1";

const MANIFEST_NAME: &str = "manifest.json";

/// JSON codec for f64 values that may be infinite: finite values stay
/// numbers, the rest become marker strings.
mod wide_float {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(super) enum Repr {
        Number(f64),
        Marker(String),
    }

    pub(super) fn decode<E: serde::de::Error>(repr: Repr) -> Result<f64, E> {
        match repr {
            Repr::Number(v) => Ok(v),
            Repr::Marker(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("unknown float marker {other:?}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        decode(Repr::deserialize(d)?)
    }

    pub mod vec {
        use super::Repr;
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
            struct One(f64);
            impl serde::Serialize for One {
                fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                    super::serialize(&self.0, s)
                }
            }
            let mut seq = s.serialize_seq(Some(values.len()))?;
            for v in values {
                seq.serialize_element(&One(*v))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<Repr>::deserialize(d)?
                .into_iter()
                .map(super::decode)
                .collect()
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: String,
    dim: usize,
    config: TrainConfig,
    interaction_shift: Option<f64>,
    classes: Vec<ClassEntry>,
}

#[derive(Serialize, Deserialize)]
struct ClassEntry {
    label: String,
    file: String,
}

#[derive(Serialize, Deserialize)]
struct ClassFile {
    label: String,
    alpha: f64,
    #[serde(with = "wide_float")]
    threshold: f64,
    omitted: bool,
    n_fit: usize,
    n_cal: usize,
    estimator: DensityModel,
    calibration_points: Vec<FeatureVector>,
    #[serde(with = "wide_float::vec")]
    calibration_scores: Vec<f64>,
}

/// Filesystem-safe, deterministic, collision-free file name for a class.
fn class_file_name(label: &str) -> String {
    let slug: String = label
        .chars()
        .take(40)
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect();
    let digest = Sha256::digest(label.as_bytes());
    let hash: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    if slug.is_empty() {
        format!("class_{hash}.json")
    } else {
        format!("class_{slug}_{hash}.json")
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::IoFailure(io::Error::new(io::ErrorKind::InvalidData, e)))?;
    text.push('\n');
    Ok(text)
}

/// Writes the classifier as a model directory. The content is assembled
/// in a scratch directory first and moved into place, so a failed save
/// never leaves a half-written model at `dir`.
pub fn save_model<P: AsRef<Path>>(dir: P, classifier: &CautiousClassifier) -> Result<()> {
    let dir = dir.as_ref();
    let parent = dir.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(parent)?;
    let scratch = tempfile::Builder::new()
        .prefix(".model-partial-")
        .tempdir_in(parent)?;

    let mut entries = Vec::new();
    for class in classifier.classes() {
        let file = class_file_name(class.label());
        let payload = ClassFile {
            label: class.label().to_string(),
            alpha: class.alpha(),
            threshold: class.threshold(),
            omitted: class.omitted(),
            n_fit: class.n_fit(),
            n_cal: class.n_cal(),
            estimator: class.estimator().clone(),
            calibration_points: class.calibration_points().to_vec(),
            calibration_scores: class.calibration_scores().to_vec(),
        };
        fs::write(scratch.path().join(&file), to_json(&payload)?)?;
        entries.push(ClassEntry {
            label: class.label().to_string(),
            file,
        });
    }
    let manifest = Manifest {
        format_version: MODEL_FORMAT_VERSION.to_string(),
        dim: classifier.dim(),
        config: classifier.config().clone(),
        interaction_shift: classifier.interaction_shift(),
        classes: entries,
    };
    fs::write(scratch.path().join(MANIFEST_NAME), to_json(&manifest)?)?;

    if dir.exists() {
        fs::remove_dir_all(dir)?;
    }
    fs::rename(scratch.keep(), dir)?;
    Ok(())
}

fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_NAME);
    let text = match fs::read_to_string(&path) {
        Ok(text) => text,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Err(Error::CorruptManifest(format!(
                "no {MANIFEST_NAME} in {}",
                dir.display()
            )))
        }
        Err(e) => return Err(e.into()),
    };
    serde_json::from_str(&text).map_err(|e| Error::CorruptManifest(e.to_string()))
}

/// Reads a model directory back into a classifier whose every prediction
/// is bit-identical to the one that was saved.
pub fn load_model<P: AsRef<Path>>(dir: P) -> Result<CautiousClassifier> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    if manifest.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            supported: MODEL_FORMAT_VERSION.to_string(),
            found: manifest.format_version,
        });
    }
    let mut classes: BTreeMap<String, ClassModel> = BTreeMap::new();
    for entry in &manifest.classes {
        let path: PathBuf = dir.join(&entry.file);
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(Error::MissingClassFile {
                    label: entry.label.clone(),
                    path,
                })
            }
            Err(e) => return Err(e.into()),
        };
        let payload: ClassFile = serde_json::from_str(&text)
            .map_err(|e| Error::CorruptManifest(format!("{}: {e}", entry.file)))?;
        if payload.label != entry.label {
            return Err(Error::CorruptManifest(format!(
                "{} holds class {:?}, manifest says {:?}",
                entry.file, payload.label, entry.label
            )));
        }
        if payload.calibration_points.len() != payload.n_cal
            || payload.calibration_scores.len() != payload.n_cal
        {
            return Err(Error::CorruptManifest(format!(
                "class {:?}: calibration data does not match n_cal = {}",
                entry.label, payload.n_cal
            )));
        }
        if payload.estimator.n_points() != payload.n_fit {
            return Err(Error::CorruptManifest(format!(
                "class {:?}: estimator holds {} points, n_fit = {}",
                entry.label,
                payload.estimator.n_points(),
                payload.n_fit
            )));
        }
        let model = ClassModel {
            label: payload.label,
            alpha: payload.alpha,
            threshold: payload.threshold,
            omitted: payload.omitted,
            n_fit: payload.n_fit,
            n_cal: payload.n_cal,
            estimator: payload.estimator,
            calibration_points: payload.calibration_points,
            calibration_scores: payload.calibration_scores,
        };
        if classes.insert(model.label.clone(), model).is_some() {
            return Err(Error::CorruptManifest(format!(
                "class {:?} listed twice",
                entry.label
            )));
        }
    }
    CautiousClassifier::from_parts(
        manifest.config,
        manifest.dim,
        classes,
        manifest.interaction_shift,
    )
}
