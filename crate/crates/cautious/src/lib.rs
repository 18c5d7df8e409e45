//! Set-valued classification with per-class density scores.
//!
//! A classifier here never forces a single label. For a query `x` it returns
//! the set of classes whose estimated density at `x` clears a per-class
//! threshold calibrated on held-out data. The set can contain several labels
//! when classes overlap, and it can be empty, which is the classifier
//! saying "none of the classes I know look like this".
//!
//! Thresholds are plain order statistics of calibration scores, so the
//! construction inherits distribution-free coverage: with the finite-sample
//! quantile rule the chance that the true label is missing from the set is
//! at most alpha, for any data distribution and any score function.
//!
//! See the `examples/` directory for end-to-end walkthroughs of each
//! capability; the `cautious` binary exposes the same operations over CSV
//! files.

pub mod cli;
pub mod conformal;
pub mod data_io;
pub mod density;
pub mod error;
pub mod evaluation;

pub use conformal::{
    calibrate_threshold, conformal_pvalue, CautiousClassifier, ClassModel, EstimatorKind,
    PredictionSet, QuantileMode, TrainConfig,
};
pub use density::{BandwidthRule, DensityModel, FeatureVector};
pub use data_io::{
    iris_fixture, load_features_csv, load_model, save_features_csv, save_metrics_csv,
    save_model, save_prediction_sets, synth_mixture, LabeledDataset, MixtureClass, MixtureSpec,
    Record, MODEL_FORMAT_VERSION,
};
pub use error::{Error, Result};
pub use evaluation::{alpha_sweep, evaluate, topk_accuracy, EvalReport};
