//! Built-in lightweight predictors behind one uniform batch-prediction
//! interface, so the explainer stays model-agnostic and the repository runs
//! end-to-end without external ML frameworks.
//!
//! Five families are provided: ridge-stabilized linear regression, logistic
//! regression (predictions on the logit scale, so attributions for
//! classifiers are additive in logits), a greedy CART regression tree, a
//! bagged forest of such trees, and k-nearest-neighbours on internally
//! standardized features. All fitted predictors are immutable, deterministic,
//! and safe to call from concurrent explainer workers.

mod knn;
mod linear;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::dataset::{DataMatrix, DatasetError};

pub use knn::fit_knn;
pub use linear::{fit_linear, fit_logistic, logistic_loss};
pub use tree::{fit_forest, fit_tree};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("normal-equation system is singular; add ridge regularization or drop a column")]
    SingularDesign,
    #[error("target must be binary 0/1; found value {0}")]
    NonBinaryTarget(f64),
    #[error("k = {k} exceeds the {n} training rows")]
    KTooLarge { k: usize, n: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("unknown model family '{0}'")]
    UnknownFamily(String),
    #[error("unknown model option '{0}'")]
    UnknownOption(String),
    #[error("invalid value for model option '{key}': {value}")]
    InvalidOption { key: String, value: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// What a predictor's outputs mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    /// Plain regression score in target units.
    RegressionScore,
    /// Pre-sigmoid score of a binary classifier; attributions computed on
    /// this output are additive on the logit scale.
    ClassificationLogit,
}

pub(crate) trait Predict: Send + Sync {
    fn predict_row(&self, row: &[f64]) -> f64;
}

/// Opaque deterministic batch predictor: a pure function from a b×m row-major
/// matrix to b outputs. Cloning shares the underlying model.
#[derive(Clone)]
pub struct PredictorHandle {
    inner: Arc<dyn Predict>,
    output_kind: OutputKind,
    descriptor: String,
    width: usize,
}

impl fmt::Debug for PredictorHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PredictorHandle")
            .field("descriptor", &self.descriptor)
            .field("output_kind", &self.output_kind)
            .field("width", &self.width)
            .finish()
    }
}

impl PredictorHandle {
    pub(crate) fn from_model(
        inner: Arc<dyn Predict>,
        output_kind: OutputKind,
        descriptor: String,
        width: usize,
    ) -> Self {
        PredictorHandle {
            inner,
            output_kind,
            descriptor,
            width,
        }
    }

    /// Wraps an arbitrary pure row function as a predictor. The function must
    /// be deterministic and total over finite inputs of the given width.
    pub fn from_fn<F>(width: usize, output_kind: OutputKind, descriptor: &str, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        struct FnModel<F>(F);
        impl<F: Fn(&[f64]) -> f64 + Send + Sync> Predict for FnModel<F> {
            fn predict_row(&self, row: &[f64]) -> f64 {
                (self.0)(row)
            }
        }
        PredictorHandle::from_model(
            Arc::new(FnModel(f)),
            output_kind,
            descriptor.to_string(),
            width,
        )
    }

    /// Predictions for a row-major `b × width` batch.
    pub fn predict_batch(&self, rows: &[f64], width: usize) -> Vec<f64> {
        assert_eq!(width, self.width, "predictor expects width {}", self.width);
        assert_eq!(rows.len() % width, 0, "ragged batch");
        rows.chunks_exact(width)
            .map(|row| self.inner.predict_row(row))
            .collect()
    }

    /// Single-row convenience; identical to a one-row batch.
    pub fn predict_one(&self, row: &[f64]) -> f64 {
        assert_eq!(row.len(), self.width);
        self.inner.predict_row(row)
    }

    pub fn output_kind(&self) -> OutputKind {
        self.output_kind
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    /// Number of feature columns the predictor expects.
    pub fn width(&self) -> usize {
        self.width
    }
}

/// Splits a dataset into predictors (all columns except `target`, original
/// order preserved) and the target column.
pub(crate) fn split_target(
    data: &DataMatrix,
    target: usize,
) -> Result<(DataMatrix, Vec<f64>), ModelError> {
    if target >= data.n_cols() {
        return Err(ModelError::Dataset(DatasetError::ColumnOutOfRange {
            index: target,
            width: data.n_cols(),
        }));
    }
    let predictors = data.drop_column(target)?;
    Ok((predictors, data.column(target)))
}

/// Model family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    Linear,
    Logistic,
    Tree,
    Forest,
    Knn,
}

impl ModelFamily {
    pub fn parse(name: &str) -> Result<Self, ModelError> {
        match name.to_ascii_lowercase().as_str() {
            "linear" => Ok(ModelFamily::Linear),
            "logistic" => Ok(ModelFamily::Logistic),
            "tree" => Ok(ModelFamily::Tree),
            "forest" => Ok(ModelFamily::Forest),
            "knn" => Ok(ModelFamily::Knn),
            other => Err(ModelError::UnknownFamily(other.to_string())),
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ModelFamily::Linear => "linear",
            ModelFamily::Logistic => "logistic",
            ModelFamily::Tree => "tree",
            ModelFamily::Forest => "forest",
            ModelFamily::Knn => "knn",
        };
        write!(f, "{name}")
    }
}

/// A model family plus its hyperparameters, expressible from the CLI as a
/// family name and `key=value` options.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub family: ModelFamily,
    /// ridge diagonal for `linear`
    pub ridge_eps: f64,
    /// gradient-descent step for `logistic`
    pub learning_rate: f64,
    /// gradient-descent epochs for `logistic`
    pub epochs: usize,
    /// depth bound for `tree` and forest trees
    pub max_depth: usize,
    /// leaf-size bound for `tree` and forest trees
    pub min_samples_leaf: usize,
    /// ensemble size for `forest`
    pub n_trees: usize,
    /// bag fraction for `forest`; 1.0 uses the full dataset per tree
    pub bag_fraction: f64,
    /// bagging seed for `forest`
    pub seed: u64,
    /// neighbour count for `knn`
    pub k: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            family: ModelFamily::Forest,
            ridge_eps: 1e-6,
            learning_rate: 0.1,
            epochs: 500,
            max_depth: 8,
            min_samples_leaf: 3,
            n_trees: 30,
            bag_fraction: 0.7,
            seed: 17,
            k: 5,
        }
    }
}

impl ModelSpec {
    pub fn new(family: ModelFamily) -> Self {
        ModelSpec {
            family,
            ..ModelSpec::default()
        }
    }

    /// Parses a family name plus `key=value` options, e.g.
    /// `family=forest n_trees=100 seed=7`.
    pub fn from_options(
        family: &str,
        options: &BTreeMap<String, String>,
    ) -> Result<Self, ModelError> {
        let mut spec = ModelSpec::new(ModelFamily::parse(family)?);
        for (key, value) in options {
            let bad = || ModelError::InvalidOption {
                key: key.clone(),
                value: value.clone(),
            };
            match key.as_str() {
                "ridge_eps" => spec.ridge_eps = value.parse().map_err(|_| bad())?,
                "lr" | "learning_rate" => spec.learning_rate = value.parse().map_err(|_| bad())?,
                "epochs" => spec.epochs = value.parse().map_err(|_| bad())?,
                "max_depth" => spec.max_depth = value.parse().map_err(|_| bad())?,
                "min_samples_leaf" => spec.min_samples_leaf = value.parse().map_err(|_| bad())?,
                "n_trees" => spec.n_trees = value.parse().map_err(|_| bad())?,
                "bag_fraction" => spec.bag_fraction = value.parse().map_err(|_| bad())?,
                "seed" => spec.seed = value.parse().map_err(|_| bad())?,
                "k" => spec.k = value.parse().map_err(|_| bad())?,
                other => return Err(ModelError::UnknownOption(other.to_string())),
            }
        }
        Ok(spec)
    }

    /// Fits the configured family on `data` with the given target column.
    pub fn fit(&self, data: &DataMatrix, target: usize) -> Result<PredictorHandle, ModelError> {
        match self.family {
            ModelFamily::Linear => fit_linear(data, target, self.ridge_eps),
            ModelFamily::Logistic => fit_logistic(data, target, self.learning_rate, self.epochs),
            ModelFamily::Tree => fit_tree(data, target, self.max_depth, self.min_samples_leaf),
            ModelFamily::Forest => fit_forest(
                data,
                target,
                self.n_trees,
                self.bag_fraction,
                self.seed,
                self.max_depth,
                self.min_samples_leaf,
            ),
            ModelFamily::Knn => fit_knn(data, target, self.k),
        }
    }

    /// A seed-shifted copy; scenario arms refit with separately derived seeds.
    pub fn with_seed(&self, seed: u64) -> Self {
        ModelSpec { seed, ..self.clone() }
    }
}
