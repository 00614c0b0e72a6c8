//! Model-agnostic Shapley feature attributions with a multicollinearity
//! correction.
//!
//! Permutation-sampling Shapley values implicitly assume features are
//! independent: when a feature is randomized, any correlated feature left in
//! place keeps "covering" for it and the credit is split. This crate corrects
//! for that by linearly adjusting every other numeric feature so that it is
//! empirically uncorrelated with the feature (or feature group) under
//! evaluation before its marginal contribution is measured.
//!
//! The crate is organized as:
//!
//! - [`dataset`] — tabular ingestion, feature kinds, covariance statistics,
//!   and correlated-clone injection used by the experiments;
//! - [`models`] — small built-in predictors (linear, logistic, tree, forest,
//!   k-NN) behind one uniform batch-prediction interface;
//! - [`adjust`] — the decorrelation coefficients themselves: per adjustable
//!   feature, the linear combination of coalition features that zeroes its
//!   empirical covariance with every coalition member;
//! - [`shapley`] — Monte-Carlo estimation in corrected (`mcc`) and
//!   uncorrected (`nmcc`) modes, plus an exact enumeration oracle for small
//!   feature counts;
//! - [`harness`] — synthetic data generation, experiment runners and timing
//!   comparisons that reproduce the correction patterns at desk scale.
//!
//! Alternative treatments of correlated features — permuting correlated
//! groups jointly, or sampling absent features conditionally — are
//! deliberately out of scope; this crate implements the explicit
//! decorrelation approach only.

pub mod adjust;
pub mod dataset;
pub mod harness;
mod linalg;
pub mod models;
pub mod shapley;

pub use adjust::{AdjustError, AdjustmentPlan, CoalitionSpec};
pub use dataset::{CovarianceCache, DataMatrix, DatasetError, FeatureKind};
pub use models::{ModelError, ModelSpec, OutputKind, PredictorHandle};
pub use shapley::{EstimatorConfig, Mode, ShapleyError, ShapleyEstimate, Target};
